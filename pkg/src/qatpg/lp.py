"""Dense revised simplex for the L1 problems used by the SPD optimizer.

``solve_l1(M, b, w)`` minimises ``sum_j w_j |x_j|`` subject to ``M x = b`` by
splitting ``x = u - v`` with ``u, v >= 0``.  Pricing uses Devex reference
weights with reduced costs updated from the pivot row; after a run of
degenerate pivots the entering column is drawn at random (seeded)
until the objective moves again, which breaks cycles.  The ratio test is the
Harris two-pass variant.  Degenerate vertices are avoided by pivoting on a
slightly perturbed right-hand side (see ``simplex``).
"""
from __future__ import annotations

import numpy as np
import scipy.linalg


class LPError(ArithmeticError):
    pass


def independent_rows(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal set of linearly independent rows of ``m``."""
    if m.shape[0] == 0:
        return np.arange(0)
    _, r, piv = scipy.linalg.qr(m.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return np.arange(0)
    rank = int(np.sum(diag > tol * max(1.0, diag[0])))
    return np.sort(piv[:rank])


PIVOT_TOL = 1e-9
HARRIS_SHIFT = 1e-10
REFACTOR = 60


class _Simplex:
    def __init__(self, a: np.ndarray, b: np.ndarray, tol: float):
        self.a = a
        self.b = b
        self.m, self.ncol = a.shape
        self.tol = tol

    def run(self, cost: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
            max_iter: int) -> np.ndarray:
        a, tol = self.a, self.tol
        rng = np.random.default_rng(0)
        gamma = np.ones(self.ncol)
        degenerate_run = 0
        stalled = False
        last_obj = np.inf
        since = REFACTOR
        for _ in range(max_iter):
            if since >= REFACTOR:
                try:
                    binv = np.linalg.inv(a[:, basis])
                except np.linalg.LinAlgError:
                    raise LPError("basis became singular") from None
                xb = binv @ self.b
                d = cost - (cost[basis] @ binv) @ a
                since = 0
            eligible = (d < -tol) & allowed
            eligible[basis] = False
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                if since == 0:
                    return basis
                since = REFACTOR  # confirm optimality on fresh reduced costs
                continue
            if stalled:
                # random entering columns break degenerate cycles
                q = int(rng.choice(cand))
            else:
                q = int(cand[np.argmax(d[cand] ** 2 / gamma[cand])])
            u = binv @ a[:, q]
            pos = u > PIVOT_TOL * max(1.0, float(np.abs(u).max()))
            if not pos.any():
                raise LPError("problem is unbounded")
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(xb[pos], 0.0) / u[pos]
            # Harris two-pass test: largest pivot among rows within a small bound shift
            bound = ((np.maximum(xb[pos], 0.0) + HARRIS_SHIFT) / u[pos]).min()
            near = np.flatnonzero(ratios <= bound)
            r = int(near[np.argmax(u[near])])
            tmin = ratios[r]
            row = (binv[r] @ a) / u[r]
            d -= d[q] * row
            # devex reference weights, reset when they grow too large
            gq = gamma[q]
            gamma = np.maximum(gamma, row ** 2 * gq)
            gamma[basis[r]] = max(gq / u[r] ** 2, 1.0)
            if gamma.max() > 1e6:
                gamma[:] = 1.0
            binv[r] /= u[r]
            others = np.arange(self.m) != r
            binv[others] -= np.outer(u[others], binv[r])
            xb = xb - tmin * u
            xb[r] = tmin
            basis[r] = q
            since += 1
            obj = float(cost[basis] @ xb)
            if obj < last_obj - 1e-14 * max(1.0, abs(obj)):
                degenerate_run = 0
                stalled = False
                last_obj = obj
            else:
                degenerate_run += 1
                stalled = degenerate_run > 20
        raise LPError("iteration limit reached")

    def restore_feasibility(self, cost: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
                            b: np.ndarray, feas: float, max_iter: int) -> np.ndarray:
        """Dual simplex pivots from a dual feasible basis until ``B^-1 b >= -feas``."""
        a = self.a
        for _ in range(max_iter):
            binv = np.linalg.inv(a[:, basis])
            xb = binv @ b
            r = int(np.argmin(xb))
            if xb[r] >= -feas:
                return basis
            d = cost - (cost[basis] @ binv) @ a
            row = binv[r] @ a
            ok = allowed & (row < -PIVOT_TOL)
            ok[basis] = False
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                raise LPError("problem is infeasible")
            ratios = np.maximum(d[cand], 0.0) / -row[cand]
            # largest pivot among near-minimal dual ratios
            near = cand[ratios <= ratios.min() + self.tol]
            basis[r] = int(near[np.argmax(-row[near])])
        raise LPError("iteration limit reached")


def _optimal_basis(a: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float,
                   max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Two-phase revised simplex on ``a x = b`` with b >= 0; returns (basis, ext)."""
    m, ncol = a.shape
    ext = np.hstack([a, np.eye(m)])
    solver = _Simplex(ext, b, tol)
    allowed = np.ones(ncol + m, dtype=bool)
    basis = np.arange(ncol, ncol + m)
    phase1 = np.concatenate([np.zeros(ncol), np.ones(m)])
    basis = solver.run(phase1, basis, allowed, max_iter)
    xb = np.linalg.solve(ext[:, basis], b)
    if phase1[basis] @ xb > 1e-8 * max(1.0, np.abs(b).max()):
        raise LPError("problem is infeasible")
    # drive zero-level artificials out of the basis
    for r in range(m):
        if basis[r] < ncol:
            continue
        binv = np.linalg.inv(ext[:, basis])
        row = binv[r] @ a
        row[basis[basis < ncol]] = 0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) <= 1e-9:
            raise LPError("redundant constraint row")
        basis[r] = j
    allowed[ncol:] = False
    cost = np.concatenate([c, np.zeros(m)])
    basis = solver.run(cost, basis, allowed, max_iter)
    return basis, ext


def simplex(a: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float = 1e-10,
            max_iter: int | None = None, perturb: float = 1e-7, seed: int = 0) -> np.ndarray:
    """Solve ``min c.x  s.t.  a x = b, x >= 0`` for full-row-rank ``a``.

    Degenerate problems stall the simplex, so the pivots run on a right-hand
    side shifted by a small random positive amount.  Reduced costs do not
    depend on b, so the final basis stays dual feasible on the true b and dual
    simplex pivots restore primal feasibility.  If that fails the shift is
    shrunk and, as a last resort, removed.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, ncol = a.shape
    if m == 0:
        return np.zeros(ncol)
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1
    max_iter = max_iter or 50 * (m + ncol)
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.abs(b).max()))
    for eta in (perturb, perturb * 1e-3, 0.0):
        shifted = b + eta * scale * rng.uniform(0.5, 1.0, size=m)
        try:
            basis, ext = _optimal_basis(a, shifted, c, tol, max_iter)
        except LPError:
            if eta == 0.0:
                raise
            continue
        allowed = np.arange(ncol + m) < ncol
        cost = np.concatenate([c, np.zeros(m)])
        try:
            basis = _Simplex(ext, b, tol).restore_feasibility(cost, basis, allowed, b,
                                                              1e-12 * scale, max_iter)
        except (LPError, np.linalg.LinAlgError):
            continue
        xb = np.linalg.solve(ext[:, basis], b)
        x = np.zeros(ncol + m)
        x[basis] = np.maximum(xb, 0.0)
        return x[:ncol]
    raise LPError("could not recover a feasible optimal basis")


def solve_l1(m: np.ndarray, b: np.ndarray, w: np.ndarray, method: str = "simplex",
             drop_dependent: bool = True) -> tuple[np.ndarray, float]:
    """Minimise ``sum w_j |x_j|`` subject to ``m x = b``; returns (x, objective)."""
    m = np.asarray(m, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    if drop_dependent:
        rows = independent_rows(m)
        resid = None
        if rows.size < m.shape[0]:
            keep_m, keep_b = m[rows], b[rows]
            resid = (m, b)
            m, b = keep_m, keep_b
    n = m.shape[1]
    a = np.hstack([m, -m])
    c = np.concatenate([w, w])
    if method == "simplex":
        uv = simplex(a, b, c)
    elif method == "highs":
        from scipy.optimize import linprog

        res = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        if res.status != 0:
            raise LPError(res.message)
        uv = res.x
    else:
        raise ValueError(f"unknown LP method {method!r}")
    x = uv[:n] - uv[n:]
    if drop_dependent and resid is not None:
        full_m, full_b = resid
        if np.abs(full_m @ x - full_b).max() > 1e-7:
            raise LPError("dropped rows are inconsistent with the solution")
    return x, float(w @ np.abs(x))


class ColumnGenerationL1:
    """``min sum w_j |x_j|  s.t.  sum_j x_j m_j = b`` over a large implicit column family.

    Only a pool of columns is kept in the simplex.  After each solve the duals
    ``y`` price every column through ``products(y) = [m_j . y]``; columns with
    ``|m_j . y| > w_j`` enter the pool.  Artificial columns with cost ``big``
    keep the restricted problem feasible, so successive solves (and solves
    with new weights) warm-start from the previous basis.
    """

    def __init__(self, b: np.ndarray, products, column, start=(), tol: float = 1e-9,
                 big: float = 1e3, batch: int = 256, perturb: float = 1e-7, seed: int = 0,
                 max_rounds: int = 500):
        self.b = np.asarray(b, dtype=float)
        m = self.b.size
        self.sgn = np.where(self.b < 0, -1.0, 1.0)
        scale = max(1.0, float(np.abs(self.b).max()))
        self.scale = scale
        rng = np.random.default_rng(seed)
        self.shifted = np.abs(self.b) + perturb * scale * rng.uniform(0.5, 1.0, size=m)
        self.products = products
        self.column = column
        self.tol = tol
        self.big = big
        self.batch = batch
        self.max_rounds = max_rounds
        self.ids: list[int] = []
        self._pos: dict[int, int] = {}
        self._store = np.zeros((m, 256))
        self.basis = np.arange(m)
        self.y = np.zeros(m)
        for j in start:
            self._add(int(j))

    def _add(self, j: int):
        if j in self._pos:
            return
        self._pos[j] = len(self.ids)
        self.ids.append(j)
        v = self.sgn * np.asarray(self.column(j), dtype=float)
        k = 2 * len(self.ids)
        if k > self._store.shape[1]:
            grown = np.zeros((self.b.size, 2 * k))
            grown[:, : k - 2] = self._store[:, : k - 2]
            self._store = grown
        self._store[:, k - 2] = v
        self._store[:, k - 1] = -v

    @property
    def cols(self) -> np.ndarray:
        return self._store[:, : 2 * len(self.ids)]

    def lower_bound(self, weights: np.ndarray) -> float:
        """Lower bound on the optimum for ``weights`` from the last duals."""
        viol = np.max(np.abs(self.products(self.y)) / weights)
        return float(self.b @ self.y) / viol if viol > 0 else 0.0

    def solve(self, weights: np.ndarray) -> tuple[list[int], np.ndarray]:
        """Optimal ``(ids, x)`` for the given per-column weights."""
        weights = np.asarray(weights, dtype=float)
        m = self.b.size
        wtol = self.tol * max(1.0, float(weights.max()))
        for _ in range(self.max_rounds):
            # columns are scaled to unit cost
            w = np.repeat(weights[self.ids], 2)
            a = np.hstack([np.eye(m), self.cols / w])
            cost = np.concatenate([np.full(m, self.big), np.ones(w.size)])
            solver = _Simplex(a, self.shifted, 1e-10)
            self.basis = solver.run(cost, self.basis.copy(), np.ones(a.shape[1], dtype=bool),
                                    50 * a.shape[1])
            y = np.linalg.solve(a[:, self.basis].T, cost[self.basis]) * self.sgn
            self.y = y
            viol = np.abs(self.products(y)) - weights
            if self.ids:
                viol[self.ids] = -np.inf
            order = np.argsort(-viol)[: self.batch]
            new = [int(j) for j in order if viol[j] > wtol]
            if not new:
                return self._extract(a, cost, weights)
            for j in new:
                self._add(j)
        raise LPError("column generation did not converge")

    def _extract(self, a: np.ndarray, cost: np.ndarray,
                 weights: np.ndarray) -> tuple[list[int], np.ndarray]:
        m = self.b.size
        target = np.abs(self.b)
        try:
            # the perturbed optimum stays dual feasible: repair it on the true b
            basis = _Simplex(a, target, 1e-10).restore_feasibility(
                cost, self.basis.copy(), np.ones(a.shape[1], dtype=bool), target,
                1e-12 * self.scale, 50 * a.shape[1])
            xb = np.linalg.solve(a[:, basis], target)
        except (LPError, np.linalg.LinAlgError):
            basis = None
        if basis is not None and np.all(xb[basis < m] <= 1e-9 * self.scale):
            full = np.zeros(a.shape[1])
            full[basis] = np.maximum(xb, 0.0)
            uv = full[m:] / np.repeat(weights[self.ids], 2)
            return list(self.ids), uv[0::2] - uv[1::2]
        pool = self.cols[:, 0::2] * self.sgn[:, None]
        x, _ = solve_l1(pool, self.b, weights[self.ids])
        if np.abs(pool @ x - self.b).max() > 1e-8 * self.scale:
            raise LPError("column pool cannot represent b")
        return list(self.ids), x
