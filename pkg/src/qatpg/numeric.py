"""Central numeric tolerances and size caps."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass
class NumericPolicy:
    atol: float = 1e-9          # generic comparisons
    opt_tol: float = 1e-6       # optimizer-facing checks
    coeff_drop: float = 1e-11   # relative magnitude below which SPD terms are removed
    dense_cap: int = 12         # largest qubit count for dense matrices
    local_cap: int = 4          # largest active block solved by LP
    lex_eps: float = 1e-4       # perturbation weight for lexicographic solves
    lex_halvings: int = 10
    sparsify_gamma: float = 1e-6
    sparsify_iters: int = 5


POLICY = NumericPolicy()
