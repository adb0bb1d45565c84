"""Fault-detection harness: candidate selection, min-threshold decisions and metrics.

A circuit under test is declared faulty when the smallest sampled estimate over
the k candidate patterns is at or below the decision threshold.  Fault-free
patterns have expectation p_success >= 0.5 + tau and faulty ones at most
1 - p_success, so the default threshold of 0.5 separates the two.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .atpg import GenerationConfig, TestPattern, generate_test_patterns
from .circuits import Circuit, FaultModel, MissingGate, benchmark, inject_fault, iter_sites
from .discrim import site_pattern
from .sampler import make_executor, run_test_application


class InfeasibleError(ValueError):
    """The requested detection task cannot be set up (e.g. too few detectable sites)."""


@dataclass
class DetectionConfig:
    k: int = 10
    tau: float = 0.1
    delta: float = 0.3
    epsilon: float = 0.3
    seed: int | None = None
    threshold: float = 0.5
    fault: FaultModel = field(default_factory=MissingGate)
    executor: str = "auto"
    redraw: bool = False
    generation: GenerationConfig = field(default_factory=GenerationConfig)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 0 <= self.tau < 0.5:
            raise ValueError("tau must lie in [0, 0.5)")
        if self.delta <= 0 or not 0 < self.epsilon < 1:
            raise ValueError("need delta > 0 and 0 < epsilon < 1")

    @property
    def pattern_epsilon(self) -> float:
        """Per-pattern failure budget; the union bound over k patterns gives epsilon."""
        return self.epsilon / self.k


def detectable_sites(c: Circuit, fm: FaultModel, tau: float) -> list[int]:
    """Sites whose Helstrom success probability is at least 0.5 + tau.

    Sites wider than two qubits, or where a replacement acts on other wires,
    are skipped.
    """
    out = []
    for site in iter_sites(c):
        if len(c.gate(site).wires) > 2:
            continue
        try:
            pat = site_pattern(c, site, fm)
        except ValueError:
            continue  # undetectable, or the replacement does not fit this site
        if pat.p_success >= 0.5 + tau - 1e-12:
            out.append(site)
    return out


def select_candidates(c: Circuit, fm: FaultModel, k: int, tau: float,
                      rng: np.random.Generator) -> list[int]:
    """k distinct detectable sites drawn uniformly, in ascending order."""
    sites = detectable_sites(c, fm, tau)
    if len(sites) < k:
        raise InfeasibleError(f"only {len(sites)} sites pass tau={tau}, need k={k}")
    chosen = rng.choice(len(sites), size=k, replace=False)
    return sorted(sites[int(i)] for i in chosen)


@dataclass
class Detection:
    faulty: bool
    min_estimate: float
    estimates: dict[int, float]
    trials: dict[int, int]

    @property
    def verdict(self) -> str:
        return "faulty" if self.faulty else "fault-free"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "min_estimate": self.min_estimate,
                "estimates": {str(s): m for s, m in self.estimates.items()},
                "trials": {str(s): t for s, t in self.trials.items()}}


def build_patterns(c: Circuit, sites: list[int], cfg: DetectionConfig,
                   cache: dict[int, TestPattern] | None = None) -> list[TestPattern]:
    cache = {} if cache is None else cache
    for s in sites:
        if s not in cache:
            cache[s] = generate_test_patterns(c, s, cfg.fault, cfg.generation)
    return [cache[s] for s in sites]


def detect(cut: Circuit, patterns: list[TestPattern], cfg: DetectionConfig,
           seed: int | np.random.SeedSequence | None = None) -> Detection:
    """Run every pattern against ``cut`` and apply the min-threshold rule."""
    if not patterns:
        raise ValueError("no patterns to apply")
    executor = make_executor(cut, cfg.executor)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    estimates: dict[int, float] = {}
    trials: dict[int, int] = {}
    for tp, child in zip(patterns, root.spawn(len(patterns))):
        res = run_test_application(tp.spd_rho, tp.spd_m, executor, cfg.delta,
                                   cfg.pattern_epsilon, seed=child)
        estimates[tp.site] = res.estimate
        trials[tp.site] = res.trials
    low = min(estimates.values())
    return Detection(low <= cfg.threshold, low, estimates, trials)


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, False) if den else (1.0, True)


@dataclass
class DetectionReport:
    bench: str
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    rows: list[dict] = field(default_factory=list)
    candidates: list[int] = field(default_factory=list)
    redraw: bool = False
    seconds: float = 0.0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)[0]

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)[0]

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.total)[0]

    def undefined(self) -> list[str]:
        flags = {"precision": _ratio(self.tp, self.tp + self.fp)[1],
                 "recall": _ratio(self.tp, self.tp + self.fn)[1],
                 "accuracy": _ratio(self.tp + self.tn, self.total)[1]}
        return [k for k, v in flags.items() if v]

    def record(self, actual_faulty: bool, det: Detection, site: int | None):
        if actual_faulty and det.faulty:
            self.tp += 1
        elif actual_faulty:
            self.fn += 1
        elif det.faulty:
            self.fp += 1
        else:
            self.tn += 1
        self.rows.append({"faulty": actual_faulty, "fault_site": site, **det.to_dict()})

    def to_dict(self) -> dict:
        return {"bench": self.bench, "TP": self.tp, "TN": self.tn, "FP": self.fp, "FN": self.fn,
                "precision": self.precision, "recall": self.recall, "accuracy": self.accuracy,
                "undefined": self.undefined(), "candidates": self.candidates,
                "redraw": self.redraw, "seconds": self.seconds, "rows": self.rows}

    def summary(self) -> str:
        return (f"{self.bench}: trials={self.total} TP={self.tp} TN={self.tn} FP={self.fp} "
                f"FN={self.fn} precision={self.precision:.3f} recall={self.recall:.3f} "
                f"accuracy={self.accuracy:.3f}")


def run_experiment(bench: str | Circuit, trials: int, cfg: DetectionConfig) -> DetectionReport:
    """Repeat detection on a CUT that is faulty with probability 1/2.

    Candidates are drawn once per experiment unless ``cfg.redraw`` is set.
    A faulty CUT has a missing (or replaced) gate at one of the candidates.
    """
    start = time.perf_counter()
    c = benchmark(bench) if isinstance(bench, str) else bench
    name = bench if isinstance(bench, str) else f"circuit[{c.n}]"
    report = DetectionReport(name, redraw=cfg.redraw)
    if trials <= 0:
        return report
    root = np.random.SeedSequence(cfg.seed)
    select_seq, trial_seq = root.spawn(2)
    rng = np.random.default_rng(select_seq)
    cache: dict[int, TestPattern] = {}
    candidates = select_candidates(c, cfg.fault, cfg.k, cfg.tau, rng)
    report.candidates = list(candidates)
    for child in trial_seq.spawn(trials):
        coin_seq, run_seq = child.spawn(2)
        coin = np.random.default_rng(coin_seq)
        if cfg.redraw:
            candidates = select_candidates(c, cfg.fault, cfg.k, cfg.tau, coin)
        patterns = build_patterns(c, candidates, cfg, cache)
        faulty = bool(coin.random() < 0.5)
        site = int(coin.choice(candidates)) if faulty else None
        cut = inject_fault(c, site, cfg.fault) if faulty else c
        det = detect(cut, patterns, cfg, run_seq)
        report.record(faulty, det, site)
        if cfg.redraw:
            report.rows[-1]["candidates"] = list(candidates)
    report.seconds = time.perf_counter() - start
    return report
