"""Command-line drivers: pattern generation, test application and fault detection.

Exit codes: 0 ok, 1 usage, 2 infeasible (e.g. undetectable fault), 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .atpg import GenerationConfig, TestPattern, circuit_hash, generate_test_patterns
from .circuits import (Circuit, CircuitSyntaxError, FaultModel, MissingGate, ReplacedBy, benchmark,
                       inject_fault, iter_sites, parse_circuit)
from .detection import (DetectionConfig, InfeasibleError, build_patterns, detect, run_experiment,
                        select_candidates)
from .discrim import UndetectableFault
from .numeric import POLICY
from .sampler import exact_expectation, make_executor, run_test_application

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_circuit(args) -> Circuit:
    if getattr(args, "circuit", None):
        return parse_circuit(Path(args.circuit).read_text())
    if getattr(args, "bench", None):
        return benchmark(args.bench)
    raise UsageError("one of --circuit or --bench is required")


def _fault(text: str, n: int) -> FaultModel:
    if text == "missing":
        return MissingGate()
    if text.startswith("replace:"):
        body = Path(text.split(":", 1)[1]).read_text()
        return ReplacedBy(parse_circuit(body).gates)
    raise UsageError(f"bad --fault {text!r}; use missing or replace:FILE")


def _generation(args) -> GenerationConfig:
    return GenerationConfig(local_cap=args.local_cap)


def _emit(args, doc, text: str):
    out = json.dumps(doc, indent=2) if args.format == "json" else text
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        print(text)
    else:
        print(out)


def _pattern_text(tp: TestPattern) -> str:
    return (f"site {tp.site}: nu*(rho)={tp.nu_star_rho:.6g} nu(M)={tp.nu_m:.6g} "
            f"terms={len(tp.spd_rho)}/{len(tp.spd_m)} r={tp.r:.6g} "
            f"p_success={tp.p_success:.6g} time={tp.seconds:.3g}s")


def cmd_gen(args) -> int:
    c = _load_circuit(args)
    if args.site is None:
        raise UsageError("--site is required")
    tp = generate_test_patterns(c, args.site, _fault(args.fault, c.n), _generation(args))
    _emit(args, tp.to_dict(), _pattern_text(tp))
    return EXIT_OK


def cmd_gen_all(args) -> int:
    c = _load_circuit(args)
    fm = _fault(args.fault, c.n)
    docs, lines, skipped = [], [], []
    rs, ms = [], []
    for site in iter_sites(c):
        try:
            tp = generate_test_patterns(c, site, fm, _generation(args))
        except UndetectableFault:
            skipped.append(site)
            continue
        docs.append(tp.to_dict())
        lines.append(_pattern_text(tp))
        rs.append(tp.nu_star_rho)
        ms.append(tp.nu_m)
    summary = {"circuit_hash": circuit_hash(c), **c.stats(), "sites": len(docs),
               "skipped": skipped,
               "mean_nu_star_rho": float(np.mean(rs)) if rs else None,
               "mean_nu_M": float(np.mean(ms)) if ms else None}
    lines.append(f"mean nu*(rho)={summary['mean_nu_star_rho']} mean nu(M)={summary['mean_nu_M']} "
                 f"skipped={skipped}")
    _emit(args, {"summary": summary, "patterns": docs}, "\n".join(lines))
    return EXIT_OK


def cmd_apply(args) -> int:
    if not args.patterns:
        raise UsageError("--patterns is required")
    tp = TestPattern.from_dict(json.loads(Path(args.patterns).read_text()))
    c = _load_circuit(args)
    if args.inject_site:
        c = inject_fault(c, args.inject_site, _fault(args.fault, c.n))
    ex = make_executor(c, args.executor, args.dense_cap)
    res = run_test_application(tp.spd_rho, tp.spd_m, ex, args.delta, args.epsilon, seed=args.seed)
    doc = res.to_dict()
    if c.n <= args.dense_cap:
        doc["exact"] = exact_expectation(tp.spd_rho, tp.spd_m, c, args.dense_cap)
    _emit(args, doc, f"estimate={res.estimate:.6g} T={res.trials} "
                     f"exact={doc.get('exact', 'n/a')} time={res.seconds:.3g}s")
    return EXIT_OK


def _detection_config(args, n: int) -> DetectionConfig:
    return DetectionConfig(k=args.k, tau=args.tau, delta=args.delta, epsilon=args.epsilon,
                           seed=args.seed, threshold=args.threshold, fault=_fault(args.fault, n),
                           executor=args.executor, redraw=getattr(args, "redraw", False),
                           generation=_generation(args))


def cmd_detect(args) -> int:
    c = _load_circuit(args)
    cfg = _detection_config(args, c.n)
    select_seq, run_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    sites = select_candidates(c, cfg.fault, cfg.k, cfg.tau, np.random.default_rng(select_seq))
    patterns = build_patterns(c, sites, cfg)
    cut = inject_fault(c, args.inject_site, cfg.fault) if args.inject_site else c
    det = detect(cut, patterns, cfg, run_seq)
    doc = {"candidates": sites, "injected_site": args.inject_site, **det.to_dict()}
    _emit(args, doc, f"verdict={det.verdict} min={det.min_estimate:.6g} candidates={sites}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if not args.bench:
        raise UsageError("--bench is required")
    c = benchmark(args.bench)
    report = run_experiment(args.bench, args.trials, _detection_config(args, c.n))
    _emit(args, report.to_dict(), report.summary())
    return EXIT_OK


def cmd_bench_info(args) -> int:
    c = _load_circuit(args)
    doc = {"circuit_hash": circuit_hash(c), **c.stats(), "gates": len(c.gates)}
    _emit(args, doc, " ".join(f"{k}={v}" for k, v in doc.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qatpg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, detection=False, sampling=False):
        sp.add_argument("--circuit", help="circuit text file")
        sp.add_argument("--bench", help="benchmark name such as QFT_5 or BV_10")
        sp.add_argument("--fault", default="missing", help="missing or replace:FILE")
        sp.add_argument("--out", help="write JSON output to FILE")
        sp.add_argument("--format", choices=("json", "text"), default="text")
        sp.add_argument("--local-cap", type=int, default=POLICY.local_cap)
        sp.add_argument("--dense-cap", type=int, default=POLICY.dense_cap)
        if sampling or detection:
            sp.add_argument("--delta", type=float, default=0.3)
            sp.add_argument("--epsilon", type=float, default=0.3)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--executor", choices=("dense", "tableau", "auto"), default="auto")
        if detection:
            sp.add_argument("--k", type=int, default=10)
            sp.add_argument("--tau", type=float, default=0.1)
            sp.add_argument("--threshold", type=float, default=0.5)

    sp = sub.add_parser("gen", help="test patterns for one fault site")
    common(sp)
    sp.add_argument("--site", type=int)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("gen-all", help="test patterns for every fault site")
    common(sp)
    sp.set_defaults(func=cmd_gen_all)

    sp = sub.add_parser("apply", help="run the sampler with stored patterns")
    common(sp, sampling=True)
    sp.add_argument("--patterns", help="TestPattern JSON file")
    sp.add_argument("--inject-site", type=int, help="apply to the circuit with this site faulty")
    sp.set_defaults(func=cmd_apply)

    sp = sub.add_parser("detect", help="decide whether a circuit is faulty")
    common(sp, detection=True)
    sp.add_argument("--inject-site", type=int, help="inject the fault at this site first")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("experiment", help="repeated detection with random fault injection")
    common(sp, detection=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--redraw", action="store_true", help="redraw candidates every trial")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("bench-info", help="size, depth and gate counts of a circuit")
    common(sp)
    sp.set_defaults(func=cmd_bench_info)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CircuitSyntaxError, FileNotFoundError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UndetectableFault, InfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ArithmeticError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
