"""Command-line front end.

Subcommands: validate, bell, tightness, figures, ra, quantum.  CSV is the
canonical dataset format, JSON the machine-readable report format; output is
deterministic for a fixed seed (sorted rows, repr-stable numbers).

Exit codes: 0 success, 1 verification failure (some inequality violated),
2 input error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import bell, monogamy, quantum, scenario, svamp
from .errors import InputFormatError, ScenarioTooLargeError, SignallingInputError

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


@dataclass
class RunConfig:
    mode: str = "exact"
    tol: float = 0.0
    seed: int = 0
    jobs: int = 1
    out: str | None = None
    fmt: str = "csv"


def _emit(config: RunConfig, text: str) -> None:
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> RunConfig:
    return RunConfig(
        mode=args.mode,
        tol=args.tol,
        seed=args.seed,
        jobs=args.jobs,
        out=args.out,
        fmt=args.format,
    )


def cmd_validate(args) -> int:
    config = _config(args)
    behavior = scenario.load_behavior(args.behavior, exact=config.mode == "exact")
    tol = 0 if config.mode == "exact" else config.tol
    problems = scenario.validate(behavior, tol)
    ns_ok, worst = scenario.is_nonsignalling(behavior, tol)
    report = {
        "valid": not problems,
        "problems": problems,
        "nonsignalling": ns_ok,
        "worst_ns_deviation": scenario.format_number(worst),
    }
    _emit(config, json.dumps(report, indent=1) + "\n")
    return EXIT_OK if not problems else EXIT_VIOLATION


def cmd_bell(args) -> int:
    config = _config(args)
    functional = (
        bell.chained_bkp(args.M, args.d)
        if args.N == 2
        else bell.recursive_bkp(args.N, args.M, args.d)
    )
    if args.behavior:
        behavior = scenario.load_behavior(args.behavior, exact=config.mode == "exact")
        value = bell.evaluate(functional, behavior)
        report = {
            "value": scenario.format_number(value),
            "classical_bound": scenario.format_number(functional.classical_bound),
            "ns_minimum": scenario.format_number(functional.ns_minimum),
        }
        _emit(config, json.dumps(report, indent=1) + "\n")
    elif config.fmt == "json":
        _emit(config, json.dumps(bell.functional_to_json(functional), indent=1) + "\n")
    else:
        _emit(config, bell.dense_csv(functional))
    return EXIT_OK


def cmd_tightness(args) -> int:
    config = _config(args)
    scn = scenario.Scenario(args.N + 1, args.M, args.d)
    grid = [Fraction(t) for t in args.grid.split(",")] if args.grid else None
    rows = monogamy.tightness_scan(
        scn, args.k, args.x_k, args.x_last, grid, jobs=config.jobs
    )
    if config.fmt == "json":
        _emit(config, json.dumps(
            monogamy.scan_to_json(rows, args.k, args.x_k, args.x_last), indent=1
        ) + "\n")
    else:
        _emit(config, monogamy.scan_to_csv(rows, args.k, args.x_k, args.x_last))
    feasible = [r for r in rows if r.status == "optimal"]
    return EXIT_OK if all(r.tight for r in feasible) else EXIT_VIOLATION


def cmd_figures(args) -> int:
    config = _config(args)
    if args.which in ("guessing", "2a"):
        _emit(config, quantum.guessing_curve_csv(args.d, n_points=args.points))
        return EXIT_OK
    if args.which in ("keyrate", "2b"):
        ds = [int(v) for v in args.d_list.split(",")]
        targets = []
        for t in args.rates.split(","):
            targets.append(math.log2(3) if t.strip() == "log2(3)" else float(t))
        _emit(config, quantum.key_rate_table_csv(ds, targets, max_m=args.max_m))
        return EXIT_OK
    raise InputFormatError(f"unknown dataset {args.which!r}")


def cmd_ra(args) -> int:
    config = _config(args)
    eps = Fraction(args.epsilon)
    if not 0 <= eps < Fraction(1, 2):
        raise InputFormatError("epsilon must lie in [0, 1/2)")
    eps_n = svamp.critical_epsilon(args.N)
    eps_common = svamp.critical_epsilon_common(args.N)
    verdict = (
        "below both thresholds"
        if eps < min(Fraction(eps_n) if isinstance(eps_n, Fraction) else eps_n, float(eps_common))
        else (
            "above both thresholds"
            if float(eps) >= float(eps_common) and float(eps) >= float(eps_n)
            else "between thresholds (common-source variant still works)"
        )
    )
    m_values = [int(v) for v in args.m_list.split(",")]
    violations = None
    lam = args.lam
    if lam is None:
        violations = {m: quantum.cached_violation(m, args.d) for m in m_values}
    rows = svamp.feasibility_curve(
        args.N, args.d, eps, m_values, violations=violations, lam=lam, variant="per-party"
    )
    rows += svamp.feasibility_curve(
        args.N, args.d, eps, m_values, violations=violations, lam=lam, variant="common-source"
    )
    header = (
        f"epsilon={float(eps)!r} critical_per_party={float(eps_n)!r} "
        f"critical_common={float(eps_common)!r} verdict={verdict}\n"
    )
    _emit(config, header + svamp.curve_to_csv(args.N, args.d, eps, rows))
    return EXIT_OK


def cmd_quantum(args) -> int:
    config = _config(args)
    if args.subtask == "monogamy-check":
        summary = quantum.monogamy_montecarlo(args.samples, [1.0, 1.5, 2.0, 3.0], seed=config.seed)
        _emit(config, json.dumps(summary, indent=1) + "\n")
        return EXIT_OK if summary["violations"] == 0 else EXIT_VIOLATION
    if args.subtask == "violation":
        res = quantum.chained_quantum_violation(args.M, args.d, seed=config.seed)
        report = {
            "M": args.M,
            "d": args.d,
            "value": res.value,
            "converged": res.converged,
            "phases_a": [list(map(float, row)) for row in res.phases_a],
            "phases_b": [list(map(float, row)) for row in res.phases_b],
        }
        _emit(config, json.dumps(report, indent=1) + "\n")
        return EXIT_OK
    if args.subtask == "family-sweep":
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf)
        writer.writerow(["theta", "bell_max", "outsider_corr", "boundary_residual"])
        alpha = args.alpha
        for i in range(args.points):
            theta = (math.pi / 4) * i / (args.points - 1)
            state = quantum.saturating_family(theta)
            t_ab = quantum.correlation_matrix(state, (0, 1))
            t_ac = quantum.correlation_matrix(state, (0, 2))
            bell_max = quantum.alpha_chsh_max(t_ab, alpha)
            corr = math.sqrt(t_ac.singular_squares[0])
            residual = bell_max**2 + 4 * corr**2 - 4 * (1 + alpha**2)
            writer.writerow([repr(theta), repr(bell_max), repr(corr), repr(residual)])
        _emit(config, buf.getvalue())
        return EXIT_OK
    raise InputFormatError(f"unknown quantum subtask {args.subtask!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=["exact", "float"], default="exact")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    parser = argparse.ArgumentParser(
        prog="monogamy-lab",
        description="Bell-functional monogamy over no-signalling polytopes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def sub_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = sub_parser("validate", help="validate a behavior file and report NS status")
    p.add_argument("behavior")
    p.set_defaults(func=cmd_validate)

    p = sub_parser("bell", help="construct/evaluate the chained functional")
    p.add_argument("N", type=int)
    p.add_argument("M", type=int)
    p.add_argument("d", type=int)
    p.add_argument("behavior", nargs="?", default=None)
    p.set_defaults(func=cmd_bell)

    p = sub_parser("tightness", help="LP scan of the agreement-probability bound")
    p.add_argument("N", type=int, help="number of Bell-test parties")
    p.add_argument("M", type=int)
    p.add_argument("d", type=int)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--x-k", dest="x_k", type=int, default=0)
    p.add_argument("--x-last", dest="x_last", type=int, default=0)
    p.add_argument("--grid", default=None, help="comma-separated rational targets")
    p.set_defaults(func=cmd_tightness)

    p = sub_parser("figures", help="emit guessing-curve / key-rate datasets")
    p.add_argument("which", choices=["guessing", "keyrate", "2a", "2b"], help="dataset id")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--d-list", dest="d_list", default="3,4,5")
    p.add_argument("--rates", default="1", help="comma-separated targets; log2(3) allowed")
    p.add_argument("--max-m", dest="max_m", type=int, default=12)
    p.set_defaults(func=cmd_figures)

    p = sub_parser("ra", help="randomness-amplification thresholds and curves")
    p.add_argument("N", type=int)
    p.add_argument("d", type=int)
    p.add_argument("epsilon")
    p.add_argument("--m-list", dest="m_list", default="2,4,8,16")
    p.add_argument("--lam", type=float, default=None, help="use lam/M instead of computed violations")
    p.set_defaults(func=cmd_ra)

    p = sub_parser("quantum", help="quantum monogamy checks and violations")
    p.add_argument("subtask", choices=["monogamy-check", "violation", "family-sweep"])
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--points", type=int, default=50)
    p.set_defaults(func=cmd_quantum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    random.seed(args.seed)
    try:
        return args.func(args)
    except ScenarioTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InputFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SignallingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
