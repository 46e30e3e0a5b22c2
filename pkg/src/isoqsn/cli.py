"""Command-line entry point.

Exit codes: 0 success, 1 validation failure (bad input or a check that did
not hold), 2 solver non-convergence in a required cell, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import DomainError, NonConvergenceError, RegimeError, StateValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGENCE, EXIT_IO = 0, 1, 2, 3


def _theta_list(args) -> list[float] | tuple | None:
    if getattr(args, "theta_range", None):
        return tuple(args.theta_range)
    return args.theta


def _search_overrides(args) -> dict:
    out = {}
    for key in ("min_iterations", "max_iterations"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _add_search_args(p):
    p.add_argument("--min-iterations", type=int, help="heuristic minimum iterations (default 100)")
    p.add_argument("--max-iterations", type=int, help="heuristic iteration cap (default 2000)")


def cmd_thresholds(args) -> int:
    from .symmetry import build_partition_table, threshold

    start = time.perf_counter()
    print(f"{'n':>3}  {'T(deg)':>8}  {'180-T':>8}  {'R/L at floor(n/2)':>18}")
    for n in range(args.n_min, args.n_max + 1):
        t = threshold(n)
        table = build_partition_table(n)
        k = n // 2
        ratio = f"{table.r_counts[k]}/{table.l_counts[k]}"
        print(f"{n:>3}  {t:8.3f}  {180 - t:8.3f}  {ratio:>18}")
    if args.verbose:
        print(f"# {time.perf_counter() - start:.4f} s", file=sys.stderr)
    return EXIT_OK


def _load_state(path: str):
    from .qstate import StateVector

    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return StateVector.from_dict(data)


def _print_matrix(label: str, m: np.ndarray) -> None:
    print(label)
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        print(m)


def cmd_solve(args) -> int:
    from .discrimination import gram_matrix, min_error_discriminate, unambiguous_discriminate
    from .qstate import SensorUnitary, final_states

    psi = _load_state(args.state)
    u = SensorUnitary(args.theta)
    ensemble = final_states(psi, u)
    _print_matrix("gram matrix:", gram_matrix(ensemble))
    if args.measurement == "unambiguous":
        res = unambiguous_discriminate(ensemble, args.tol)
        print(f"p_failure: {res.p_failure:.10f}")
        print(f"duality_gap: {res.duality_gap:.3e}")
        print(f"max_cross_detection: {res.max_cross_probability():.3e}")
        print(f"converged: {res.converged}")
        return EXIT_OK if res.converged else EXIT_NONCONVERGENCE
    res = min_error_discriminate(ensemble, args.tol)
    print(f"p_error: {res.p_error:.10f}")
    print(f"certificate_residual: {res.certificate_residual:.3e}")
    print(f"duality_gap: {res.duality_gap:.3e}")
    print(f"backend: {res.backend}  iterations: {res.iterations}")
    print(f"converged: {res.converged}")
    if args.debug_dump:
        Path(args.debug_dump).write_text(res.to_debug_json())
    return EXIT_OK if res.converged else EXIT_NONCONVERGENCE


def cmd_construct(args) -> int:
    from .closed_form import best_closed_form, conjectured_optimum, orthogonal_regime_state, two_sensor_optimum

    builders = {
        "best": lambda: best_closed_form(args.n, args.theta),
        "conjecture": lambda: conjectured_optimum(args.n, args.theta),
        "corollary": lambda: orthogonal_regime_state(args.n, args.theta),
        "two_sensor": lambda: two_sensor_optimum(args.theta),
    }
    sol = builders[args.kind]()
    text = sol.state.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(f"regime: {sol.regime}  predicted_error: {sol.predicted_error:.10f}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiments import SweepSpec, cmd_sweep as run_sweep, default_theta_grid

    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if isinstance(data.get("theta_grid"), dict):
            g = data["theta_grid"]
            data["theta_grid"] = (g["start"], g["stop"], g["step"])
    if args.n:
        data["n_values"] = args.n
    grid = _theta_list(args)
    if grid is not None:
        data["theta_grid"] = grid
    data.setdefault("theta_grid", default_theta_grid())
    if args.methods:
        data["methods"] = args.methods
    if args.measurement:
        data["measurement"] = args.measurement
    if args.seeds:
        data["seeds"] = args.seeds
    if args.out:
        data["output_dir"] = args.out
    if args.no_plot:
        data["plot"] = False
    data["search"] = {**data.get("search", {}), **_search_overrides(args)}
    missing = [k for k in ("n_values", "methods") if k not in data]
    if missing:
        raise ValueError(f"missing sweep settings: {missing}")
    spec = SweepSpec(**data)
    rows = run_sweep(spec, workers=args.workers)
    for r in rows:
        print(f"n={r['n']} theta={r['theta_deg']:g} {r['method']:<11} seed={r['seed']} "
              f"p={float(r['p_value']):.6f} converged={r['converged']}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NONCONVERGENCE


def cmd_validate_conjecture(args) -> int:
    from .experiments import cmd_validate_conjecture as run, write_csv

    rows = run(args.n, _theta_list(args), args.seed, args.method, _search_overrides(args))
    print(f"{'theta':>8}  {'heuristic':>10}  {'conjecture':>10}  {'diff':>10}  flag")
    for r in rows:
        print(f"{r.theta:8.3f}  {r.heuristic:10.6f}  {r.conjecture:10.6f}  {r.difference:+10.2e}  {'!' if r.flagged else ''}")
    flagged = [r.theta for r in rows if r.flagged]
    print(f"flagged: {flagged}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_csv(Path(args.out) / f"conjecture_n{args.n}.csv", [asdict(r) for r in rows],
                  ("theta", "heuristic", "conjecture", "difference", "flagged"))
    return EXIT_VALIDATION if flagged else EXIT_OK


def cmd_validate_averaging(args) -> int:
    from .experiments import cmd_validate_averaging as run, write_csv

    trials = run(args.n, args.trials, args.seed, args.theta)
    print(f"{'trial':>5}  {'theta':>6}  {'original':>10}  {'avg_min':>10}  {'avg_max':>10}  {'perm_spread':>11}")
    for t in trials:
        print(f"{t.trial:>5}  {t.theta:6.2f}  {t.original:10.6f}  {t.averaged_min:10.6f}  "
              f"{t.averaged_max:10.6f}  {t.permuted_spread:11.2e}{'  VIOLATION' if t.violation else ''}")
    violations = sum(t.violation for t in trials)
    print(f"violations: {violations} / {len(trials)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cols = ("trial", "theta", "original", "averaged_min", "averaged_max", "permuted_spread", "violation")
        write_csv(out / f"averaging_n{args.n}.csv", [asdict(t) for t in trials], cols)
        if not args.no_plot:
            from .plotting import plot_averaging

            plot_averaging(trials, out / f"averaging_n{args.n}.svg")
    return EXIT_VALIDATION if violations else EXIT_OK


def cmd_symmetry_trace(args) -> int:
    from .experiments import cmd_symmetry_trace as run

    rec = run(args.n, args.theta, args.method, args.seed, _search_overrides(args), args.out, not args.no_plot)
    if not args.out:
        sys.stdout.write(rec.trajectory_csv())
    print(f"final p_error: {rec.final_p_error:.8f}  final symmetry_index: {rec.final_symmetry_index:.3e}  "
          f"slope: {rec.symmetry_slope():+.3e}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isoqsn", description="Initial-state optimization for quantum detector networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", help="print the orthogonality threshold T(n)")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("solve", help="evaluate a state given as JSON")
    p.add_argument("state", help='JSON file {"n": int, "amps": [[re, im], ...]}')
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--measurement", choices=("min_error", "unambiguous"), default="min_error")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--debug-dump", help="write Gram matrix, POVM and residual trace to this JSON file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("construct", help="write a closed-form state as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--kind", choices=("best", "conjecture", "corollary", "two_sensor"), default="best")
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("sweep", help="grid over n, theta, method and seed")
    p.add_argument("--config", help="JSON file with SweepSpec fields; flags override it")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--theta-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    p.add_argument("--methods", nargs="+")
    p.add_argument("--measurement", choices=("min_error", "unambiguous"))
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--out", help="output directory for sweep.csv, summary.json and figures")
    p.add_argument("--workers", type=int, help="worker processes (default: ISO_THREADS or CPU count)")
    p.add_argument("--no-plot", action="store_true")
    _add_search_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-conjecture", help="heuristic against the symmetric closed form")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--theta-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("HC", "SA", "GA"), default="HC")
    p.add_argument("--out")
    _add_search_args(p)
    p.set_defaults(func=cmd_validate_conjecture)

    p = sub.add_parser("validate-averaging", help="averaged states against the original")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=float, nargs="+", default=[67.5])
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_validate_averaging)

    p = sub.add_parser("symmetry-trace", help="objective and symmetry index over a run")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--method", choices=("HC", "SA", "GA"), default="HC")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true")
    _add_search_args(p)
    p.set_defaults(func=cmd_symmetry_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (StateValidationError, DomainError, RegimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
