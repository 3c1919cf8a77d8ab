"""Command-line entry point.

Subcommands:

- ``weight``: build one weight candidate and print its constraint report.
- ``weight-search``: sweep decay exponents and plateau widths for an
  admissible weight.
- ``phi-check``: certify the closed-form lift (monotonicity, bounds, heat
  residual) and cross-check it against a Crank-Nicolson reference.
- ``simulate``: run a scenario from a config file, emit trace/audit CSVs
  and a summary.
- ``predict``: print the blowup threshold and predicted singularity time
  for a given initial functional value.
- ``audit``: re-run the Lyapunov audits on a stored trace CSV.

Exit codes: 0 success (all audits pass), 2 blowup detected as predicted,
1 failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import (ConfigError, parse_config, read_trace_csv, run_scenario,
                     write_audit_csv)
from .grid import build_grid
from .lift import LiftParams, solve_lift_reference, phi_field, verify_lift_properties
from .lyapunov import (compare_trajectory, inequality_audit,
                       predict_blowup_time, threshold_g0)
from .weight import SearchFailure, build_weight, search_parameters, validate_constraints

__all__ = ["main"]

USAGE_ERROR = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="blowup-lab",
                     description="Numerical laboratory for a weighted "
                                 "Lyapunov blowup argument in a thermal "
                                 "boundary layer model.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("weight", help="build and certify one weight")
    p.add_argument("--n", type=float, required=True,
                   help="tail decay exponent (> 1)")
    p.add_argument("--m", type=float, required=True,
                   help="tail width parameter (> 0)")
    p.add_argument("--samples", type=int, default=256,
                   help="sample count per piece for the constraint checks")

    p = sub.add_parser("weight-search", help="search for an admissible weight")
    p.add_argument("--n-list", type=float, nargs="+", required=True,
                   help="candidate decay exponents")
    p.add_argument("--m-start", type=float, required=True)
    p.add_argument("--m-factor", type=float, required=True)
    p.add_argument("--m-max", type=float, required=True)

    p = sub.add_parser("phi-check", help="certify the closed-form lift")
    p.add_argument("--ce", type=float, required=True,
                   help="far-field velocity amplitude (>= 0)")
    p.add_argument("--cp", type=float, required=True,
                   help="pressure-forcing amplitude (>= 0)")
    p.add_argument("--ymax", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--n-cells", type=int, default=800)

    p = sub.add_parser("simulate", help="run a scenario from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("predict",
                       help="threshold and predicted singularity time")
    p.add_argument("--g0", type=float, required=True,
                   help="initial value of the weighted functional")
    p.add_argument("--config", required=True)

    p = sub.add_parser("audit", help="re-audit a stored trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--config", required=True)
    return parser


def _cmd_weight(args) -> int:
    try:
        w = build_weight(args.n, args.m)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = validate_constraints(w, samples_per_piece=args.samples)
    print(f"n = {w.n:g}, m = {w.m:g}")
    print(f"gamma = {w.gamma:.12g}, sigma = {w.sigma:.12g}")
    print(f"mu = {w.mu:.12g}, lambda = {w.lam:.12g}, "
          f"l1_norm = {w.c_y:.12g}")
    print(report)
    return 0 if report.overall else 1


def _cmd_weight_search(args) -> int:
    result = search_parameters(args.n_list, args.m_start, args.m_factor,
                               args.m_max)
    if isinstance(result, SearchFailure):
        print(f"search failed: {result.message}", file=sys.stderr)
        for n, (m, report) in result.last_reports.items():
            bad = [r for r in report.records if not r.satisfied]
            names = ", ".join(r.description for r in bad) or "none"
            print(f"  n={n:g} m={m:g}: failing constraints: {names}",
                  file=sys.stderr)
        return 1
    print(f"found admissible weight: n = {result.n:g}, m = {result.m:g}")
    print(f"gamma = {result.gamma:.12g}, sigma = {result.sigma:.12g}, "
          f"mu = {result.mu:.12g}, lambda = {result.lam:.12g}, "
          f"l1_norm = {result.c_y:.12g}")
    return 0


def _cmd_phi_check(args) -> int:
    try:
        params = LiftParams(args.ce, args.cp)
        grid = build_grid(args.ymax, args.n_cells)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.tmax <= 0.0:
        print("error: --tmax must be positive", file=sys.stderr)
        return 1
    times = [0.0, 0.25 * args.tmax, 0.5 * args.tmax, args.tmax]
    report = verify_lift_properties(params, grid, times)
    print(report)

    n_steps = max(400, min(20000, 4 * args.n_cells))
    reference = solve_lift_reference(params, grid, args.tmax, n_steps)
    closed_form = phi_field(args.tmax, grid, params)
    scale = 1.0 + params.c_e + params.c_p * args.tmax
    err = float(np.max(np.abs(reference.values - closed_form.values))) / scale
    # second-order reference: allow a discretization-sized deviation
    ref_ok = err <= 0.1 * grid.h ** 2 + args.tmax / n_steps + 1e-9
    print(f"reference comparison: max relative deviation {err:.3e} "
          f"({'pass' if ref_ok else 'FAIL'})")
    return 0 if report.overall and ref_ok else 1


def _cmd_simulate(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        manifest = run_scenario(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(manifest.outcome_summary, end="")
    return manifest.exit_code


def _cmd_predict(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.g0 <= 0.0:
        print("error: --g0 must be positive", file=sys.stderr)
        return 1
    horizon = config.scenario.horizon
    thr = threshold_g0(horizon, config.constants)
    print(f"horizon: {horizon:.17g}")
    print(f"threshold_g0: {thr:.17g}")
    t_star = predict_blowup_time(args.g0, config.constants, horizon)
    if t_star is None:
        print("predicted_t_star: none_within_horizon")
    else:
        print(f"predicted_t_star: {t_star:.17g}")
    return 0


def _cmd_audit(args) -> int:
    try:
        config = parse_config(args.config)
        trace = read_trace_csv(args.trace, config.grid,
                               blowup_cap=config.scenario.blowup_cap,
                               dt_min=config.scenario.dt_min)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ineq = inequality_audit(trace, config.weight, config.constants,
                            c_audit=config.c_audit)
    bad = sum(1 for s in ineq.steps if not s.passed)
    print(f"inequality_audit: {'pass' if ineq.overall else 'fail'} "
          f"({len(ineq.steps)} steps, {bad} failing, "
          f"{len(ineq.excluded_times)} excluded)")
    g0 = trace.series["G"][0]
    ok = ineq.overall
    if g0 > 0.0:
        cmp_report = compare_trajectory(trace, g0, config.constants,
                                        c_audit=config.c_audit)
        print(f"comparison_audit: {'pass' if cmp_report.overall else 'fail'}")
        ok = ok and cmp_report.overall
    write_audit_csv(config.audit_csv, ineq, trace)
    print(f"audit_csv: {config.audit_csv}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_ERROR
    handlers = {
        "weight": _cmd_weight,
        "weight-search": _cmd_weight_search,
        "phi-check": _cmd_phi_check,
        "simulate": _cmd_simulate,
        "predict": _cmd_predict,
        "audit": _cmd_audit,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
