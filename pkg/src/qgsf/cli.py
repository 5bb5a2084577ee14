"""Command-line front end.

    qgsf run-sweep         replicated q x beta x gamma x algorithm sweep -> CSV
    qgsf export-trajectory one run's per-iteration distance and estimator norms -> CSV
    qgsf verify SUITE      fixed-seed property suite; exit 1 on any failure

Exit codes: 0 success, 1 verification failure, 2 invalid config.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import _backend
from .experiment import (
    PlanError,
    default_plan,
    export_trajectory,
    load_plan,
    results_csv,
    run_sweep,
    write_results,
)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_BAD_CONFIG = 0, 1, 2

log = logging.getLogger("qgsf")


def _load(args):
    plan = load_plan(args.config) if args.config else default_plan()
    overrides = {}
    if getattr(args, "replications", None) is not None:
        overrides["replications"] = args.replications
    if getattr(args, "seed_base", None) is not None:
        overrides["seed_base"] = args.seed_base
    if overrides:
        import dataclasses

        plan = dataclasses.replace(plan, **overrides)
        if plan.replications < 1:
            raise PlanError("replications must be at least 1")
    return plan


def cmd_run_sweep(args) -> int:
    plan = _load(args)
    n_runs = len(plan.configs())
    log.info("running %d simulations (backend=%s, workers=%d)", n_runs, _backend.BACKEND, args.workers)
    rows = run_sweep(plan, workers=args.workers)
    output = args.output or plan.output
    if output:
        timing = write_results(rows, output)
        log.info("wrote %s and %s", output, timing)
    else:
        sys.stdout.write(results_csv(rows))
    return EXIT_OK


def cmd_export_trajectory(args) -> int:
    plan = _load(args)
    seed = plan.seed_base if args.seed is None else args.seed
    traj = export_trajectory(plan, seed, args.output)
    log.info("final distance %.6g after %d updates", traj.final_distance, traj.theta.shape[0] - 1)
    if args.output is None:
        from .experiment import trajectory_csv

        sys.stdout.write(trajectory_csv(traj))
    return EXIT_OK


def cmd_verify(args) -> int:
    kwargs = {}
    if args.suite == "moments" and (args.dim is not None or args.q is not None):
        if args.dim is None or args.q is None:
            raise PlanError("--dim and --q must be given together")
        kwargs["cases"] = [(args.dim, args.q)]
    if args.seed is not None:
        kwargs["seed"] = args.seed
    report = run_suite(args.suite, **kwargs)
    print(report.text())
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgsf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-sweep", help="replicated sweep to CSV")
    p.add_argument("--config", help="TOML experiment file (default: published benchmark profile)")
    p.add_argument("--output", "-o", help="results CSV path (stdout if omitted)")
    p.add_argument("--workers", "-j", type=int, default=1)
    p.add_argument("--seed-base", type=int, dest="seed_base")
    p.add_argument("--replications", type=int)
    p.set_defaults(func=cmd_run_sweep)

    p = sub.add_parser("export-trajectory", help="per-iteration trajectory CSV")
    p.add_argument("--config")
    p.add_argument("--output", "-o")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_export_trajectory)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--seed", type=int)
    p.add_argument("--dim", type=int, help="moments suite: dimension N")
    p.add_argument("--q", type=float, help="moments suite: q")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PlanError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except FileNotFoundError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
