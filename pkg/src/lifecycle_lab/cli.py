"""Operator command line: simulate, oracle-check, analyze, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 capability error.
Every command is deterministic given its --seed.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from pathlib import Path

from .agents import AgentSpec
from .analysis.dataset import AnalysisDataset
from .analysis.tables import load_period_rows, run_analysis
from .errors import CapabilityError, DataError, DomainError, LifecycleError
from .model import DP_MAX_HORIZON, ModelParams, dp_oracle, mean_income, optimal_consumption
from .service.server import serve
from .service.storage import read_study_config
from .session import Ordering, StudyConfig
from .simulate import simulate_study

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CAPABILITY = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's default 2
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="lifecycle-lab",
                     description="Life-cycle consumption/saving experiment platform")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run synthetic agent sessions")
    sim.add_argument("--agents", default="optimal",
                     help="comma list of optimal|handtomouth|debtaverse|"
                          "noisyoptimal[:sd]")
    sim.add_argument("--n", type=int, default=10, help="sessions per study")
    sim.add_argument("--ordering", choices=["BF", "SF", "both"], default="both")
    sim.add_argument("--seed", type=int, default=20160901)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--sigma", type=float, default=None,
                     help="override shock size")

    orc = sub.add_parser("oracle-check",
                         help="verify the closed-form policy against backward "
                              "induction")
    orc.add_argument("--horizon", type=int, default=3, help="2..5")
    orc.add_argument("--theta", type=float, default=0.02)
    orc.add_argument("--sigma", type=float, default=10.0)
    orc.add_argument("--tolerance", type=float, default=1e-6)

    ana = sub.add_parser("analyze", help="emit tables and figure data")
    ana.add_argument("--in", dest="input", required=True,
                     help="study directory (or tree of them) with exports")
    ana.add_argument("--import-map", default=None,
                     help="JSON column-mapping file for external data")
    ana.add_argument("--label", default="local",
                     help="country label for data loaded from --in")
    ana.add_argument("--tables", default="1,2,3,4,5,da")
    ana.add_argument("--fig", default="2,3,4")
    ana.add_argument("--out", required=True)

    srv = sub.add_parser("serve", help="run the session service")
    srv.add_argument("--config", required=True, help="study.config path")
    srv.add_argument("--bind", default="127.0.0.1:8000")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("LIFECYCLE_LAB_LOG", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "oracle-check":
            return cmd_oracle_check(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "serve":
            return cmd_serve(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (DataError, LifecycleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def cmd_simulate(args) -> int:
    try:
        specs = [AgentSpec.parse(part, seed=args.seed)
                 for part in args.agents.split(",") if part.strip()]
    except DomainError as exc:
        raise _UsageError(str(exc)) from None
    if not specs:
        raise _UsageError("--agents must name at least one agent kind")
    if args.n < 1:
        raise _UsageError("--n must be >= 1")
    orderings = {"BF": [Ordering.BORROWING_FIRST], "SF": [Ordering.SAVING_FIRST],
                 "both": [Ordering.BORROWING_FIRST, Ordering.SAVING_FIRST]}
    out_root = Path(args.out)
    params = ModelParams() if args.sigma is None else ModelParams(shock_sigma=args.sigma)
    for ordering in orderings[args.ordering]:
        study_id = f"sim-{ordering.value.lower()}"
        config = StudyConfig(study_id=study_id, ordering=ordering,
                             shock_seed=args.seed, params=params)
        runtime = simulate_study(config, specs, args.n, out_dir=out_root / study_id)
        done = sum(1 for s in runtime.study.sessions.values()
                   if s.phase == "complete")
        print(f"{study_id}: {done} sessions complete -> "
              f"{out_root / study_id / 'exports'}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    T = args.horizon
    if not 2 <= T <= 5:
        raise CapabilityError(
            f"--horizon must be in 2..5 (full-tolerance backward induction is "
            f"enumerable up to {DP_MAX_HORIZON}; 5 is the practical CLI bound), "
            f"got {T}")
    params = ModelParams(horizon_T=T, theta=args.theta, shock_sigma=args.sigma)
    sigma = params.shock_sigma
    branches = (sigma,) if sigma == 0 else (sigma, -sigma)
    worst = 0.0
    checked = 0

    def walk(t: int, assets: float):
        nonlocal worst, checked
        if t > T:
            return
        for eps in branches:
            y = mean_income(t, params) + eps
            w = y + assets
            cf = optimal_consumption(w, t, params)
            dp = dp_oracle(params, t, assets, y)
            worst = max(worst, abs(cf - dp))
            checked += 1
            walk(t + 1, w - cf)

    walk(1, 0.0)
    status = "PASS" if worst <= args.tolerance else "FAIL"
    print(f"{status}: horizon={T} theta={args.theta} sigma={args.sigma} "
          f"states={checked} max|closed_form - dp| = {worst:.3e} "
          f"(tolerance {args.tolerance:g})")
    return EXIT_OK if status == "PASS" else EXIT_DATA


def cmd_analyze(args) -> int:
    tables = [t.strip() for t in str(args.tables).split(",") if t.strip()]
    figs = [f.strip() for f in str(args.fig).split(",") if f.strip()]
    root = Path(args.input)
    if not root.exists():
        raise DataError(f"input directory {root} does not exist")
    ds = AnalysisDataset.from_export_tree(root, country=args.label)
    if args.import_map:
        ds = ds.merged_with(AnalysisDataset.from_import_map(args.import_map))
    period_rows = load_period_rows(root)
    params = _params_from_study_tree(root)
    written = run_analysis(ds, args.out, tables=tables, figs=figs,
                           period_rows=period_rows, params=params)
    for path in written:
        print(path)
    return EXIT_OK


def _params_from_study_tree(root: Path) -> ModelParams:
    for candidate in itertools.chain([root / "study.config"],
                                     sorted(root.glob("**/study.config"))):
        if candidate.exists():
            return read_study_config(candidate).params
    return ModelParams()


def cmd_serve(args) -> int:
    serve(args.config, args.bind)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
