"""Command line entry point: generate, solve, backtest, sweep.

Exit status is 0 on success, 2 on invalid input, 1 on unexpected failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .baselines import solve_facility, solve_knapsack, solve_rand
from .harness import (
    BacktestReport,
    backtest,
    dominance_rate,
    lambda_trends,
    load_sweep_config,
    normalize_constants,
    run_sweep,
    save_report,
)
from .instance import GenConfig, InstanceError, generate_synthetic, load_instance, save_instance
from .objective import Weights, load_deployment, save_deployment
from .solver import solve

log = logging.getLogger("edgeplace")


def _lambda(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("lambda must lie in [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgeplace", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic instance")
    gen.add_argument("--cells", type=int, required=True)
    gen.add_argument("--grid", type=int, required=True)
    gen.add_argument("--kappa", type=float, required=True)
    gen.add_argument("--gamma", type=float, required=True)
    gen.add_argument("--k", type=int, required=True, help="server count used to scale capacities")
    gen.add_argument("--periods", type=int, default=192)
    gen.add_argument("--width", type=float, default=GenConfig.width)
    gen.add_argument("--height", type=float, default=GenConfig.height)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    sol = sub.add_parser("solve", help="compute a deployment")
    sol.add_argument("--instance", required=True)
    sol.add_argument("--algo", choices=("sdu", "rand", "facility", "knapsack"), default="sdu")
    sol.add_argument("--k", type=int, required=True)
    sol.add_argument("--lambda", dest="lam", type=_lambda, default=0.5)
    sol.add_argument("--adjusted", action="store_true",
                     help="optimize the normalized objective (sdu only)")
    sol.add_argument("--norm-samples", type=int, default=100)
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--out", required=True)

    bt = sub.add_parser("backtest", help="evaluate a deployment on every period")
    bt.add_argument("--instance", required=True)
    bt.add_argument("--deployment", required=True)
    bt.add_argument("--lambda", dest="lam", type=_lambda, default=0.5)
    bt.add_argument("--norm-samples", type=int, default=100)
    bt.add_argument("--seed", type=int, default=0)
    bt.add_argument("--series", action="store_true", help="include the per-period series")
    bt.add_argument("--out", required=True)

    sw = sub.add_parser("sweep", help="run a scenario grid and write CSV + metadata")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out-dir", required=True)
    sw.add_argument("--workers", type=int, default=None)
    return parser


def _generate(args) -> None:
    config = GenConfig(
        n_cells=args.cells, grid_side=args.grid, kappa_factor=args.kappa, gamma_factor=args.gamma,
        k_planned=args.k, n_periods=args.periods, width=args.width, height=args.height,
    )
    instance = generate_synthetic(config, args.seed)
    save_instance(instance, args.out)
    print(f"wrote {instance!r} to {args.out}")


def _solve(args) -> None:
    instance = load_instance(args.instance)
    if args.algo == "sdu":
        weights = Weights(args.lam)
        if args.adjusted:
            norm = normalize_constants(instance, args.k, args.norm_samples, seed=args.seed)
            weights = Weights.adjusted(args.lam, norm.a, norm.b)
        result = solve(instance, args.k, weights)
        dep = result.deployment
        print(f"sdu: branch={result.branch} objective={result.objective:.6g}")
    elif args.algo == "rand":
        dep = solve_rand(instance, args.k, args.seed)
    elif args.algo == "facility":
        dep = solve_facility(instance, args.k)
    else:
        dep = solve_knapsack(instance, args.k)
    save_deployment(dep, args.out)
    print(f"wrote deployment with servers {list(dep.servers)} to {args.out}")


def _backtest(args) -> None:
    instance = load_instance(args.instance)
    dep = load_deployment(args.deployment)
    dep.check_against(instance)
    norm = normalize_constants(instance, dep.k, args.norm_samples, seed=args.seed)
    row = backtest(instance, dep, args.lam, norm, seed=args.seed, keep_series=args.series)
    report = BacktestReport([row], norm, {"lambda": args.lam, "k": dep.k, "seed": args.seed})
    save_report(report, args.out)
    print(json.dumps({"mean_f": row.mean_f, "mean_g": row.mean_g, "adjusted_pi": row.adjusted_pi}))


def _sweep(args) -> None:
    config = load_sweep_config(args.config)
    outcome = run_sweep(config, args.out_dir, workers=args.workers)
    hits, total = dominance_rate(outcome.rows)
    print(f"wrote {outcome.csv_path} and {outcome.meta_path}")
    print(f"SDU best or within 2% of best: {hits}/{total}")
    for algo, (ok, n) in lambda_trends(outcome.rows).items():
        print(f"{algo} lambda trend holds: {ok}/{n}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"generate": _generate, "solve": _solve, "backtest": _backtest, "sweep": _sweep}[args.command]
    try:
        handler(args)
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
