"""``sitmark`` command line."""

import argparse
from datetime import date
import math
import os
import sys

import numpy as np

from .clearing import initial_margin, realized_vol_20d
from .config import load_config
from .engine import METRICS, run_scenario, sensitivity_sweep, summarize
from .errors import SitmarkError
from .hedging import BasisSpec, RollRule, backtest_hedge
from .index import DEFAULT_CAP, DEFAULT_S_SIT, compute_tpi
from .io import index_row, read_quotes_csv, write_csv, write_curve_csv, write_ensemble_csv, write_fan_chart_csv, write_hedge_report_csv
from .pipeline import run_pipeline
from .pricing import futures_curve, futures_price
from .supply_cost import CostStructure, SupplyFactors, marginal_cost, token_supply, total_unit_cost


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, engine=replace(cfg.engine, base_seed=args.seed))
    return cfg


def _out(args, cfg):
    return args.out or cfg.output_dir


def cmd_run(args):
    cfg = _config(args)
    manifest = run_pipeline(cfg, _out(args, cfg))
    print(f"wrote {len(manifest['files'])} files to {_out(args, cfg)} (config {manifest['config_sha256'][:12]})")


def cmd_simulate(args):
    cfg = _config(args)
    scen = next((s for s in cfg.scenarios if s.name == args.scenario), None)
    if scen is None:
        raise SitmarkError(f"no scenario named {args.scenario!r}")
    n = args.n_paths or cfg.engine.n_paths
    horizon = args.horizon or cfg.engine.horizon
    ens = run_scenario(scen, cfg.process, n, horizon, cfg.engine.dt, cfg.engine.base_seed, cfg.engine.x0)
    out = _out(args, cfg)
    write_ensemble_csv(os.path.join(out, "ensemble.csv"), ens, args.export_paths)
    write_fan_chart_csv(os.path.join(out, "fan_chart.csv"), summarize(ens))
    print(f"simulated {n} paths over {horizon} years into {out}")


def cmd_price(args):
    cfg = _config(args)
    x = math.log(args.spot)
    if args.curve:
        as_of = date.fromisoformat(args.as_of) if args.as_of else cfg.hedging.start_date
        quotes = futures_curve(x, args.t, cfg.process, as_of=as_of, beta_shift=args.beta_shift)
        path = os.path.join(_out(args, cfg), "futures_curve.csv")
        write_curve_csv(path, quotes)
        for q in quotes:
            print(f"{q.T:.6f},{q.price:.6f}")
        return
    if args.T is None:
        raise SitmarkError("--T is required unless --curve is given")
    print(f"{futures_price(x, args.t, args.T, cfg.process, args.beta_shift):.10g}")


def cmd_index(args):
    cfg = _config(args)
    quotes = read_quotes_csv(args.quotes)
    snap = compute_tpi(quotes, args.s_sit, args.cap, args.timestamp)
    header, row = index_row(snap)
    path = os.path.join(_out(args, cfg), "index.csv")
    write_csv(path, header, [row])
    print(f"TPI = {snap.tpi:.6f}")
    for k in sorted(snap.weights):
        print(f"  {k}: {snap.weights[k]:.6f}")


def cmd_margin(args):
    cfg = _config(args)
    spec = cfg.contract
    if args.sigma20 is not None:
        sigma = args.sigma20
    elif args.prices:
        sigma = realized_vol_20d(np.loadtxt(args.prices, delimiter=",", ndmin=1))
    else:
        raise SitmarkError("give --sigma20 or --prices")
    T = spec.holding_period if args.holding_period is None else args.holding_period
    m = initial_margin(sigma, T, args.notional, spec)
    print(f"sigma20={sigma:.6f} initial_margin={m:.2f} maintenance_margin={spec.maintenance_ratio * m:.2f}")


def cmd_hedge(args):
    cfg = _config(args)
    hed = cfg.hedging
    horizon = args.horizon or hed.horizon
    rho = args.target_rho or hed.target_rho
    roll = RollRule(hed.roll_days_before_expiry if args.roll_days is None else args.roll_days, hed.rebalance_every)
    h = hed.h if args.h is None else (args.h if args.h == "optimal" else float(args.h))
    n = args.n_paths or cfg.engine.n_paths
    x0 = cfg.process.theta0 if cfg.engine.x0 is None else cfg.engine.x0
    from .process import simulate_ensemble

    ens = simulate_ensemble(cfg.process, x0, horizon, cfg.engine.dt, n, cfg.engine.base_seed)
    rep = backtest_hedge(ens, BasisSpec(target_rho=rho, kappa=hed.basis_kappa), horizon, roll, h, hed.start_date)
    write_hedge_report_csv(os.path.join(_out(args, cfg), "hedge_report.csv"), rep)
    print(rep.summary())


def cmd_sensitivity(args):
    cfg = _config(args)
    values = [float(v) for v in args.values.split(",")]
    rows = sensitivity_sweep(
        args.parameter,
        values,
        cfg.process,
        args.metric,
        n_paths=args.n_paths or cfg.engine.n_paths,
        horizon=cfg.engine.horizon,
        dt=cfg.engine.dt,
        seed=cfg.engine.base_seed,
        hedge_horizon=cfg.hedging.horizon,
        target_rho=cfg.hedging.target_rho,
    )
    write_csv(os.path.join(_out(args, cfg), f"sensitivity_{args.parameter}_{args.metric}.csv"), (args.parameter, args.metric), rows)
    for v, m in rows:
        print(f"{v:g},{m:.6g}")


def cmd_cost(args):
    q = token_supply(SupplyFactors(args.energy_cost, args.hardware_eff, args.algo_eff, args.capital))
    mc = marginal_cost(args.energy_cost, args.hardware_eff, args.algo_eff)
    print(f"token_supply={q:.6g}")
    print(f"marginal_cost={mc:.6g}")
    if args.lifetime_tokens is not None:
        total = total_unit_cost(CostStructure(args.train_cost, args.lifetime_tokens, mc))
        print(f"total_unit_cost={total:.6g}")


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, default):
        parser.add_argument("--config", default=default, help="configuration file (default: $SITMARK_CONFIG or built-in defaults)")
        parser.add_argument("--seed", type=int, default=default, help="override engine base_seed")
        parser.add_argument("--out", default=default, help="output directory (default: config [output] dir)")
        return parser

    # flags may appear before or after the subcommand; the subcommand copy must not reset them
    common = global_flags(argparse.ArgumentParser(add_help=False), argparse.SUPPRESS)
    p = global_flags(argparse.ArgumentParser(prog="sitmark", description=__doc__), None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run the full pipeline")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", parents=[common], help="simulate an ensemble and export CSVs")
    s.add_argument("--scenario", default="baseline")
    s.add_argument("--n-paths", type=int)
    s.add_argument("--horizon", type=float)
    s.add_argument("--export-paths", type=int, default=100, help="number of paths written to ensemble.csv")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("price", parents=[common], help="futures price or curve")
    s.add_argument("--spot", type=float, required=True, help="spot price per million SIT")
    s.add_argument("--t", type=float, default=0.0, help="valuation time in years")
    s.add_argument("--T", type=float, help="maturity in years")
    s.add_argument("--curve", action="store_true", help="price the listed contract calendar")
    s.add_argument("--as-of", help="listing date for --curve (ISO)")
    s.add_argument("--beta-shift", type=float, default=0.0)
    s.set_defaults(func=cmd_price)

    s = sub.add_parser("index", parents=[common], help="compute the token price index from a quotes CSV")
    s.add_argument("quotes")
    s.add_argument("--cap", type=float, default=DEFAULT_CAP)
    s.add_argument("--s-sit", type=float, default=DEFAULT_S_SIT)
    s.add_argument("--timestamp")
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("margin", parents=[common], help="initial margin for one position")
    s.add_argument("--notional", type=float, required=True)
    s.add_argument("--sigma20", type=float)
    s.add_argument("--prices", help="file of daily settlement prices (one per line)")
    s.add_argument("--holding-period", type=float)
    s.set_defaults(func=cmd_margin)

    s = sub.add_parser("hedge", parents=[common], help="rolled futures hedge backtest")
    s.add_argument("--horizon", type=float)
    s.add_argument("--target-rho", type=float)
    s.add_argument("--roll-days", type=int)
    s.add_argument("--h", help="hedge ratio or 'optimal'")
    s.add_argument("--n-paths", type=int)
    s.set_defaults(func=cmd_hedge)

    s = sub.add_parser("sensitivity", parents=[common], help="one-parameter sweep")
    s.add_argument("--parameter", required=True)
    s.add_argument("--values", required=True, help="comma-separated values (write --values=-0.5,0 when the first is negative)")
    s.add_argument("--metric", default="terminal_p90", choices=METRICS)
    s.add_argument("--n-paths", type=int)
    s.set_defaults(func=cmd_sensitivity)

    s = sub.add_parser("cost", parents=[common], help="token supply and unit cost")
    s.add_argument("--energy-cost", type=float, required=True)
    s.add_argument("--hardware-eff", type=float, required=True)
    s.add_argument("--algo-eff", type=float, required=True)
    s.add_argument("--capital", type=float, required=True)
    s.add_argument("--train-cost", type=float, default=0.0)
    s.add_argument("--lifetime-tokens", type=float)
    s.set_defaults(func=cmd_cost)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (SitmarkError, OSError) as exc:
        print(f"sitmark {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
