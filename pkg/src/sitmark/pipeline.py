"""End-to-end experiment: simulate, summarize, price, hedge, settle."""

import hashlib
import json
import math
import os

import numpy as np

from . import __version__
from .clearing import MarginAccount, apply_price_limits, initial_margin, round_to_tick, settle_accounts
from .config import RunConfig, dumps_config
from .engine import DEFAULT_BUCKET_EDGES, PERCENTILES, mixture_ensemble, bucket_volatility, run_scenario, summarize
from .errors import SitmarkError
from .hedging import BasisSpec, RollRule, backtest_hedge, single_period_hedge
from .io import (
    atomic_write_text,
    write_csv,
    write_curve_csv,
    write_ensemble_csv,
    write_fan_chart_csv,
    write_hedge_report_csv,
    write_ledger_csv,
)
from .pricing import futures_curve


class PipelineError(SitmarkError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _business_dates(start, n):
    return [d.astype(object) for d in np.busday_offset(np.datetime64(start), np.arange(n), roll="forward")]


def run_pipeline(config: RunConfig, out_dir=None) -> dict:
    """Run every stage and write CSV outputs plus ``manifest.json``.

    Returns the manifest. Raises :class:`PipelineError` naming the failing stage.
    """
    out = os.fspath(out_dir or config.output_dir)
    eng, hed = config.engine, config.hedging
    baseline = next((s for s in config.scenarios if s.name == "baseline"), config.scenarios[0])
    x0 = config.process.theta0 if eng.x0 is None else eng.x0
    files = []
    stage = "simulate"
    try:
        ens = run_scenario(baseline, config.process, eng.n_paths, eng.horizon, eng.dt, eng.base_seed, x0)
        if eng.export_paths:
            write_ensemble_csv(os.path.join(out, "ensemble.csv"), ens, eng.export_paths)
            files.append("ensemble.csv")

        stage = "summarize"
        stats = summarize(ens)
        write_fan_chart_csv(os.path.join(out, "fan_chart.csv"), stats)
        files.append("fan_chart.csv")
        summary = [
            ("scenario", baseline.name),
            ("n_paths", ens.n_paths),
            ("horizon", ens.horizon),
            ("terminal_mean", float(stats.mean[-1])),
            ("terminal_skewness", stats.terminal_skewness),
            ("terminal_skewness_se", stats.terminal_skewness_se),
            ("frac_doubling", stats.frac_doubling),
            ("frac_swing5", stats.frac_swing5),
            ("half_life_years", baseline.params(config.process).half_life),
        ]
        write_csv(os.path.join(out, "summary.csv"), ("statistic", "value"), summary)
        files.append("summary.csv")

        stage = "scenarios"
        edges = tuple(e for e in DEFAULT_BUCKET_EDGES if e < eng.horizon) + (eng.horizon,)
        times, mix, labels = mixture_ensemble(config.scenarios, config.process, eng.n_paths, eng.horizon, eng.dt, eng.base_seed, x0)
        labels = np.asarray(labels)
        rows = []
        for s in config.scenarios:
            block = mix[labels == s.name]
            if block.shape[0] == 0:
                continue
            term = np.exp(block[:, -1])
            rows.append((s.name, s.mixture_weight, block.shape[0], float(term.mean())) + tuple(float(v) for v in np.percentile(term, PERCENTILES)))
        write_csv(os.path.join(out, "scenarios.csv"), ("scenario", "weight", "n_paths", "terminal_mean") + tuple(f"terminal_p{p}" for p in PERCENTILES), rows)
        files.append("scenarios.csv")
        vols = bucket_volatility(times, mix, edges)
        write_csv(os.path.join(out, "vol_term_structure.csv"), ("bucket_lo", "bucket_hi", "vol"), zip(edges[:-1], edges[1:], vols.tolist()))
        files.append("vol_term_structure.csv")

        stage = "price"
        curve = futures_curve(x0, 0.0, config.process, as_of=hed.start_date)
        write_curve_csv(os.path.join(out, "futures_curve.csv"), curve)
        files.append("futures_curve.csv")

        stage = "hedge"
        basis = BasisSpec(target_rho=hed.target_rho, kappa=hed.basis_kappa)
        roll = RollRule(hed.roll_days_before_expiry, hed.rebalance_every)
        report = backtest_hedge(ens, basis, hed.horizon, roll, hed.h, hed.start_date)
        write_hedge_report_csv(os.path.join(out, "hedge_report.csv"), report)
        files.append("hedge_report.csv")
        single = single_period_hedge(ens, basis, hed.horizon, roll, hed.start_date)
        write_hedge_report_csv(os.path.join(out, "hedge_single_period.csv"), single)
        files.append("hedge_single_period.csv")

        stage = "settle"
        spec = config.contract
        n_days = min(63, ens.times.size - 1)
        raw = np.exp(ens.log_prices[0, : n_days + 1])
        settles = [round_to_tick(float(raw[0]), spec)]
        for p in raw[1:]:
            settles.append(max(spec.tick, round_to_tick(apply_price_limits(settles[-1], float(p), spec).price, spec)))
        lots = 10
        margin = initial_margin(config.process.sigma, spec.holding_period, lots * settles[0] * spec.units_per_lot, spec)
        accounts = {
            "long": MarginAccount.open(lots, margin, settles[0], spec),
            "short": MarginAccount.open(-lots, margin, settles[0], spec),
        }
        dates = _business_dates(hed.start_date, n_days + 1)
        _, ledger = settle_accounts(accounts, settles[1:], dates[1:], spec)
        write_ledger_csv(os.path.join(out, "settlement_ledger.csv"), ledger)
        files.append("settlement_ledger.csv")

        stage = "manifest"
        config_text = dumps_config(config)
        atomic_write_text(os.path.join(out, "config.ini"), config_text)
        files.append("config.ini")
        manifest = {
            "toolkit_version": __version__,
            "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
            "base_seed": eng.base_seed,
            "files": {f: _sha256(os.path.join(out, f)) for f in files},
            "hedge": {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in report.as_row().items()},
        }
        atomic_write_text(os.path.join(out, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, exc) from exc
