"""Command-line front end: ``mimonoma --preset fig2 --trials 100000 --out results``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, kernels
from .analysis import xi_thresholds
from .config import config_to_dict, parse_config, preset, with_overrides
from .simulator import ConfigError, EstimateResult, estimate, full_system_interference

log = logging.getLogger("mimonoma")

CSV_COLUMNS = (
    "rho_db",
    "protocol",
    "cluster",
    "group",
    "user",
    "outage_mc",
    "stderr",
    "outage_closed_form",
    "sum_rate",
)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def csv_text(result: EstimateResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in result.outages:
        writer.writerow(
            [
                _fmt(row.rho_db),
                row.protocol,
                row.cluster,
                row.group,
                row.user,
                _fmt(row.outage_prob),
                _fmt(row.standard_error),
                _fmt(row.closed_form),
                _fmt(row.sum_rate),
            ]
        )
    return buf.getvalue()


def manifest(result: EstimateResult) -> dict:
    cfg, system = result.config, result.system
    xi = xi_thresholds(cfg.group)
    check = full_system_interference(system, cfg, np.random.default_rng([cfg.seed, 0xFEED]))
    return {
        "version": __version__,
        "seed": cfg.seed,
        "config": config_to_dict(cfg),
        "derived": {
            "ranks": list(system.ranks),
            "M_eff": system.M_eff,
            "gamma_shape": system.shape,
            "users_per_cluster": cfg.users_per_cluster,
            "a": [[float(v) for v in row] for row in system.effective.a],
            "xi": [float(v) for v in xi.xi],
            "xi_star": [float(v) for v in xi.xi_star],
            "max_leakage_fro": float(
                max((v for i, row in enumerate(system.leakage()) for j, v in enumerate(row) if i != j), default=0.0)
            ),
            "full_system_interference_power": check["interference_power"],
            "full_system_min_signal_power": check["signal_power"],
            "rejected_draws": int(result.rejected_draws),
        },
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimonoma",
        description="Massive-MIMO-NOMA outage simulation with closed-form companions.",
    )
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="YAML run config (or a previous manifest)")
    src.add_argument("--preset", choices=("fig1", "fig2", "fig3"))
    parser.add_argument("--trials", type=lambda s: int(float(s)), help="Monte Carlo trials")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--analytical-only", action="store_true", help="skip Monte Carlo")
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(args) -> int:
    try:
        if args.preset:
            cfg, name = preset(args.preset), args.preset
        else:
            cfg, _ = parse_config(args.config)
            name = args.config.stem
        cfg = with_overrides(cfg, trials=args.trials, seed=args.seed)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        log.info("running %s with %d trials (kernel: %s)", name, cfg.trials, kernels.BACKEND)
        result = estimate(cfg, workers=args.workers, analytical_only=args.analytical_only)
    except ConfigError as exc:
        print(f"mimonoma: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        csv_path = args.out / f"{name}.csv"
        csv_path.write_bytes(csv_text(result).encode("utf-8"))
        man_path = args.out / f"{name}.manifest.yaml"
        man_path.write_text(yaml.safe_dump(manifest(result), sort_keys=False), encoding="utf-8")
    except OSError as exc:
        print(f"mimonoma: cannot write output: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %s and %s", csv_path, man_path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
