"""Command-line interface.

Verbs: ``run`` (single experiment), ``table1`` / ``table2`` / ``table3``
(comparison sweeps), ``export-rays`` and ``export-system`` (text dumps of the
sampled geometry and the assembled linear system).  Exit codes: 0 success,
1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .config import ExperimentConfig, load_config
from .errors import BrokenRayError, ConfigError
from .harness import (
    average_row,
    run_single,
    run_table1,
    run_table2,
    run_table3,
    table2_csv_rows,
    table3_csv_rows,
    write_csv,
)
from .phantom import discretize
from .projection import assemble, save_system
from .rays import save_rayset


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brokenray",
        description="Travel-time tomography experiments around a reflecting obstacle.")
    parser.add_argument("--config", metavar="PATH",
                        help="key=value config file (defaults to the reference setup)")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="override the config's random seed")
    parser.add_argument("--out", metavar="DIR",
                        help="directory for CSV/PGM/text outputs")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate the configuration and exit without solving")
    parser.add_argument("verb", choices=(
        "run", "table1", "table2", "table3", "export-rays", "export-system"))
    return parser


def _load(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out:
        config = replace(
            config,
            csv_path=os.path.join(args.out, os.path.basename(config.csv_path)),
            image_dir=os.path.join(args.out, os.path.basename(config.image_dir or "images")),
        )
    config.validate()
    return config


def _export_dir(config: ExperimentConfig, args) -> str:
    out = args.out or os.path.dirname(config.csv_path) or "."
    os.makedirs(out, exist_ok=True)
    return out


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        config = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    if args.dry_run:
        print("configuration ok")
        return 0
    try:
        if args.verb == "run":
            rows = [run_single(config)]
            write_csv(config.csv_path, rows)
        elif args.verb == "table1":
            rows = run_table1(config)
            write_csv(config.csv_path, rows)
        elif args.verb == "table2":
            rows = table2_csv_rows(run_table2(config))
            write_csv(config.csv_path, rows)
        elif args.verb == "table3":
            rows = table3_csv_rows(run_table3(config))
            write_csv(config.csv_path, rows)
        elif args.verb == "export-rays":
            scene = config.build_scene()
            from .harness import _ray_set_for
            rays = _ray_set_for(config, scene)
            save_rayset(rays, os.path.join(_export_dir(config, args), "rays.txt"))
        elif args.verb == "export-system":
            scene = config.build_scene()
            from .harness import _ray_set_for
            rays = _ray_set_for(config, scene)
            system = assemble(scene, rays, discretize(config.phantom(), scene))
            save_system(system, os.path.join(_export_dir(config, args), "system.txt"))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except BrokenRayError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
