"""Experiment driver: single runs, comparison sweeps, CSV and image output.

Three canned experiment families compare chord-only reconstruction against
mixed reflected/chord reconstruction on the same scene: a head-to-head pair,
a sweep over the chord fraction, and a sweep over the obstacle size.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .errors import EmptyRegion
from .geometry import Scene
from .phantom import avg_error_per_cell, discretize, export_pgm
from .projection import assemble
from .rays import RaySet, enumerate_unbroken, sample_ray_set
from .solver import SolveReport, solve

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("label", "n_rays", "fraction_unbroken", "obstacle_side",
               "error", "iterations", "converged", "seed")


@dataclass(frozen=True)
class ExperimentRow:
    """One completed solve, formatted as a report line."""

    label: str
    n_rays: int
    fraction_unbroken: float
    obstacle_side: float
    error: float
    iterations: float
    converged: bool
    seed: int


@dataclass(frozen=True, eq=False)
class ReconstructionOutcome:
    """Full result of one pipeline run (row plus the arrays behind it)."""

    row: ExperimentRow
    solution: np.ndarray
    f_true: np.ndarray
    scene: Scene
    report: SolveReport


def _ray_set_for(config: ExperimentConfig, scene: Scene) -> RaySet:
    layout = config.build_stations()
    if config.n_total is None:
        return enumerate_unbroken(layout, scene.obstacle)
    return sample_ray_set(scene, layout, config.n_total,
                          config.fraction_unbroken, config.seed)


def run_reconstruction(config: ExperimentConfig, label: str = "run",
                       f_true: Optional[np.ndarray] = None,
                       write_images: bool = True) -> ReconstructionOutcome:
    """Full pipeline: scene, stations, rays, assembly, solve, error, images.

    ``f_true`` overrides the config phantom with an explicit per-cell field
    (already masked); the solver radii are derived from whichever field is
    used unless the config pins them.
    """
    config.validate()
    scene = config.build_scene()
    if scene.region_count == 0:
        raise EmptyRegion("no reconstruction cells between boundary and obstacle")
    if f_true is None:
        f_true = discretize(config.phantom(), scene)
    else:
        f_true = np.asarray(f_true, dtype=np.float64)
    rays = _ray_set_for(config, scene)
    system = assemble(scene, rays, f_true)
    f_scale = float(np.abs(f_true).max())
    if f_scale == 0.0:
        f_scale = 1.0   # degenerate all-zero field; radii are arbitrary then
    opts = config.solve_options(f_scale, scene.region_count)
    report = solve(system, opts)
    error = avg_error_per_cell(f_true, report.solution, scene.cell_classes)
    row = ExperimentRow(
        label=label,
        n_rays=system.r,
        fraction_unbroken=config.fraction_unbroken,
        obstacle_side=config.obstacle_side,
        error=error,
        iterations=report.iterations,
        converged=report.converged,
        seed=config.seed,
    )
    if write_images and config.image_dir:
        os.makedirs(config.image_dir, exist_ok=True)
        export_pgm(f_true, scene, os.path.join(config.image_dir, f"{label}_original.pgm"))
        export_pgm(report.solution, scene,
                   os.path.join(config.image_dir, f"{label}_reconstructed.pgm"))
    logger.info("%s: %d rays, error %.6e, %d iterations, converged=%s",
                label, row.n_rays, row.error, report.iterations, report.converged)
    return ReconstructionOutcome(row=row, solution=report.solution,
                                 f_true=f_true, scene=scene, report=report)


def run_single(config: ExperimentConfig, label: str = "run") -> ExperimentRow:
    """Run one experiment and return its report row."""
    return run_reconstruction(config, label=label).row


def run_table1(config: ExperimentConfig) -> list[ExperimentRow]:
    """Chord-only versus 50/50 mixed reconstruction on the same scene."""
    if config.n_total is None:
        raise ValueError("table1 needs a fixed rays.n_total sample size")
    art = run_single(replace(config, fraction_unbroken=1.0), label="art")
    brt = run_single(replace(config, fraction_unbroken=0.5), label="brt")
    return [art, brt]


TABLE2_FRACTIONS = tuple(round(0.50 + 0.05 * k, 2) for k in range(10))


def run_table2(config: ExperimentConfig,
               fractions: Optional[Sequence[float]] = None,
               seeds: Optional[Sequence[int]] = None) -> list[ExperimentRow]:
    """Sweep the chord fraction of a fixed-size ray set (one seed per point)."""
    if config.n_total is None:
        raise ValueError("table2 needs a fixed rays.n_total sample size")
    if fractions is None:
        fractions = TABLE2_FRACTIONS
    if seeds is None:
        seeds = [config.seed + k for k in range(len(fractions))]
    if len(seeds) != len(fractions):
        raise ValueError("need one seed per fraction")
    rows = []
    for frac, seed in zip(fractions, seeds):
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"fraction {frac} outside [0, 1]")
        cfg = replace(config, fraction_unbroken=float(frac), seed=int(seed))
        rows.append(run_single(cfg, label=f"fraction_{frac:.2f}"))
    return rows


TABLE3_SIDE_CELLS = tuple(range(10, 29, 2))


def run_table3(config: ExperimentConfig,
               side_cells_list: Optional[Sequence[int]] = None,
               seeds: Optional[Sequence[int]] = None
               ) -> list[tuple[ExperimentRow, ExperimentRow]]:
    """Sweep the obstacle size; per size, one chord-only and one 50/50 run."""
    if config.n_total is None:
        raise ValueError("table3 needs a fixed rays.n_total sample size")
    if side_cells_list is None:
        side_cells_list = TABLE3_SIDE_CELLS
    if seeds is None:
        seeds = [config.seed + k for k in range(len(side_cells_list))]
    if len(seeds) != len(side_cells_list):
        raise ValueError("need one seed per obstacle size")
    pairs = []
    for cells, seed in zip(side_cells_list, seeds):
        cfg = replace(config, obstacle_side_cells=int(cells), seed=int(seed))
        cfg.validate()
        side = cfg.obstacle_side
        art = run_single(replace(cfg, fraction_unbroken=1.0),
                         label=f"side_{side:g}_art")
        brt = run_single(replace(cfg, fraction_unbroken=0.5),
                         label=f"side_{side:g}_brt")
        pairs.append((art, brt))
    return pairs


def average_row(rows: Sequence[ExperimentRow], label: str = "average") -> ExperimentRow:
    """Mean error/iterations across rows (the sweep summary line)."""
    if not rows:
        raise ValueError("cannot average zero rows")
    return ExperimentRow(
        label=label,
        n_rays=round(sum(r.n_rays for r in rows) / len(rows)),
        fraction_unbroken=sum(r.fraction_unbroken for r in rows) / len(rows),
        obstacle_side=sum(r.obstacle_side for r in rows) / len(rows),
        error=sum(r.error for r in rows) / len(rows),
        iterations=sum(r.iterations for r in rows) / len(rows),
        converged=all(r.converged for r in rows),
        seed=rows[0].seed,
    )


def table2_csv_rows(rows: Sequence[ExperimentRow]) -> list[ExperimentRow]:
    return list(rows) + [average_row(rows)]


def table3_csv_rows(pairs: Sequence[tuple[ExperimentRow, ExperimentRow]]
                    ) -> list[ExperimentRow]:
    flat: list[ExperimentRow] = []
    for art, brt in pairs:
        flat.extend((art, brt))
    art_rows = [p[0] for p in pairs]
    brt_rows = [p[1] for p in pairs]
    return flat + [average_row(art_rows), average_row(brt_rows)]


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.5e}"
    return str(value)


def format_csv(rows: Sequence[ExperimentRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(
            _format_value(getattr(row, col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_csv(path, rows: Sequence[ExperimentRow]) -> None:
    """Write rows in execution order; reals in 6-significant-digit scientific."""
    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(format_csv(rows))
