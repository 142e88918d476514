"""Experiment configuration: flat key=value files, validation, scene building.

A config file holds one dotted key per line (`grid.n=64`), with `#` comments
and blank lines ignored.  Unset keys fall back to the reference experiment:
a 64x64 grid of 13-unit cells, a radius-350 boundary, a square obstacle of 30
cells per row, 512 transmitters and receivers, and 126050 sampled rays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .errors import ConfigError
from .geometry import CircleBoundary, Grid, Scene, make_square_obstacle
from .phantom import PhantomSpec
from .rays import StationLayout, place_stations
from .solver import SolveOptions


@dataclass(frozen=True)
class ExperimentConfig:
    grid_n: int = 64
    grid_d: float = 13.0
    radius: float = 350.0
    obstacle_shape: str = "square"
    obstacle_side_cells: int = 30
    n_tx: int = 512
    n_rx: int = 512
    phantom_k: float = 1e-6
    n_total: Optional[int] = 126050     # None means: enumerate every chord
    fraction_unbroken: float = 0.5
    seed: int = 1
    radius_euclidean: Optional[float] = None   # None: scale-derived default
    radius_max: Optional[float] = None
    required_consecutive: int = 2
    max_sweeps: int = 500
    relaxation: float = 1.0
    csv_path: str = "results.csv"
    image_dir: str = "images"

    @property
    def obstacle_side(self) -> float:
        return self.obstacle_side_cells * self.grid_d

    def validate(self) -> None:
        if self.grid_n <= 0 or self.grid_d <= 0:
            raise ConfigError("grid.n and grid.d must be positive")
        if self.radius <= 0:
            raise ConfigError("boundary.radius must be positive")
        if self.obstacle_shape != "square":
            raise ConfigError(f"unsupported obstacle.shape {self.obstacle_shape!r}")
        if self.obstacle_side_cells <= 0:
            raise ConfigError("obstacle.side_cells must be positive")
        if self.obstacle_side >= 2 * self.radius:
            raise ConfigError("obstacle does not fit inside the observation boundary")
        if self.obstacle_side * (2 ** 0.5) / 2 >= self.radius:
            raise ConfigError("obstacle corners must stay strictly inside the boundary")
        if 2 * self.radius > self.grid_n * self.grid_d:
            raise ConfigError("observation boundary does not fit inside the grid")
        if self.n_tx < 2 or self.n_rx < 2:
            raise ConfigError("need at least two transmitters and two receivers")
        if self.phantom_k <= 0:
            raise ConfigError("phantom.k must be positive")
        if self.n_total is not None and self.n_total < 1:
            raise ConfigError("rays.n_total must be at least 1 (or 'all')")
        if not 0.0 <= self.fraction_unbroken <= 1.0:
            raise ConfigError("rays.fraction_unbroken must lie in [0, 1]")
        if self.n_total is None and self.fraction_unbroken != 1.0:
            raise ConfigError("rays.n_total=all requires rays.fraction_unbroken=1")
        for name in ("radius_euclidean", "radius_max"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ConfigError(f"solver.{name} must be positive")
        if self.required_consecutive < 2:
            raise ConfigError("solver.required_consecutive must be at least 2")
        if self.max_sweeps < 1:
            raise ConfigError("solver.max_sweeps must be positive")
        if not 0.0 < self.relaxation <= 2.0:
            raise ConfigError("solver.relaxation must lie in (0, 2]")

    def build_scene(self) -> Scene:
        """Grid centered on the boundary circle, square obstacle at the center."""
        half = self.grid_n * self.grid_d / 2.0
        grid = Grid(origin=(-half, -half), n=self.grid_n, cell_size=self.grid_d)
        boundary = CircleBoundary(center=(0.0, 0.0), radius=self.radius)
        obstacle = make_square_obstacle((0.0, 0.0), self.obstacle_side)
        return Scene.build(grid, boundary, obstacle)

    def build_stations(self) -> StationLayout:
        boundary = CircleBoundary(center=(0.0, 0.0), radius=self.radius)
        return place_stations(boundary, self.n_tx, self.n_rx)

    def phantom(self) -> PhantomSpec:
        return PhantomSpec(k=self.phantom_k, center=(0.0, 0.0))

    def solve_options(self, f_scale: float, region_cells: int) -> SolveOptions:
        """Solver options; unset radii fall back to scale-derived defaults."""
        opts = SolveOptions.for_scale(f_scale, region_cells)
        overrides = {}
        if self.radius_euclidean is not None:
            overrides["radius_euclidean"] = self.radius_euclidean
        if self.radius_max is not None:
            overrides["radius_max"] = self.radius_max
        overrides["required_consecutive"] = self.required_consecutive
        overrides["max_sweeps"] = self.max_sweeps
        overrides["relaxation"] = self.relaxation
        return replace(opts, **overrides)


_KEY_TO_FIELD = {
    "grid.n": ("grid_n", int),
    "grid.d": ("grid_d", float),
    "boundary.radius": ("radius", float),
    "obstacle.shape": ("obstacle_shape", str),
    "obstacle.side_cells": ("obstacle_side_cells", int),
    "stations.n_tx": ("n_tx", int),
    "stations.n_rx": ("n_rx", int),
    "phantom.k": ("phantom_k", float),
    "rays.n_total": ("n_total", int),
    "rays.fraction_unbroken": ("fraction_unbroken", float),
    "rays.seed": ("seed", int),
    "solver.radius_euclidean": ("radius_euclidean", float),
    "solver.radius_max": ("radius_max", float),
    "solver.required_consecutive": ("required_consecutive", int),
    "solver.max_sweeps": ("max_sweeps", int),
    "solver.relaxation": ("relaxation", float),
    "outputs.csv_path": ("csv_path", str),
    "outputs.image_dir": ("image_dir", str),
}


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Parse flat key=value text on top of ``base`` (default: reference config)."""
    overrides = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        field_name, conv = _KEY_TO_FIELD[key]
        if key == "rays.n_total" and value.lower() == "all":
            overrides[field_name] = None
            continue
        try:
            overrides[field_name] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {line_no}: bad value for {key}: {value!r}") from exc
    config = replace(base or ExperimentConfig(), **overrides)
    config.validate()
    return config


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), base=base)
