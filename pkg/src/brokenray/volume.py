"""Slice-by-slice 3D reconstruction for obstacles with a z-independent boundary.

When every horizontal cut through the obstacle is the same polygon, the
surface normal has no z component, so a ray launched in a cutting plane
reflects back into that plane.  Each plane then carries a complete, standalone
2D problem, and the 3D field is the stack of the 2D reconstructions.  Planes
missing the obstacle entirely are still solved with the same solver, using
chords only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .errors import BrokenRayError, SliceFailure, ZDependentObstacle
from .geometry import Obstacle, Scene
from .harness import ExperimentRow, run_reconstruction
from .phantom import export_pgm

VERTEX_MATCH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class VolumeSpec:
    """Stacked 2D problems: one plane per z, sharing one obstacle cross-section.

    ``phantom3d(x, y, z)`` must accept numpy arrays for x and y and a scalar z
    and return the slowness sampled on that plane.  ``cross_sections`` holds
    one polygon per slice; omit it for a prism built from the base config's
    obstacle.
    """

    base_config: ExperimentConfig
    z_slices: tuple[float, ...]
    phantom3d: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    cross_sections: Optional[tuple[Obstacle, ...]] = None

    def __post_init__(self):
        zs = tuple(float(z) for z in self.z_slices)
        object.__setattr__(self, "z_slices", zs)
        if not zs:
            raise ValueError("need at least one slice")
        if any(b <= a for a, b in zip(zs, zs[1:])):
            raise ValueError("z_slices must be strictly increasing (disjoint planes)")
        if self.cross_sections is not None and len(self.cross_sections) != len(zs):
            raise ValueError("need one obstacle cross-section per slice")

    def sections(self) -> tuple[Obstacle, ...]:
        if self.cross_sections is not None:
            return self.cross_sections
        prism = self.base_config.build_scene().obstacle
        return tuple(prism for _ in self.z_slices)


@dataclass(frozen=True, eq=False)
class SliceResult:
    z: float
    image: np.ndarray
    row: ExperimentRow


@dataclass(frozen=True, eq=False)
class VolumeResult:
    slices: tuple[SliceResult, ...]

    def __len__(self) -> int:
        return len(self.slices)


def check_z_independence(spec: VolumeSpec) -> bool:
    """Whether all slices share one cross-section (vertex lists equal to 1e-12).

    This is the discrete form of the requirement that the obstacle boundary
    not vary with z, which is what keeps reflected rays inside their plane.
    """
    sections = spec.sections()
    first = sections[0]
    for other in sections[1:]:
        if len(other.vertices) != len(first.vertices):
            return False
        for (ax, ay), (bx, by) in zip(first.vertices, other.vertices):
            if abs(ax - bx) > VERTEX_MATCH_TOL or abs(ay - by) > VERTEX_MATCH_TOL:
                return False
    return True


def solve_volume(spec: VolumeSpec, write_images: bool = False) -> VolumeResult:
    """Reconstruct every slice with the standard 2D pipeline.

    Each slice samples ``phantom3d`` at its height and runs the exact same
    pipeline a standalone 2D experiment would, with the same seed, so slice
    results are bit-identical to single-plane runs.
    """
    if not check_z_independence(spec):
        raise ZDependentObstacle(
            "slice cross-sections differ; plane cuts do not decouple")
    scene = spec.base_config.build_scene()
    xs, ys = scene.grid.cell_centers()
    results = []
    for index, z in enumerate(spec.z_slices):
        f_true = np.asarray(spec.phantom3d(xs, ys, z), dtype=np.float64)
        f_true = np.where(scene.region_mask, f_true, 0.0)
        try:
            outcome = run_reconstruction(
                spec.base_config, label=f"slice_{index}",
                f_true=f_true, write_images=write_images)
        except BrokenRayError as exc:
            raise SliceFailure(z, exc) from exc
        results.append(SliceResult(z=z, image=outcome.solution, row=outcome.row))
    return VolumeResult(slices=tuple(results))


def export_volume(result: VolumeResult, scene: Scene, out_dir) -> None:
    """One PGM per slice (``slice_<index>_<z>.pgm``) plus a manifest of z values."""
    os.makedirs(out_dir, exist_ok=True)
    manifest_lines = []
    for index, sl in enumerate(result.slices):
        name = f"slice_{index}_{sl.z:g}.pgm"
        export_pgm(sl.image, scene, os.path.join(out_dir, name))
        manifest_lines.append(f"{index} {sl.z:.17g} {name}")
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(manifest_lines) + "\n")
