"""Station layout, ray generation and sampling, and discrete ray signatures.

Rays come in two kinds: a straight chord between two boundary stations, and a
two-segment path that reflects once off the obstacle.  A reflected ray is
determined by its transmitter and the reflection point alone; the receiver is
wherever the reflected direction exits the observation circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import projection
from .errors import (
    BackFacing,
    Blocked,
    CornerPoint,
    DegenerateRay,
    ExhaustedCandidates,
    GrazingIncidence,
    NotVisible,
)
from .geometry import (
    CircleBoundary,
    Grid,
    Obstacle,
    Point,
    Scene,
    blocked_pairs,
    circle_exit,
    outward_normal,
    reflect,
    segment_blocked,
)

# Seedable generator used for all sampling; the algorithm identifier makes
# experiment protocols reproducible across implementations.
PRNG_ALGORITHM = "numpy-PCG64"

# resolution for de-duplicating reflection points along the perimeter
ARC_QUANTUM = 1e-12

# rejection-sampling budget per requested ray
MAX_ATTEMPTS_PER_RAY = 200


@dataclass(frozen=True)
class StationLayout:
    """Transmitters and receivers on the observation circle.

    Station ``k`` of a set of ``m`` sits at angle ``2*pi*k/m`` from the
    positive x axis through the circle center; transmitters and receivers
    follow the same rule, so equal counts give coincident sets.
    """

    transmitters: tuple[Point, ...]
    receivers: tuple[Point, ...]

    @property
    def n_tx(self) -> int:
        return len(self.transmitters)

    @property
    def n_rx(self) -> int:
        return len(self.receivers)


def place_stations(boundary: CircleBoundary, n_tx: int, n_rx: int) -> StationLayout:
    """Evenly spaced stations on the boundary circle (deterministic)."""
    if n_tx < 2 or n_rx < 2:
        raise ValueError("need at least two transmitters and two receivers")
    cx, cy = boundary.center
    r = boundary.radius

    def ring(m: int) -> tuple[Point, ...]:
        return tuple(
            (cx + r * math.cos(2.0 * math.pi * k / m),
             cy + r * math.sin(2.0 * math.pi * k / m))
            for k in range(m)
        )

    return StationLayout(ring(n_tx), ring(n_rx))


@dataclass(frozen=True)
class RayPath:
    """A single measured path: either one chord or two reflected segments."""

    tx: Point
    rx: Point
    reflection: Optional[Point] = None

    @property
    def is_broken(self) -> bool:
        return self.reflection is not None

    @property
    def legs(self) -> tuple[tuple[Point, Point], ...]:
        if self.reflection is None:
            return ((self.tx, self.rx),)
        return ((self.tx, self.reflection), (self.reflection, self.rx))

    @property
    def length(self) -> float:
        return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in self.legs)


@dataclass(frozen=True, eq=False)
class RaySet:
    """Ordered collection of rays; the order fixes the solver's row order."""

    rays: tuple[RayPath, ...]
    seed: Optional[int] = None
    fraction_unbroken: Optional[float] = None

    def __len__(self) -> int:
        return len(self.rays)

    @property
    def n_broken(self) -> int:
        return sum(1 for ray in self.rays if ray.is_broken)

    @property
    def n_unbroken(self) -> int:
        return len(self.rays) - self.n_broken


def make_unbroken_ray(tx: Point, rx: Point, obstacle: Obstacle) -> RayPath:
    """Straight chord between two stations; must not cross the obstacle."""
    if tx == rx:
        raise DegenerateRay("transmitter and receiver coincide")
    if segment_blocked(tx, rx, obstacle):
        raise Blocked(f"chord {tx} -> {rx} crosses the obstacle")
    return RayPath(tx=tx, rx=rx)


def make_broken_ray(tx: Point, q: Point, obstacle: Obstacle,
                    boundary: CircleBoundary) -> RayPath:
    """Reflected ray from ``tx`` via boundary point ``q`` on the obstacle.

    The incident direction is mirrored about the outward edge normal at ``q``
    and the receiver is the exact point where the reflected direction exits
    the observation circle (continuous-receiver model).

    Raises CornerPoint (q at a vertex), BackFacing (tx behind the face),
    GrazingIncidence (tangential hit), or NotVisible (first leg blocked).
    """
    normal = outward_normal(obstacle, q)
    dist = math.hypot(q[0] - tx[0], q[1] - tx[1])
    if dist == 0.0:
        raise DegenerateRay("transmitter coincides with reflection point")
    direction = ((q[0] - tx[0]) / dist, (q[1] - tx[1]) / dist)
    if direction[0] * normal[0] + direction[1] * normal[1] >= 0.0:
        raise BackFacing("transmitter is on the wrong side of the reflecting face")
    reflected = reflect(direction, normal)  # may raise GrazingIncidence
    if segment_blocked(tx, q, obstacle):
        raise NotVisible(f"reflection point {q} is hidden from {tx}")
    rx = circle_exit(q, reflected, boundary)
    return RayPath(tx=tx, rx=rx, reflection=q)


def sample_ray_set(scene: Scene, layout: StationLayout, n_total: int,
                   fraction_unbroken: float, seed: int) -> RaySet:
    """Random mixed ray set: ``round(n_total * fraction_unbroken)`` chords,
    the rest reflected rays.

    Chords are drawn as uniform ordered (transmitter, receiver) index pairs;
    reflected rays as a uniform transmitter index plus a uniform arc-length
    position on the obstacle perimeter.  Invalid candidates (blocked, grazing,
    back-facing, corner, duplicate) are rejected and redrawn.  The two groups
    are generated in a fixed order and then shuffled once, so the same seed
    always reproduces the same set, element for element.

    Raises ExhaustedCandidates when the retry budget runs out, which signals
    an over-constrained geometry (e.g. more chords requested than exist).
    """
    if not 0.0 <= fraction_unbroken <= 1.0:
        raise ValueError("fraction_unbroken must lie in [0, 1]")
    if n_total < 1:
        raise ValueError("n_total must be at least 1")
    n_unbroken = round(n_total * fraction_unbroken)
    n_broken = n_total - n_unbroken
    rng = np.random.default_rng(seed)
    obstacle = scene.obstacle
    boundary = scene.boundary
    perimeter = obstacle.perimeter

    broken: list[RayPath] = []
    seen_broken: set[tuple[int, int]] = set()
    budget = MAX_ATTEMPTS_PER_RAY * n_broken + 1000
    while len(broken) < n_broken:
        if budget <= 0:
            raise ExhaustedCandidates(
                f"could not draw {n_broken} broken rays "
                f"({len(broken)} found before the retry budget ran out)")
        budget -= 1
        k = int(rng.integers(layout.n_tx))
        s = float(rng.uniform(0.0, perimeter))
        key = (k, int(round(s / perimeter / ARC_QUANTUM)))
        if key in seen_broken:
            continue
        q, _ = obstacle.point_at_arclength(s)
        try:
            ray = make_broken_ray(layout.transmitters[k], q, obstacle, boundary)
        except (NotVisible, BackFacing, CornerPoint, GrazingIncidence, DegenerateRay):
            continue
        seen_broken.add(key)
        broken.append(ray)

    unbroken: list[RayPath] = []
    seen_unbroken: set[tuple[int, int]] = set()
    budget = MAX_ATTEMPTS_PER_RAY * n_unbroken + 1000
    while len(unbroken) < n_unbroken:
        if budget <= 0:
            raise ExhaustedCandidates(
                f"could not draw {n_unbroken} unbroken rays "
                f"({len(unbroken)} found before the retry budget ran out)")
        budget -= 1
        i = int(rng.integers(layout.n_tx))
        j = int(rng.integers(layout.n_rx))
        key = (i, j)
        if key in seen_unbroken:
            continue
        tx = layout.transmitters[i]
        rx = layout.receivers[j]
        try:
            ray = make_unbroken_ray(tx, rx, obstacle)
        except (DegenerateRay, Blocked):
            seen_unbroken.add(key)   # permanently invalid pair, never retry
            continue
        seen_unbroken.add(key)
        unbroken.append(ray)

    rays = broken + unbroken
    order = rng.permutation(n_total)
    rays = tuple(rays[k] for k in order)
    return RaySet(rays=rays, seed=seed, fraction_unbroken=fraction_unbroken)


def enumerate_unbroken(layout: StationLayout, obstacle: Obstacle) -> RaySet:
    """Every ordered (transmitter, receiver) pair whose chord clears the obstacle.

    Pairs with coincident endpoints are skipped.  When transmitter and
    receiver sets coincide, each geometric chord therefore appears twice, once
    per signal direction; this matches the sampling convention, which treats
    the two directions as distinct measurements.
    """
    tx_arr = np.array(layout.transmitters)
    rx_arr = np.array(layout.receivers)
    n_tx, n_rx = len(tx_arr), len(rx_arr)
    ti = np.repeat(np.arange(n_tx), n_rx)
    rj = np.tile(np.arange(n_rx), n_tx)
    ax, ay = tx_arr[ti, 0], tx_arr[ti, 1]
    bx, by = rx_arr[rj, 0], rx_arr[rj, 1]
    distinct = (ax != bx) | (ay != by)
    blocked = blocked_pairs(ax, ay, bx, by, obstacle)
    keep = distinct & ~blocked
    rays = tuple(
        RayPath(tx=(float(ax[m]), float(ay[m])), rx=(float(bx[m]), float(by[m])))
        for m in np.flatnonzero(keep)
    )
    return RaySet(rays=rays, seed=None, fraction_unbroken=1.0)


def discrete_signature(ray: RayPath, grid: Grid, cell_classes: np.ndarray) -> list[int]:
    """Sorted reconstruction cells the ray crosses with positive length.

    Two rays with equal signatures are interchangeable for the discrete
    problem: they produce rows with identical support.
    """
    from .geometry import CELL_REGION

    region = cell_classes == CELL_REGION
    cells: set[int] = set()
    for a, b in ray.legs:
        row = projection.traverse(grid, a, b)
        for idx in row.indices:
            if region[idx]:
                cells.add(int(idx))
    return sorted(cells)


def class_count_bound(v1: int, v2: int) -> int:
    """Upper bound on the number of distinct ray signatures: v1^2 + v1*v2.

    ``v1`` counts boundary-adjacent reconstruction cells and ``v2``
    obstacle-adjacent ones; a chord signature is determined by its two
    boundary cells and a reflected one by a boundary cell plus an obstacle
    cell.
    """
    if v1 < 0 or v2 < 0:
        raise ValueError("cell counts must be non-negative")
    return v1 * v1 + v1 * v2


def save_rayset(rayset: RaySet, path) -> None:
    """Write one ray per line: ``U txx txy rxx rxy`` or ``B txx txy qx qy rxx rxy``.

    Full double precision (17 significant digits) so another implementation
    can consume the exact same ray geometry.
    """
    with open(path, "w") as fh:
        for ray in rayset.rays:
            if ray.is_broken:
                q = ray.reflection
                fh.write(f"B {ray.tx[0]:.17g} {ray.tx[1]:.17g} "
                         f"{q[0]:.17g} {q[1]:.17g} "
                         f"{ray.rx[0]:.17g} {ray.rx[1]:.17g}\n")
            else:
                fh.write(f"U {ray.tx[0]:.17g} {ray.tx[1]:.17g} "
                         f"{ray.rx[0]:.17g} {ray.rx[1]:.17g}\n")


def load_rayset(path) -> RaySet:
    """Read a ray set written by :func:`save_rayset`."""
    rays = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            tag = parts[0]
            vals = [float(v) for v in parts[1:]]
            if tag == "U" and len(vals) == 4:
                rays.append(RayPath(tx=(vals[0], vals[1]), rx=(vals[2], vals[3])))
            elif tag == "B" and len(vals) == 6:
                rays.append(RayPath(tx=(vals[0], vals[1]),
                                    reflection=(vals[2], vals[3]),
                                    rx=(vals[4], vals[5])))
            else:
                raise ValueError(f"{path}:{line_no}: malformed ray line {line!r}")
    return RaySet(rays=tuple(rays))
