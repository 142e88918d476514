"""Grid, circular observation boundary, convex obstacle, and reflection primitives.

Coordinates are plain ``(x, y)`` tuples in domain units.  All functions here are
pure and operate on immutable inputs, so they are safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CornerPoint, GrazingIncidence

Point = tuple[float, float]

# Cell classification codes (stored per cell in an int8 mask of length N*N).
CELL_OBSTACLE = 0
CELL_EXTERIOR = 1
CELL_REGION = 2

# Scale-relative degeneracy tolerances.
EPS_GRAZE = 1e-9            # |dir . normal| below this is a tangential hit
EPS_CORNER_REL = 1e-9       # times polygon perimeter
EPS_ON_REL = 1e-9           # times grid cell size


@dataclass(frozen=True)
class Grid:
    """Square grid of ``n x n`` axis-aligned cells of side ``cell_size``.

    Cell ``(i, j)`` covers ``[origin_x + i*d, origin_x + (i+1)*d) x
    [origin_y + j*d, origin_y + (j+1)*d)`` and has linear index ``j*n + i``
    (row-major; this fixes the column convention of the weight matrix).
    """

    origin: Point
    n: int
    cell_size: float

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("grid needs a positive cell count per row")
        if self.cell_size <= 0:
            raise ValueError("grid needs a positive cell size")

    @property
    def n_cells(self) -> int:
        return self.n * self.n

    @property
    def extent(self) -> float:
        return self.n * self.cell_size

    @property
    def xmax(self) -> float:
        return self.origin[0] + self.extent

    @property
    def ymax(self) -> float:
        return self.origin[1] + self.extent

    def cell_index(self, i: int, j: int) -> int:
        return j * self.n + i

    def cell_center(self, index: int) -> Point:
        j, i = divmod(index, self.n)
        return (
            self.origin[0] + (i + 0.5) * self.cell_size,
            self.origin[1] + (j + 0.5) * self.cell_size,
        )

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays of x and y center coordinates for all cells in index order."""
        steps = (np.arange(self.n) + 0.5) * self.cell_size
        cx = self.origin[0] + steps
        cy = self.origin[1] + steps
        xs, ys = np.meshgrid(cx, cy)          # ys varies along axis 0 = j
        return xs.ravel(), ys.ravel()


@dataclass(frozen=True)
class CircleBoundary:
    """Circular observation boundary; all stations lie on it."""

    center: Point
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("boundary radius must be positive")

    def contains(self, p: Point) -> bool:
        dx = p[0] - self.center[0]
        dy = p[1] - self.center[1]
        return dx * dx + dy * dy < self.radius * self.radius


@dataclass(frozen=True)
class Obstacle:
    """Convex polygon (counter-clockwise vertex order) acting as the reflector.

    The sought field is defined to be zero inside it and rays may not cross it;
    they reflect specularly off its edges.  Curved obstacles are approximated
    by fine polygons.
    """

    vertices: tuple[Point, ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError("obstacle polygon needs at least 3 vertices")
        area2 = 0.0
        n = len(verts)
        for k in range(n):
            x1, y1 = verts[k]
            x2, y2 = verts[(k + 1) % n]
            area2 += x1 * y2 - x2 * y1
        if area2 <= 0:
            raise ValueError("obstacle vertices must be counter-clockwise with positive area")
        for k in range(n):
            ax, ay = verts[k]
            bx, by = verts[(k + 1) % n]
            cx, cy = verts[(k + 2) % n]
            cross = (bx - ax) * (cy - by) - (by - ay) * (cx - bx)
            if cross <= 0:
                raise ValueError("obstacle polygon must be strictly convex")

    @cached_property
    def edges(self) -> tuple[tuple[Point, Point], ...]:
        n = len(self.vertices)
        return tuple((self.vertices[k], self.vertices[(k + 1) % n]) for k in range(n))

    @cached_property
    def edge_lengths(self) -> tuple[float, ...]:
        return tuple(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in self.edges)

    @cached_property
    def perimeter(self) -> float:
        return sum(self.edge_lengths)

    @cached_property
    def _edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(vx, vy, ex, ey): edge start points and edge vectors, for batch tests."""
        vx = np.array([a[0] for a, _ in self.edges])
        vy = np.array([a[1] for a, _ in self.edges])
        ex = np.array([b[0] - a[0] for a, b in self.edges])
        ey = np.array([b[1] - a[1] for a, b in self.edges])
        return vx, vy, ex, ey

    def contains(self, p: Point, include_boundary: bool = True) -> bool:
        """Point-in-convex-polygon by half-plane test on every edge."""
        for (ax, ay), (bx, by) in self.edges:
            cross = (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)
            if include_boundary:
                if cross < 0:
                    return False
            elif cross <= 0:
                return False
        return True

    def point_at_arclength(self, s: float) -> tuple[Point, int]:
        """Boundary point at arc length ``s`` from vertex 0, plus its edge index.

        ``s`` is taken modulo the perimeter, walking the edge loop in vertex
        order.
        """
        s = s % self.perimeter
        for k, ((ax, ay), (bx, by)) in enumerate(self.edges):
            ell = self.edge_lengths[k]
            if s <= ell:
                t = s / ell
                return ((ax + t * (bx - ax), ay + t * (by - ay)), k)
            s -= ell
        return (self.vertices[0], 0)  # unreachable; guards fp slack

    def edge_outward_normal(self, k: int) -> Point:
        """Unit normal of edge ``k`` pointing away from the interior."""
        (ax, ay), (bx, by) = self.edges[k]
        ex, ey = bx - ax, by - ay
        ell = math.hypot(ex, ey)
        return (ey / ell, -ex / ell)   # right of travel direction = outside for CCW


def reflect(direction: Point, normal: Point) -> Point:
    """Mirror ``direction`` across the surface with outward unit ``normal``.

    Both inputs must be unit vectors with the direction pointing into the
    surface (``direction . normal < 0``).  The reflected direction makes the
    same angle with the normal as the incoming one.

    Raises GrazingIncidence for tangential hits (|dot| below EPS_GRAZE).
    """
    dn = direction[0] * normal[0] + direction[1] * normal[1]
    if abs(dn) < EPS_GRAZE:
        raise GrazingIncidence(f"direction tangential to surface (dot={dn:.3e})")
    return (direction[0] - 2.0 * dn * normal[0], direction[1] - 2.0 * dn * normal[1])


def outward_normal(obstacle: Obstacle, p: Point) -> Point:
    """Outward unit normal of the obstacle edge containing ``p``.

    Raises CornerPoint when ``p`` is within ``EPS_CORNER_REL * perimeter`` of a
    vertex, where the boundary is not smooth and the normal is undefined.
    """
    corner_tol = EPS_CORNER_REL * obstacle.perimeter
    for v in obstacle.vertices:
        if math.hypot(p[0] - v[0], p[1] - v[1]) < corner_tol:
            raise CornerPoint(f"normal undefined at vertex neighborhood of {v}")
    best_k = 0
    best_d = math.inf
    for k, ((ax, ay), (bx, by)) in enumerate(obstacle.edges):
        ex, ey = bx - ax, by - ay
        ell2 = ex * ex + ey * ey
        t = ((p[0] - ax) * ex + (p[1] - ay) * ey) / ell2
        t = min(max(t, 0.0), 1.0)
        qx, qy = ax + t * ex, ay + t * ey
        dist = math.hypot(p[0] - qx, p[1] - qy)
        if dist < best_d:
            best_d = dist
            best_k = k
    return obstacle.edge_outward_normal(best_k)


def _clip_against_polygon(ax, ay, bx, by, obstacle: Obstacle):
    """Parameter interval of segment a->b lying inside the convex polygon.

    Returns (t0, t1); empty when t0 >= t1.  Half-plane clipping over the CCW
    edge loop (inside = non-negative cross with every edge).
    """
    dx, dy = bx - ax, by - ay
    t0, t1 = 0.0, 1.0
    for (vx, vy), (wx, wy) in obstacle.edges:
        ex, ey = wx - vx, wy - vy
        c0 = ex * (ay - vy) - ey * (ax - vx)    # cross(e, a - v)
        c1 = ex * dy - ey * dx                  # cross(e, b - a)
        if c1 == 0.0:
            if c0 < 0.0:
                return 1.0, 0.0
        else:
            t = -c0 / c1
            if c1 > 0.0:
                if t > t0:
                    t0 = t
            else:
                if t < t1:
                    t1 = t
            if t0 >= t1:
                return t0, t1
    return t0, t1


def segment_blocked(a: Point, b: Point, obstacle: Obstacle) -> bool:
    """Whether the open segment (a, b) passes through the obstacle interior.

    Touching the boundary (a tangent chord, or an endpoint on an edge) does not
    count as blocking.
    """
    if a == b:
        raise ValueError("segment endpoints coincide")
    t0, t1 = _clip_against_polygon(a[0], a[1], b[0], b[1], obstacle)
    if t1 - t0 <= 1e-12:
        return False
    # positive-length overlap; confirm its midpoint sits strictly inside
    # (rejects segments sliding along an edge line)
    tm = 0.5 * (t0 + t1)
    mx = a[0] + tm * (b[0] - a[0])
    my = a[1] + tm * (b[1] - a[1])
    margin = 1e-9 * obstacle.perimeter
    for (vx, vy), (wx, wy) in obstacle.edges:
        ex, ey = wx - vx, wy - vy
        ell = math.hypot(ex, ey)
        if ex * (my - vy) - ey * (mx - vx) <= margin * ell:
            return False
    return True


def blocked_pairs(ax, ay, bx, by, obstacle: Obstacle) -> np.ndarray:
    """Vectorized :func:`segment_blocked` over parallel coordinate arrays."""
    ax = np.asarray(ax, dtype=float)
    ay = np.asarray(ay, dtype=float)
    bx = np.asarray(bx, dtype=float)
    by = np.asarray(by, dtype=float)
    dx, dy = bx - ax, by - ay
    t0 = np.zeros(ax.shape)
    t1 = np.ones(ax.shape)
    vx, vy, ex, ey = obstacle._edge_arrays
    alive = np.ones(ax.shape, dtype=bool)
    for k in range(len(ex)):
        c0 = ex[k] * (ay - vy[k]) - ey[k] * (ax - vx[k])
        c1 = ex[k] * dy - ey[k] * dx
        par = c1 == 0.0
        alive &= ~(par & (c0 < 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(par, 0.0, -c0 / c1)
        t0 = np.where(~par & (c1 > 0.0), np.maximum(t0, t), t0)
        t1 = np.where(~par & (c1 < 0.0), np.minimum(t1, t), t1)
    alive &= (t1 - t0) > 1e-12
    if not np.any(alive):
        return alive
    tm = 0.5 * (t0 + t1)
    mx = ax + tm * dx
    my = ay + tm * dy
    margin = 1e-9 * obstacle.perimeter
    for k in range(len(ex)):
        ell = math.hypot(ex[k], ey[k])
        alive &= (ex[k] * (my - vy[k]) - ey[k] * (mx - vx[k])) > margin * ell
    return alive


def circle_exit(origin: Point, direction: Point, boundary: CircleBoundary) -> Point:
    """Unique forward intersection of a ray from a strictly interior origin.

    Solves |origin + t*direction - center| = radius for the positive root.
    """
    ox = origin[0] - boundary.center[0]
    oy = origin[1] - boundary.center[1]
    b = direction[0] * ox + direction[1] * oy
    c = ox * ox + oy * oy - boundary.radius * boundary.radius
    disc = b * b - c
    if disc <= 0.0 or c >= 0.0:
        raise ValueError("circle_exit requires a strictly interior origin")
    t = -b + math.sqrt(disc)
    return (origin[0] + t * direction[0], origin[1] + t * direction[1])


def classify_cells(grid: Grid, boundary: CircleBoundary, obstacle: Obstacle) -> np.ndarray:
    """Per-cell classes (CELL_OBSTACLE / CELL_EXTERIOR / CELL_REGION), length n*n.

    Classification is by cell center: a cell is Region iff its center is
    strictly inside the circle and strictly outside the polygon; cells whose
    center lands inside (or on) the polygon are Obstacle, everything else is
    Exterior.
    """
    xs, ys = grid.cell_centers()
    vx, vy, ex, ey = obstacle._edge_arrays
    in_poly = np.ones(grid.n_cells, dtype=bool)
    for k in range(len(ex)):
        in_poly &= (ex[k] * (ys - vy[k]) - ey[k] * (xs - vx[k])) >= 0.0
    dx = xs - boundary.center[0]
    dy = ys - boundary.center[1]
    in_circle = dx * dx + dy * dy < boundary.radius**2
    classes = np.full(grid.n_cells, CELL_EXTERIOR, dtype=np.int8)
    classes[in_circle] = CELL_REGION
    classes[in_poly] = CELL_OBSTACLE
    return classes


@dataclass(frozen=True, eq=False)
class Scene:
    """Discretized world: grid, boundary, obstacle, and the cell-class mask."""

    grid: Grid
    boundary: CircleBoundary
    obstacle: Obstacle
    cell_classes: np.ndarray

    @classmethod
    def build(cls, grid: Grid, boundary: CircleBoundary, obstacle: Obstacle) -> "Scene":
        cx, cy = boundary.center
        r = boundary.radius
        for vxp, vyp in obstacle.vertices:
            if math.hypot(vxp - cx, vyp - cy) >= r:
                raise ValueError("obstacle must lie strictly inside the observation circle")
        if (cx - r < grid.origin[0] or cx + r > grid.xmax
                or cy - r < grid.origin[1] or cy + r > grid.ymax):
            raise ValueError("observation circle must lie inside the grid extent")
        classes = classify_cells(grid, boundary, obstacle)
        classes.setflags(write=False)
        return cls(grid, boundary, obstacle, classes)

    @cached_property
    def region_mask(self) -> np.ndarray:
        mask = self.cell_classes == CELL_REGION
        mask.setflags(write=False)
        return mask

    @property
    def region_count(self) -> int:
        return int(np.count_nonzero(self.region_mask))


def make_square_obstacle(center: Point, side: float) -> Obstacle:
    """Axis-aligned square reflector of the given side length (CCW vertices)."""
    if side <= 0:
        raise ValueError("square side must be positive")
    h = side / 2.0
    cx, cy = center
    return Obstacle((
        (cx + h, cy - h),
        (cx + h, cy + h),
        (cx - h, cy + h),
        (cx - h, cy - h),
    ))


def regular_polygon_obstacle(center: Point, circumradius: float, sides: int) -> Obstacle:
    """Regular convex polygon, used to approximate smooth reflectors."""
    if sides < 3:
        raise ValueError("need at least 3 sides")
    pts = []
    for k in range(sides):
        ang = 2.0 * math.pi * k / sides
        pts.append((center[0] + circumradius * math.cos(ang),
                    center[1] + circumradius * math.sin(ang)))
    return Obstacle(tuple(pts))
