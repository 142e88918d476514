import math

import numpy as np
import pytest

from brokenray import (
    CircleBoundary,
    DimensionMismatch,
    EmptyRegion,
    Grid,
    IoFailure,
    PhantomSpec,
    Scene,
    avg_error_per_cell,
    discretize,
    error_norm,
    export_pgm,
    make_square_obstacle,
)
from brokenray.geometry import CELL_REGION
from brokenray.phantom import apply_mask


@pytest.fixture
def odd_scene():
    """5x5 grid whose middle cell center sits exactly at the origin."""
    grid = Grid(origin=(-50.0, -50.0), n=5, cell_size=20.0)
    boundary = CircleBoundary(center=(0.0, 0.0), radius=49.0)
    obstacle = make_square_obstacle((30.0, 30.0), 6.0)
    return Scene.build(grid, boundary, obstacle)


def test_discretize_zero_at_center(odd_scene):
    values = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), odd_scene)
    center_idx = 2 * 5 + 2
    assert odd_scene.cell_classes[center_idx] == CELL_REGION
    assert values[center_idx] == 0.0


def test_discretize_formula_value():
    spec = PhantomSpec(k=1e-6, center=(0.0, 0.0))
    xs = np.array([100.0])
    ys = np.array([0.0])
    assert spec.evaluate(xs, ys)[0] == pytest.approx(1e-4)


def test_discretize_masks_obstacle_and_exterior(small_scene):
    values = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    assert np.all(values[~small_scene.region_mask] == 0.0)
    assert np.all(values[small_scene.region_mask] >= 0.0)


def test_discretize_idempotent_under_remask(small_scene):
    values = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    assert np.array_equal(apply_mask(values, small_scene), values)


# ---------------------------------------------------------------- errors

def test_avg_error_identical(small_scene):
    f = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    assert avg_error_per_cell(f, f, small_scene.cell_classes) == 0.0


def test_avg_error_constant_offset(small_scene):
    f = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    x = f + np.where(small_scene.region_mask, 1.0, 0.0)
    assert avg_error_per_cell(f, x, small_scene.cell_classes) == pytest.approx(1.0)


def test_avg_error_against_fsum_oracle(small_scene):
    rng = np.random.default_rng(1)
    n = small_scene.grid.n_cells
    f = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
    x = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
    got = avg_error_per_cell(f, x, small_scene.cell_classes)
    region = np.flatnonzero(small_scene.region_mask)
    oracle = math.fsum(abs(f[i] - x[i]) for i in region) / len(region)
    assert got == pytest.approx(oracle, rel=1e-15)


def test_avg_error_symmetry(small_scene):
    rng = np.random.default_rng(2)
    n = small_scene.grid.n_cells
    f = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
    x = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
    assert avg_error_per_cell(f, x, small_scene.cell_classes) == \
        avg_error_per_cell(x, f, small_scene.cell_classes)


def test_error_metrics_ignore_masked_cells(small_scene):
    rng = np.random.default_rng(3)
    n = small_scene.grid.n_cells
    f = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
    x = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
    f2 = f.copy()
    x2 = x.copy()
    f2[~small_scene.region_mask] = 99.0
    x2[~small_scene.region_mask] = -7.0
    classes = small_scene.cell_classes
    assert avg_error_per_cell(f, x, classes) == avg_error_per_cell(f2, x2, classes)
    for norm in ("euclidean", "max"):
        assert error_norm(f, x, classes, norm) == error_norm(f2, x2, classes, norm)


def test_error_norm_identical_and_single_cell(small_scene):
    f = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    assert error_norm(f, f, small_scene.cell_classes, "euclidean") == 0.0
    assert error_norm(f, f, small_scene.cell_classes, "max") == 0.0
    x = f.copy()
    cell = int(np.flatnonzero(small_scene.region_mask)[0])
    x[cell] += 3e-5
    assert error_norm(f, x, small_scene.cell_classes, "euclidean") == pytest.approx(3e-5)
    assert error_norm(f, x, small_scene.cell_classes, "max") == pytest.approx(3e-5)


def test_error_norm_equivalence_bounds(small_scene):
    rng = np.random.default_rng(4)
    n = small_scene.grid.n_cells
    count = small_scene.region_count
    for _ in range(20):
        f = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
        x = np.where(small_scene.region_mask, rng.uniform(0, 1e-3, n), 0.0)
        e = error_norm(f, x, small_scene.cell_classes, "euclidean")
        m = error_norm(f, x, small_scene.cell_classes, "max")
        assert e >= m - 1e-15
        assert e <= math.sqrt(count) * m + 1e-15


def test_error_dimension_and_region_errors(small_scene):
    f = np.zeros(small_scene.grid.n_cells)
    with pytest.raises(DimensionMismatch):
        avg_error_per_cell(f, np.zeros(10), small_scene.cell_classes)
    all_exterior = np.ones_like(small_scene.cell_classes)
    with pytest.raises(EmptyRegion):
        avg_error_per_cell(f, f, all_exterior)


# ---------------------------------------------------------------- pgm export

def test_pgm_header_and_size(tmp_path, small_scene):
    f = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    path = tmp_path / "out.pgm"
    export_pgm(f, small_scene, path)
    data = path.read_bytes()
    n = small_scene.grid.n
    header = f"P5\n{n} {n}\n255\n".encode()
    assert data.startswith(header)
    assert len(data) == len(header) + n * n


def test_pgm_constant_region_black(tmp_path, small_scene):
    f = np.where(small_scene.region_mask, 5e-4, 0.0)
    path = tmp_path / "flat.pgm"
    export_pgm(f, small_scene, path)
    n = small_scene.grid.n
    body = np.frombuffer(path.read_bytes()[-n * n:], dtype=np.uint8)
    image = body.reshape(n, n)[::-1, :].ravel()  # undo the top-down flip
    assert np.all(image[small_scene.region_mask] == 0)
    assert np.all(image[small_scene.cell_classes == 1] == 255)   # exterior
    assert np.all(image[small_scene.cell_classes == 0] == 0)     # obstacle


def test_pgm_cone_monotone_along_row(tmp_path, small_scene):
    f = discretize(PhantomSpec(k=1e-6, center=(0.0, 0.0)), small_scene)
    path = tmp_path / "cone.pgm"
    export_pgm(f, small_scene, path)
    n = small_scene.grid.n
    body = np.frombuffer(path.read_bytes()[-n * n:], dtype=np.uint8)
    image = body.reshape(n, n)[::-1, :]
    # walk outward to the right along the grid row just above the center
    j = n // 2 + 1
    row = image[j]
    cols = [i for i in range(n // 2, n)
            if small_scene.region_mask[j * n + i]]
    vals = [int(row[i]) for i in cols]
    assert vals == sorted(vals)
    assert vals[0] < vals[-1]


def test_pgm_io_failure(small_scene):
    f = np.zeros(small_scene.grid.n_cells)
    with pytest.raises(IoFailure):
        export_pgm(f, small_scene, "/nonexistent-dir/x/y.pgm")


def test_phantom_spec_validation():
    with pytest.raises(ValueError):
        PhantomSpec(k=0.0, center=(0.0, 0.0))
    with pytest.raises(ValueError):
        PhantomSpec(k=1.0, center=(0.0, 0.0), kind="gaussian")
