import numpy as np
import pytest

from brokenray import (
    CircleBoundary,
    ExperimentConfig,
    Grid,
    Obstacle,
    Scene,
    make_square_obstacle,
    place_stations,
)


@pytest.fixture(scope="session")
def reference_config():
    """Full-size setup: 64x64 grid, radius 350, 30-cell square, 512 stations."""
    return ExperimentConfig()


@pytest.fixture(scope="session")
def reference_scene(reference_config):
    return reference_config.build_scene()


@pytest.fixture(scope="session")
def small_config(tmp_path_factory):
    """Fast setup used by most pipeline tests (seconds, not minutes)."""
    out = tmp_path_factory.mktemp("small_outputs")
    return ExperimentConfig(
        grid_n=16,
        grid_d=13.0,
        radius=95.0,
        obstacle_side_cells=6,
        n_tx=48,
        n_rx=48,
        n_total=1200,
        fraction_unbroken=0.5,
        seed=7,
        csv_path=str(out / "results.csv"),
        image_dir=str(out / "images"),
    )


@pytest.fixture(scope="session")
def small_scene(small_config):
    return small_config.build_scene()


@pytest.fixture(scope="session")
def small_layout(small_config):
    return small_config.build_stations()


@pytest.fixture
def centered_square():
    return make_square_obstacle((0.0, 0.0), 390.0)


@pytest.fixture
def reference_boundary():
    return CircleBoundary(center=(0.0, 0.0), radius=350.0)
