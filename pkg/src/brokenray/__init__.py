"""Travel-time tomography in an annulus between a circular observation
boundary and a convex reflecting obstacle.

The package reconstructs a per-cell slowness field from synthetic travel times
measured along straight chords and single-reflection ray paths, using the
cyclic Kaczmarz row-action method on the sparse ray-cell length matrix.
"""

from .config import ExperimentConfig, load_config, parse_config
from .errors import (
    AllRaysEmpty,
    BackFacing,
    Blocked,
    BrokenRayError,
    ConfigError,
    CornerPoint,
    DegenerateRay,
    DimensionMismatch,
    EmptyRegion,
    EmptyRow,
    ExhaustedCandidates,
    GrazingIncidence,
    IoFailure,
    NotVisible,
    SliceFailure,
    ZDependentObstacle,
    ZeroRow,
)
from .geometry import (
    CELL_EXTERIOR,
    CELL_OBSTACLE,
    CELL_REGION,
    CircleBoundary,
    Grid,
    Obstacle,
    Scene,
    circle_exit,
    classify_cells,
    make_square_obstacle,
    outward_normal,
    reflect,
    regular_polygon_obstacle,
    segment_blocked,
)
from .harness import (
    ExperimentRow,
    run_reconstruction,
    run_single,
    run_table1,
    run_table2,
    run_table3,
    write_csv,
)
from .phantom import (
    PhantomSpec,
    avg_error_per_cell,
    discretize,
    error_norm,
    export_pgm,
)
from .projection import (
    RaySystem,
    SparseRow,
    assemble,
    forward_project,
    load_system,
    ray_row,
    save_system,
    traverse,
)
from .rays import (
    PRNG_ALGORITHM,
    RayPath,
    RaySet,
    StationLayout,
    class_count_bound,
    discrete_signature,
    enumerate_unbroken,
    load_rayset,
    make_broken_ray,
    make_unbroken_ray,
    place_stations,
    sample_ray_set,
    save_rayset,
)
from .solver import SolveOptions, SolveReport, kaczmarz_step, residual_norms, solve
from .volume import (
    SliceResult,
    VolumeResult,
    VolumeSpec,
    check_z_independence,
    export_volume,
    solve_volume,
)

__version__ = "0.1.0"
