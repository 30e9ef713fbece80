from .arithmetic import (
    ArithCantorParams,
    ArithCantorSpec,
    ScaledIntervals,
    arith_cantor_intervals,
    arith_cantor_params,
    is_nested,
    parameter_limits,
    stage_cover_counts,
    sumset_cover_count,
)
from .boxdim import BoxDimension, box_dimension_estimate, interval_box_count, point_box_count
from .cantor import (
    ProductCantorSpec,
    four_corner,
    full_grid,
    one_axis_cantor,
    points_at_scale,
    product_cantor_measure,
)
from .directed_ifs import (
    BallFamily,
    DirectedIFSSpec,
    build_directed_ifs,
    check_ball_family,
    directed_projection_audit,
    ifs_children,
    schedule_hash,
    schedule_low_discrepancy,
    schedule_random,
    truncate_probabilities,
)
from .extraction import BallTree, extract_regular_subset
