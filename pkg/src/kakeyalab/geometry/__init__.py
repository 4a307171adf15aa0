"""Tube geometry: tubes, caps, varieties and tangency."""
from .tubes import (
    Ball,
    Box,
    GeometryError,
    Tube,
    TubeFamily,
    angle_to_subspace,
    angles_to_subspaces,
    direction_separated,
    normalize,
    projective_angle,
    tube_contains,
    unit_ball_volume,
)
from .caps import CapDecomposition, cap_decompose, rescale_cap, rescale_map, sphere_net
from .varieties import (
    AffineSubspace,
    OracleUnavailable,
    PointCloudVariety,
    QuadricGraph,
    Sphere,
    TangencyResult,
    Variety,
    load_variety,
    neighborhood_volume,
    tangency_check,
    tube_samples,
    variety_from_dict,
)
