"""Sparse point-label propagation over per-pixel embedding fields."""

from . import errors
from .edt import distance_map, distance_to_nearest
from .embedding import FeatureField, build_field, cosine_sim, l2_normalize, upsample_bilinear
from .expert import SimulatedExpert, seed_points, query
from .metrics import ConfusionMatrix, accumulate, miou, mpa, pa
from .placement import grid_points, random_points
from .propagation import LabeledPoint, LabeledPointSet, SimilarityAccessor, propagate
from .proposal import (
    HilConfig,
    HilSession,
    ProposalState,
    combine,
    propose_next,
    run_hil_session,
    smooth_distance,
    update_similarity,
)
from .tensor_io import (
    read_mask,
    read_points,
    read_tensor,
    write_mask,
    write_points,
    write_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "FeatureField",
    "build_field",
    "cosine_sim",
    "l2_normalize",
    "upsample_bilinear",
    "distance_map",
    "distance_to_nearest",
    "SimulatedExpert",
    "seed_points",
    "query",
    "ConfusionMatrix",
    "accumulate",
    "pa",
    "mpa",
    "miou",
    "grid_points",
    "random_points",
    "LabeledPoint",
    "LabeledPointSet",
    "SimilarityAccessor",
    "propagate",
    "HilConfig",
    "HilSession",
    "ProposalState",
    "combine",
    "propose_next",
    "run_hil_session",
    "smooth_distance",
    "update_similarity",
    "read_mask",
    "read_points",
    "read_tensor",
    "write_mask",
    "write_points",
    "write_tensor",
    "__version__",
]
