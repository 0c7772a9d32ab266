"""Scoliosis curve assessment from vertebral endplate landmarks."""

from .angle_matrix import AngleMatrix, Pc1Scores, build_angle_matrix, pc1_scores
from .config import Config, load_config
from .diagnosis import (
    Curve,
    CurveReport,
    Direction,
    Extremum,
    Kind,
    Severity,
    classify_severity,
    constraint_violation,
    detect_extrema,
    diagnose,
    identify_curves,
    postprocess_curves,
    vwi,
)
from .estimator import CobbAngleEstimator, check_spines
from .landmarks import (
    Corners,
    Endplate,
    Point2,
    Spine,
    Vertebra,
    VertebraId,
    corners_to_endplate,
    directional_angle,
    load_spines,
    mean_tilt,
    vertebra_center,
)
from .svd import SvdResult, numerical_rank, svd

__version__ = "0.1.0"

__all__ = [
    "AngleMatrix",
    "Pc1Scores",
    "build_angle_matrix",
    "pc1_scores",
    "Config",
    "load_config",
    "Curve",
    "CurveReport",
    "Direction",
    "Extremum",
    "Kind",
    "Severity",
    "classify_severity",
    "constraint_violation",
    "detect_extrema",
    "diagnose",
    "identify_curves",
    "postprocess_curves",
    "vwi",
    "CobbAngleEstimator",
    "check_spines",
    "Corners",
    "Endplate",
    "Point2",
    "Spine",
    "Vertebra",
    "VertebraId",
    "corners_to_endplate",
    "directional_angle",
    "load_spines",
    "mean_tilt",
    "vertebra_center",
    "SvdResult",
    "numerical_rank",
    "svd",
]
