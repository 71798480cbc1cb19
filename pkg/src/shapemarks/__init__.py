"""Spatial correlation analysis for point patterns marked with closed planar curves.

The library provides elastic comparison of closed curves through the
square-root velocity representation (distances that quotient out chosen
combinations of scale, rotation and reparameterization), Karcher means with
joint alignment, a mark-weighted K function for curve-marked spatial point
patterns, permutation envelope tests of random labeling, and a simulator for
spatially dependent curve marks.  A FastAPI service and a thin CLI expose the
same pipeline.
"""

__version__ = "0.1.0"

from .curves import (
    Curve,
    SrvCurve,
    closure_defect,
    from_srv,
    resample_closed,
    to_srv,
)
from .envelopes import (
    EnvelopeResult,
    envelope_test,
    global_erl_test,
    permutation_statistics,
    pointwise_envelope,
)
from .errors import (
    DegenerateInputError,
    GridMismatchError,
    InvalidInputError,
    NumericalError,
    ShapeMarksError,
)
from .karcher import KarcherResult, dispersion, karcher_mean
from .pointprocess import (
    KEstimate,
    MarkedPattern,
    Window,
    default_r_grid,
    edge_correction,
    ground_k,
    kernel_intensity,
    mark_weighted_k,
    select_bandwidth,
)
from .registration import (
    Alignment,
    SymmetryGroup,
    align,
    apply_alignment,
    geodesic,
    optimal_reparam,
    optimal_rotation,
)
from .simulate import (
    ScenarioConfig,
    fourier_shape,
    generate_pattern,
    matern_cov,
    run_study,
    sample_gaussian_field,
    sample_marks,
    sample_poisson,
)

__all__ = [
    "__version__",
    "Curve", "SrvCurve", "closure_defect", "from_srv", "resample_closed", "to_srv",
    "EnvelopeResult", "envelope_test", "global_erl_test", "permutation_statistics",
    "pointwise_envelope",
    "DegenerateInputError", "GridMismatchError", "InvalidInputError", "NumericalError",
    "ShapeMarksError",
    "KarcherResult", "dispersion", "karcher_mean",
    "KEstimate", "MarkedPattern", "Window", "default_r_grid", "edge_correction",
    "ground_k", "kernel_intensity", "mark_weighted_k", "select_bandwidth",
    "Alignment", "SymmetryGroup", "align", "apply_alignment", "geodesic",
    "optimal_reparam", "optimal_rotation",
    "ScenarioConfig", "fourier_shape", "generate_pattern", "matern_cov", "run_study",
    "sample_gaussian_field", "sample_marks", "sample_poisson",
]
