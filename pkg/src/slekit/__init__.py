"""slekit: Loewner driving-function reconstruction and diagnostics.

Turns time-resolved binary masks of a growing planar region into
windowed driving-function observables, solves the chordal Loewner
equation in both directions (driving -> trace, curve -> driving), and
runs a Brownian-motion diagnostic battery (Q-Q, spectral slope, variance
growth, autocorrelation, tail exponent, box-counting dimension and the
kappa = 8(D - 1) map) with seeded synthetic generators for validation.
"""

__version__ = "0.1.0"

from . import errors
from .driving import CAPACITY, VIDEO, DrivingFunction
from .loewner import (
    SlitStep,
    Trace,
    count_self_intersections,
    driving_steps,
    elementary_map,
    forward_solve,
    hcap_total,
    inverse_driving,
    inverse_elementary_map,
    rescale_capacity,
)
from .masks import (
    CHANNELS,
    Contour,
    GrowthIncrement,
    MaskFrame,
    MaskSequence,
    WindowSpec,
    build_surrogate_driver,
    external_boundary,
    growth_increment,
    largest_connected_component,
    load_mask_sequence,
    mesh_rectangles,
    minimal_active_radius,
    principal_axis,
    project_displacement,
    subsample_nonredundant,
    window_mesh,
    write_pgm,
)
from .synth import (
    RandomSource,
    brownian_driving,
    gaussian_samples,
    growing_disk_sequence,
    pareto_samples,
    sle_trace,
)
from .diagnostics import (
    DimensionEstimate,
    HillResult,
    PsdEstimate,
    QqResult,
    SlopeFit,
    VarianceGrowth,
    autocorrelation,
    box_counting_dimension,
    default_box_scales,
    default_fit_range,
    default_hill_n0,
    default_segment_length,
    hill_curve,
    hill_estimator,
    increments,
    kappa_from_dimension,
    loglog_slope,
    qq_against_normal,
    theil_sen,
    variance_growth,
    welch_psd,
)
from .report import (
    DiagnosticsReport,
    WindowDiagnostics,
    assemble_report,
)
from .pipeline import RunConfig, analyze
from .selfcheck import run_selfcheck

__all__ = [
    "CAPACITY", "CHANNELS", "VIDEO", "__version__", "errors",
    "DrivingFunction", "SlitStep", "Trace", "Contour", "GrowthIncrement",
    "MaskFrame", "MaskSequence", "WindowSpec", "RandomSource",
    "PsdEstimate", "SlopeFit", "HillResult", "DimensionEstimate",
    "QqResult", "VarianceGrowth", "DiagnosticsReport", "WindowDiagnostics",
    "RunConfig",
    "count_self_intersections", "driving_steps", "elementary_map",
    "forward_solve", "hcap_total", "inverse_driving",
    "inverse_elementary_map", "rescale_capacity",
    "build_surrogate_driver", "external_boundary", "growth_increment",
    "largest_connected_component", "load_mask_sequence", "mesh_rectangles",
    "minimal_active_radius", "principal_axis", "project_displacement",
    "subsample_nonredundant", "window_mesh", "write_pgm",
    "brownian_driving", "gaussian_samples", "growing_disk_sequence",
    "pareto_samples", "sle_trace",
    "autocorrelation", "box_counting_dimension", "default_box_scales",
    "default_fit_range", "default_hill_n0", "default_segment_length",
    "hill_curve", "hill_estimator", "increments", "kappa_from_dimension",
    "loglog_slope", "qq_against_normal", "theil_sen", "variance_growth",
    "welch_psd",
    "assemble_report", "analyze", "run_selfcheck",
]
