"""Ghost imaging and ghost interference with pseudothermal speckle.

Monte Carlo two-arm intensity correlations, Fresnel propagation through slit
masks, fringe metrics, and analytic and quadrature reference values.
"""
from .analysis import analyze_run, compare_report
from .config import emit_config, load_config, parse_config
from .correlation import CorrelationAccumulator, CorrelationResult, SliceCurve, scan_slice
from .errors import (AliasingError, AxisMismatchError, ConfigError, GhostFringeError,
                     InsufficientDataError, QuadratureError, SamplingError,
                     UnsupportedCaseError, ValidationError)
from .fringe import FringeMetrics, extract_fringe_metrics, fit_fringe_period
from .grid import Axis, ComplexField
from .kernels import BACKEND
from .optics import ApertureSpec, Free, Mask, PathSpec
from .oracle import ClosedFormCase, closed_form_g2, predicted_visibility, quadrature_g2
from .scenario import ScenarioConfig, build_plan, run_plan
from .speckle import SpectrumModel

__version__ = "0.1.0"

__all__ = [
    "analyze_run", "compare_report", "emit_config", "load_config", "parse_config",
    "CorrelationAccumulator", "CorrelationResult", "SliceCurve", "scan_slice",
    "AliasingError", "AxisMismatchError", "ConfigError", "GhostFringeError",
    "InsufficientDataError", "QuadratureError", "SamplingError", "UnsupportedCaseError",
    "ValidationError", "FringeMetrics", "extract_fringe_metrics", "fit_fringe_period",
    "Axis", "ComplexField", "BACKEND", "ApertureSpec", "Free", "Mask", "PathSpec",
    "ClosedFormCase", "closed_form_g2", "predicted_visibility", "quadrature_g2",
    "ScenarioConfig", "build_plan", "run_plan", "SpectrumModel", "__version__",
]
