"""Intrinsic Hessian geometry of low-pass-filter controllers.

Jets give exact derivatives of the controller's configuration function; the
Hessian metric, its curvature and stability classification follow, and the
reference closed forms are checked against them pointwise.
"""

from .analysis import PointReport, analyze
from .closed_forms import FormulaId, FormulaSingular, Variant, eval_formula
from .controller import (
    BUILTIN,
    ConfigFunction,
    ControllerSpec,
    ParamPoint,
    SingularPoint,
    controller_jet,
    controller_value,
)
from .expr import parse, pretty_print
from .geometry import StabilityClass, flatness_certificate_2d, hessian_metric
from .jet import Jet, constant, variable
from .scan import Axis, ScanJob, ScanResult, divergence_probe, run_scan
from .verify import DiscrepancyRecord, default_grid, verify

__all__ = [
    "Axis", "BUILTIN", "ConfigFunction", "ControllerSpec", "DiscrepancyRecord", "FormulaId",
    "FormulaSingular", "Jet", "ParamPoint", "PointReport", "ScanJob", "ScanResult",
    "SingularPoint", "StabilityClass", "Variant", "analyze", "constant", "controller_jet",
    "controller_value", "default_grid", "divergence_probe", "eval_formula",
    "flatness_certificate_2d", "hessian_metric", "parse", "pretty_print", "run_scan",
    "variable", "verify",
]
