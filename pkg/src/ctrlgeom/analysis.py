"""Everything the geometry knows about one point of the parameter manifold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jet import derivative_tensor
from .controller import BUILTIN, ConfigFunction, ControllerSpec, ParamPoint
from .geometry import (
    Derivatives,
    GeometryReport,
    MetricData,
    StabilityClass,
    certificate_scale,
    flatness_certificate_2d,
    hessian_metric,
    riemann_general,
    riemann_hessian_2d,
    riemann_hessian_shortcut,
)

# Hadamard ratio above which the determinant is recomputed in extended precision
COND_LIMIT = 1e3


@dataclass(frozen=True)
class PointReport:
    spec: ControllerSpec
    point: ParamPoint
    derivs: Derivatives
    metric: MetricData
    geometry: GeometryReport | None
    flat_certificate: float | None
    flat_scale: float | None

    @property
    def classification(self) -> StabilityClass:
        return self.metric.classification

    @property
    def scalar(self) -> float | None:
        return None if self.geometry is None else self.geometry.scalar


def analyze(
    spec: ControllerSpec,
    point: ParamPoint,
    order: int = 4,
    func: ConfigFunction = BUILTIN,
    curvature: str = "hessian",
) -> PointReport:
    """Metric always; Christoffels/curvature when order allows and g is invertible.

    ``curvature="hessian"`` uses third derivatives only (in 2D through the
    flatness certificate), which is much better conditioned near degenerate
    metrics; ``"general"`` differentiates the
    connection (needs order 4) and serves as an independent cross-check.

    Raises SingularPoint on poles of the configuration function.
    """
    if curvature not in ("hessian", "general"):
        raise ValueError(f"unknown curvature route {curvature!r}")
    jet = func.jet(spec, point, order)
    derivs = Derivatives.from_jet(jet)
    metric = hessian_metric(derivs.hess)
    hess_ext = third_ext = None
    if ill_conditioned(metric):
        ext = func.jet(spec, point, min(order, 3), np.longdouble)
        hess_ext = derivative_tensor(ext, 2)
        third_ext = derivative_tensor(ext, 3) if order >= 3 else None
        metric = hessian_metric(derivs.hess, hess_ext)
    cert = scale = None
    if spec.dim == 2 and order >= 3:
        if third_ext is None:
            cert = flatness_certificate_2d(derivs.hess, derivs.third)
        else:
            cert = flatness_certificate_2d(hess_ext, third_ext)
        scale = certificate_scale(derivs.hess, derivs.third)
    geometry = None
    if metric.invertible:
        if order >= 4 and curvature == "general":
            geometry = riemann_general(derivs, metric)
        elif order >= 3 and spec.dim == 2:
            geometry = riemann_hessian_2d(derivs, metric, cert)
        elif order >= 3:
            geometry = riemann_hessian_shortcut(derivs, metric)
    return PointReport(spec, point, derivs, metric, geometry, cert, scale)


def ill_conditioned(metric: MetricData) -> bool:
    """True when double-precision entries cannot resolve the determinant."""
    hadamard = float(np.prod(np.sqrt(np.sum(metric.g**2, axis=1))))
    return hadamard > COND_LIMIT * abs(metric.det)


def metric_norm(g: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(g), axis=1)))
