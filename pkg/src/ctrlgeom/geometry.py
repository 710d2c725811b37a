"""Hessian metrics, Christoffel symbols and curvature on parameter manifolds.

Curvature convention (fixed throughout)::

    R^l_ijk = d_j Gamma^l_ik - d_k Gamma^l_ij + Gamma^l_jm Gamma^m_ik - Gamma^l_km Gamma^m_ij
    R_lijk  = g_lp R^p_ijk
    Ric_ik  = R^l_ilk,    R = g^ik Ric_ik

With it the round 2-sphere has R = +2 and the Poincare half-plane R = -2.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .jet import Jet, derivative_tensor

TAU_REL = 1e-12


class SingularMetric(ValueError):
    pass


class StabilityClass(str, Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    SINGULAR = "Singular"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Derivatives:
    """Partial derivatives of a configuration function at one point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray | None = None
    fourth: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.hess.shape[0]

    @classmethod
    def from_jet(cls, j: Jet) -> "Derivatives":
        if j.order < 2:
            raise ValueError("need a jet of order >= 2 for a Hessian metric")
        return cls(
            value=float(j.coeffs[0]),
            grad=derivative_tensor(j, 1),
            hess=derivative_tensor(j, 2),
            third=derivative_tensor(j, 3) if j.order >= 3 else None,
            fourth=derivative_tensor(j, 4) if j.order >= 4 else None,
        )

    def scaled(self, lam: float) -> "Derivatives":
        def s(t):
            return None if t is None else lam * t

        return Derivatives(lam * self.value, lam * self.grad, lam * self.hess, s(self.third), s(self.fourth))


@dataclass(frozen=True)
class MetricData:
    dim: int
    g: np.ndarray
    leading_minors: tuple[float, ...]
    det: float
    tau: float
    classification: StabilityClass

    @property
    def invertible(self) -> bool:
        return abs(self.det) > self.tau


@dataclass(frozen=True)
class GeometryReport:
    christoffel_first: np.ndarray  # Gamma_ijk, lowered index last
    christoffel_second: np.ndarray  # Gamma^k_ij stored as [k, i, j]
    riemann_lowered: np.ndarray  # R_lijk
    ricci: np.ndarray
    scalar: float


def det_small(m: np.ndarray) -> float:
    """Determinant of the given entries, computed exactly and rounded once.

    Entries may be float64 or longdouble; near the pole set they are large and
    nearly rank one, so naive products cancel catastrophically.
    """
    n = m.shape[0]
    if n > 3:
        raise ValueError("dimension > 3 not supported")
    if not np.all(np.isfinite(m)):
        return float(np.linalg.det(m)) if n > 1 else float(m[0, 0])
    q = [[Fraction(*m[i, j].as_integer_ratio()) for j in range(n)] for i in range(n)]
    if n == 1:
        return float(q[0][0])
    if n == 2:
        return float(q[0][0] * q[1][1] - q[0][1] * q[1][0])
    return float(
        q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1])
        - q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0])
        + q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0])
    )


def adjugate_inverse(m: np.ndarray, det: float | None = None) -> np.ndarray:
    n = m.shape[0]
    if det is None:
        det = det_small(m)
    if n == 1:
        return np.array([[1.0 / m[0, 0]]])
    if n == 2:
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    if n == 3:
        adj = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                rows = [r for r in range(3) if r != j]
                cols = [c for c in range(3) if c != i]
                minor = m[rows[0], cols[0]] * m[rows[1], cols[1]] - m[rows[0], cols[1]] * m[rows[1], cols[0]]
                adj[i, j] = (-1) ** (i + j) * minor
        return adj / det
    raise ValueError("dimension > 3 not supported")


def class_tolerance(g: np.ndarray) -> float:
    norm = float(np.max(np.sum(np.abs(g), axis=1)))
    return TAU_REL * max(1.0, norm ** g.shape[0])


def classify(minors, tau: float) -> StabilityClass:
    if all(p > tau for p in minors):
        return StabilityClass.STABLE
    if any(abs(p) <= tau for p in minors):
        return StabilityClass.INDETERMINATE
    return StabilityClass.UNSTABLE


def hessian_metric(hess: np.ndarray, hess_ext: np.ndarray | None = None) -> MetricData:
    """Metric g_ij = d_i d_j G, its leading minors and stability class.

    ``hess_ext`` is an optional extended-precision copy of the Hessian; when
    given, the minors are computed from it.  A metric with |det| <= tau is
    returned with class Singular; curvature routines refuse it.
    """
    hess = np.asarray(hess, dtype=float)
    dim = hess.shape[0]
    g = np.empty_like(hess)
    for i in range(dim):
        for j in range(i, dim):
            g[i, j] = g[j, i] = hess[i, j]
    src = g if hess_ext is None else hess_ext
    minors = tuple(det_small(src[:k, :k]) for k in range(1, dim + 1))
    tau = class_tolerance(g)
    det = minors[-1]
    cls = StabilityClass.SINGULAR if abs(det) <= tau else classify(minors, tau)
    return MetricData(dim, g, minors, det, tau, cls)


def christoffel_first(third: np.ndarray) -> np.ndarray:
    """Gamma_ijk = 1/2 d_i d_j d_k G (totally symmetric for Hessian metrics)."""
    return 0.5 * np.asarray(third, dtype=float)


def _inverse(metric: MetricData) -> np.ndarray:
    if not metric.invertible:
        raise SingularMetric(f"metric determinant {metric.det!r} within tolerance {metric.tau!r}")
    return adjugate_inverse(metric.g, metric.det)


def christoffel_second(metric: MetricData, first: np.ndarray) -> np.ndarray:
    ginv = _inverse(metric)
    return np.einsum("kl,ijl->kij", ginv, first)


def _assemble(metric: MetricData, ginv, first, second, riemann_up) -> GeometryReport:
    lowered = np.einsum("lp,pijk->lijk", metric.g, riemann_up)
    ricci = np.einsum("lilk->ik", riemann_up)
    scalar = float(np.einsum("ik,ik->", ginv, ricci))
    return GeometryReport(first, second, lowered, ricci, scalar)


def curvature_from_metric(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> GeometryReport:
    """Levi-Civita curvature of an arbitrary metric from its derivatives.

    ``dg[i, j, k] = d_k g_ij`` and ``ddg[i, j, k, m] = d_k d_m g_ij``.
    """
    metric = hessian_metric(g)
    ginv = _inverse(metric)
    # Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij), l = lowered index
    first = 0.5 * (
        np.einsum("jli->ijl", dg) + np.einsum("ilj->ijl", dg) - np.einsum("ijl->ijl", dg)
    )
    second = np.einsum("kl,ijl->kij", ginv, first)
    # d_m Gamma_{l,ij}
    dfirst = 0.5 * (
        np.einsum("jlim->ijlm", ddg) + np.einsum("iljm->ijlm", ddg) - np.einsum("ijlm->ijlm", ddg)
    )
    # d_m g^{kl} = -g^{kp} (d_m g_pq) g^{ql}
    dginv = -np.einsum("kp,pqm,ql->klm", ginv, dg, ginv)
    # d_m Gamma^k_ij, stored [k, i, j, m]
    dsecond = np.einsum("klm,ijl->kijm", dginv, first) + np.einsum("kl,ijlm->kijm", ginv, dfirst)
    return _riemann(metric, ginv, first, second, dsecond)


def _riemann(metric, ginv, first, second, dsecond) -> GeometryReport:
    # R^l_ijk = d_j G^l_ik - d_k G^l_ij + G^l_jm G^m_ik - G^l_km G^m_ij
    up = (
        np.einsum("likj->lijk", dsecond)
        - np.einsum("lijk->lijk", dsecond)
        + np.einsum("ljm,mik->lijk", second, second)
        - np.einsum("lkm,mij->lijk", second, second)
    )
    return _assemble(metric, ginv, first, second, up)


def riemann_general(derivs: Derivatives, metric: MetricData | None = None) -> GeometryReport:
    """Curvature through the full connection derivative (uses 4th partials)."""
    if derivs.third is None or derivs.fourth is None:
        raise ValueError("riemann_general needs third and fourth derivatives")
    if metric is None:
        metric = hessian_metric(derivs.hess)
    ginv = _inverse(metric)
    first = christoffel_first(derivs.third)
    second = np.einsum("kl,ijl->kij", ginv, first)
    # d_m g_pq = G_pqm, so d_m Gamma^k_ij = d_m g^kl Gamma_ijl + g^kl G_ijlm / 2
    dginv = -np.einsum("kp,pqm,ql->klm", ginv, derivs.third, ginv)
    dsecond = np.einsum("klm,ijl->kijm", dginv, first) + 0.5 * np.einsum(
        "kl,ijlm->kijm", ginv, derivs.fourth
    )
    return _riemann(metric, ginv, first, second, dsecond)


def riemann_hessian_shortcut(derivs: Derivatives, metric: MetricData | None = None) -> GeometryReport:
    """Curvature of a Hessian metric from third derivatives only.

    The fourth-derivative terms cancel, leaving
    R_lijk = 1/4 g^mp (G_lkm G_pij - G_ljm G_pik).
    """
    if derivs.third is None:
        raise ValueError("riemann_hessian_shortcut needs third derivatives")
    if metric is None:
        metric = hessian_metric(derivs.hess)
    ginv = _inverse(metric)
    first = christoffel_first(derivs.third)
    second = np.einsum("kl,ijl->kij", ginv, first)
    lowered = np.einsum("lkm,mij->lijk", first, second) - np.einsum("ljm,mik->lijk", first, second)
    up = np.einsum("pl,lijk->pijk", ginv, lowered)
    ricci = np.einsum("lilk->ik", up)
    scalar = float(np.einsum("ik,ik->", ginv, ricci))
    return GeometryReport(first, second, lowered, ricci, scalar)


def riemann_hessian_2d(
    derivs: Derivatives, metric: MetricData | None = None, cert: float | None = None
) -> GeometryReport:
    """Curvature of a 2D Hessian metric through the flatness certificate.

    In two dimensions R_abab = -cert / (4 det g).  Both determinants are taken
    exactly from the float entries, which avoids the cancellation that the
    generic contraction suffers near poles.  ``cert`` may be supplied from
    extended-precision derivatives.
    """
    if derivs.third is None:
        raise ValueError("riemann_hessian_2d needs third derivatives")
    if metric is None:
        metric = hessian_metric(derivs.hess)
    if metric.dim != 2:
        raise ValueError("riemann_hessian_2d is defined in two dimensions only")
    ginv = _inverse(metric)
    first = christoffel_first(derivs.third)
    second = np.einsum("kl,ijl->kij", ginv, first)
    if cert is None:
        cert = flatness_certificate_2d(metric.g, derivs.third)
    x = -cert / (4.0 * metric.det)
    lowered = np.zeros((2, 2, 2, 2))
    lowered[0, 1, 0, 1] = lowered[1, 0, 1, 0] = x
    lowered[0, 1, 1, 0] = lowered[1, 0, 0, 1] = -x
    scalar = 2.0 * x / metric.det
    ricci = 0.5 * scalar * metric.g
    return GeometryReport(first, second, lowered, ricci, scalar)


def flatness_certificate_2d(hess: np.ndarray, third: np.ndarray) -> float:
    """det [[G_aa, G_ab, G_bb], [G_aaa, G_aab, G_abb], [G_aab, G_abb, G_bbb]].

    Vanishes exactly where a 2D Hessian metric is flat.  Used as a
    convention-free flatness test, not as a signed curvature.
    """
    if hess.shape != (2, 2):
        raise ValueError("flatness certificate is defined in two dimensions only")
    m = certificate_matrix(hess, third)
    return det_small(m)


def certificate_matrix(hess: np.ndarray, third: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [hess[0, 0], hess[0, 1], hess[1, 1]],
            [third[0, 0, 0], third[0, 0, 1], third[0, 1, 1]],
            [third[0, 0, 1], third[0, 1, 1], third[1, 1, 1]],
        ]
    )


def certificate_scale(hess: np.ndarray, third: np.ndarray) -> float:
    """Hadamard bound on the certificate determinant (product of row norms)."""
    m = certificate_matrix(hess, third)
    return float(np.prod(np.linalg.norm(m, axis=1)))
