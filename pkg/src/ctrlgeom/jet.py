"""Truncated multivariate Taylor series ("jets") for exact forward-mode AD.

A jet in ``nvars`` variables truncated at total degree ``order`` stores the
coefficients ``c_alpha`` of ``sum c_alpha * dx**alpha`` densely, indexed by a
graded-lexicographic table of multi-indices.  At most 4 variables and order 4
(70 coefficients), so dense storage with precomputed product tables is used.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

MAX_VARS = 4
MAX_ORDER = 4

# Absolute threshold on a divisor's constant term.
EPS_DEN = 1e-12


class DivisionBySingularJet(ZeroDivisionError):
    """Division by a jet whose constant term is (numerically) zero."""

    def __init__(self, value: float):
        super().__init__(f"division by singular jet (constant term {value!r})")
        self.value = value


class IndexOutOfOrder(ValueError):
    pass


class JetMismatch(ValueError):
    pass


@dataclass(frozen=True)
class _Layout:
    nvars: int
    order: int
    indices: tuple[tuple[int, ...], ...]
    position: dict
    factorials: np.ndarray
    degrees: np.ndarray
    mul_i: np.ndarray
    mul_j: np.ndarray
    mul_k: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)


def _multi_indices(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        block = [
            alpha
            for alpha in itertools.product(range(deg + 1), repeat=nvars)
            if sum(alpha) == deg
        ]
        # within a degree: lexicographically descending, so e_0 precedes e_1
        out.extend(sorted(block, reverse=True))
    return out


@lru_cache(maxsize=None)
def layout(nvars: int, order: int) -> _Layout:
    if not 1 <= nvars <= MAX_VARS:
        raise ValueError(f"nvars must be in 1..{MAX_VARS}, got {nvars}")
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}, got {order}")
    indices = tuple(_multi_indices(nvars, order))
    position = {alpha: k for k, alpha in enumerate(indices)}
    factorials = np.array(
        [math.prod(math.factorial(e) for e in alpha) for alpha in indices], dtype=float
    )
    degrees = np.array([sum(alpha) for alpha in indices])
    mi, mj, mk = [], [], []
    for i, ai in enumerate(indices):
        for j, aj in enumerate(indices):
            s = tuple(x + y for x, y in zip(ai, aj))
            k = position.get(s)
            if k is not None:
                mi.append(i)
                mj.append(j)
                mk.append(k)
    return _Layout(
        nvars,
        order,
        indices,
        position,
        factorials,
        degrees,
        np.array(mi, dtype=np.intp),
        np.array(mj, dtype=np.intp),
        np.array(mk, dtype=np.intp),
    )


Scalar = Union[int, float]


class Jet:
    """Immutable truncated Taylor expansion of a scalar function at a point."""

    __slots__ = ("nvars", "order", "coeffs", "_layout")

    def __init__(self, nvars: int, order: int, coeffs):
        lay = layout(nvars, order)
        arr = np.array(coeffs)
        if arr.dtype != np.longdouble:
            arr = arr.astype(float)
        if arr.shape != (lay.size,):
            raise ValueError(f"expected {lay.size} coefficients, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "_layout", lay)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @classmethod
    def _raw(cls, lay: _Layout, arr: np.ndarray) -> "Jet":
        obj = object.__new__(cls)
        arr.flags.writeable = False
        object.__setattr__(obj, "nvars", lay.nvars)
        object.__setattr__(obj, "order", lay.order)
        object.__setattr__(obj, "coeffs", arr)
        object.__setattr__(obj, "_layout", lay)
        return obj

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coeff(self, alpha: Iterable[int]) -> float:
        alpha = tuple(alpha)
        if len(alpha) != self.nvars:
            raise ValueError(f"multi-index {alpha} has wrong length for nvars={self.nvars}")
        if sum(alpha) > self.order:
            raise IndexOutOfOrder(f"|{alpha}| exceeds jet order {self.order}")
        return float(self.coeffs[self._layout.position[alpha]])

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {alpha: float(c) for alpha, c in zip(self._layout.indices, self.coeffs)}

    def __repr__(self) -> str:
        terms = ", ".join(f"{a}: {c:g}" for a, c in self.as_dict().items() if c != 0.0)
        return f"Jet(nvars={self.nvars}, order={self.order}, {{{terms}}})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars or other.order != self.order:
                raise JetMismatch(
                    f"jet shapes differ: ({self.nvars},{self.order}) vs "
                    f"({other.nvars},{other.order})"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            dtype = np.promote_types(self.coeffs.dtype, np.asarray(other).dtype)
            return constant(other, self.nvars, self.order, dtype)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet._raw(self._layout, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet._raw(self._layout, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet._raw(self._layout, other.coeffs - self.coeffs)

    def __neg__(self):
        return Jet._raw(self._layout, -self.coeffs)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return Jet._raw(self._layout, self.coeffs * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        lay = self._layout
        weights = self.coeffs[lay.mul_i] * other.coeffs[lay.mul_j]
        if weights.dtype == np.float64:
            prod = np.bincount(lay.mul_k, weights=weights, minlength=lay.size)
        else:
            prod = np.zeros(lay.size, dtype=weights.dtype)
            np.add.at(prod, lay.mul_k, weights)
        return Jet._raw(lay, prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = self * reciprocal(other)
        # exact constant term, so order-0 results agree bit-for-bit with floats
        arr = out.coeffs.copy()
        arr[0] = self.coeffs[0] / other.coeffs[0]
        return Jet._raw(self._layout, arr)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
            raise TypeError("jets support integer exponents only")
        return powi(self, int(k))


def constant(value: float, nvars: int, order: int, dtype=float) -> Jet:
    lay = layout(nvars, order)
    arr = np.zeros(lay.size, dtype=dtype)
    arr[0] = value
    return Jet._raw(lay, arr)


def variable(value: float, var_index: int, nvars: int, order: int, dtype=float) -> Jet:
    """Coordinate jet; ``dtype=np.longdouble`` gives extended precision."""
    if order < 1:
        raise ValueError("a jet variable needs order >= 1")
    if not 0 <= var_index < nvars:
        raise ValueError(f"var_index {var_index} out of range for nvars={nvars}")
    lay = layout(nvars, order)
    arr = np.zeros(lay.size, dtype=dtype)
    arr[0] = value
    arr[1 + var_index] = 1.0
    return Jet._raw(lay, arr)


def reciprocal(j: Jet) -> Jet:
    """1/j via the terminating geometric series of its nilpotent part."""
    c0 = j.coeffs[0]
    if abs(c0) <= EPS_DEN:
        raise DivisionBySingularJet(float(c0))
    lay = j._layout
    t = j.coeffs / c0
    t = t.copy()
    t[0] = 0.0
    tj = Jet._raw(lay, t)
    s = constant(1.0, lay.nvars, lay.order, t.dtype)
    for _ in range(lay.order):
        s = 1.0 - tj * s
    return s * (1.0 / c0)


def powi(base, k: int):
    """Integer power by repeated squaring; works for jets and plain floats.

    Jets and floats go through the same multiplication sequence, so the
    constant term of ``powi(jet, k)`` equals ``powi(float, k)`` exactly.
    """
    if k < 0:
        return 1.0 / powi(base, -k)
    result = None
    sq = base
    while k:
        if k & 1:
            result = sq if result is None else result * sq
        k >>= 1
        if k:
            sq = sq * sq
    if result is None:
        if isinstance(base, Jet):
            return constant(1.0, base.nvars, base.order)
        return 1.0
    return result


def extract_partial(j: Jet, alpha: Iterable[int]) -> float:
    """Partial derivative d^alpha f at the expansion point: alpha! * c_alpha."""
    alpha = tuple(alpha)
    if sum(alpha) > j.order:
        raise IndexOutOfOrder(f"|{alpha}| exceeds jet order {j.order}")
    k = j._layout.position[alpha]
    return float(j._layout.factorials[k] * j.coeffs[k])


def derivative_tensor(j: Jet, k: int) -> np.ndarray:
    """Full symmetric tensor of all k-th partial derivatives."""
    if k > j.order:
        raise IndexOutOfOrder(f"order {k} exceeds jet order {j.order}")
    if k == 0:
        return np.array(j.coeffs[0])
    n = j.nvars
    out = np.empty((n,) * k, dtype=j.coeffs.dtype)
    lay = j._layout
    for idx in itertools.product(range(n), repeat=k):
        alpha = [0] * n
        for i in idx:
            alpha[i] += 1
        pos = lay.position[tuple(alpha)]
        out[idx] = lay.factorials[pos] * j.coeffs[pos]
    return out
