"""Low-pass-filter controller family and its two fluctuation modes.

The configuration function is

    G(a, b, f) = (S - a)(S + b) / ((1 + f S)^n (S - a)^2 - (S + b)^2)

at a locally constant real signal level ``S`` and integer filter order ``n``.
In constant-mismatch mode the fluctuating coordinates are (a, b) with ``f``
fixed by the spec; in variable-mismatch mode they are (a, b, f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

from .expr import eval_jet, evaluate, parse
from .jet import EPS_DEN, DivisionBySingularJet, Jet, constant, powi, variable

Mode = Literal["constant", "variable"]
MODES = ("constant", "variable")


class SingularPoint(ValueError):
    """The point lies on (or numerically at) a pole of the configuration function."""

    def __init__(self, message: str = "singular point", distance: float = 0.0):
        super().__init__(message)
        self.distance = distance


@dataclass(frozen=True)
class ControllerSpec:
    S: float = 1.0
    n: int = 1
    mode: Mode = "constant"
    f: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"filter order n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not math.isfinite(self.S) or self.S == 0:
            raise ValueError(f"signal level S must be finite and nonzero, got {self.S!r}")
        if not math.isfinite(self.f):
            raise ValueError(f"mismatch factor f must be finite, got {self.f!r}")

    @property
    def dim(self) -> int:
        return 2 if self.mode == "constant" else 3

    @property
    def coordinates(self) -> tuple[str, ...]:
        return ("a", "b") if self.mode == "constant" else ("a", "b", "f")

    def with_(self, **changes) -> "ControllerSpec":
        return replace(self, **changes)

    def to_json(self) -> dict:
        return {"S": self.S, "n": self.n, "mode": self.mode, "f": self.f}

    @classmethod
    def from_json(cls, data: dict) -> "ControllerSpec":
        unknown = set(data) - {"S", "n", "mode", "f"}
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(
            S=float(data.get("S", 1.0)),
            n=data.get("n", 1),
            mode=data.get("mode", "constant"),
            f=float(data.get("f", 1.0)),
        )


@dataclass(frozen=True)
class ParamPoint:
    a: float = 0.0
    b: float = 0.0
    # ignored in constant mode, where spec.f applies
    f: float = 0.0


def effective_f(spec: ControllerSpec, point: ParamPoint) -> float:
    return spec.f if spec.mode == "constant" else point.f


def _denominator(S, n, a, b, f):
    u = S - a
    v = S + b
    c = powi(1.0 + f * S, n)
    return c * u * u - v * v


def singular_set_distance(spec: ControllerSpec, point: ParamPoint) -> float:
    """|d| where d = (1+fS)^n (S-a)^2 - (S+b)^2; zero on the pole set."""
    return abs(_denominator(spec.S, spec.n, point.a, point.b, effective_f(spec, point)))


def check_regular(spec: ControllerSpec, point: ParamPoint) -> None:
    f = effective_f(spec, point)
    dist = singular_set_distance(spec, point)
    if dist <= EPS_DEN:
        raise SingularPoint("singular point: controller denominator vanishes", dist)
    if spec.mode == "variable" and abs(1.0 + f * spec.S) <= EPS_DEN:
        raise SingularPoint("singular point: 1 + f S vanishes", dist)


def _controller(S, n, a, b, f):
    # same operation sequence for floats and jets
    u = S - a
    v = S + b
    c = powi(1.0 + f * S, n)
    d = c * u * u - v * v
    return u * v / d


def controller_value(spec: ControllerSpec, point: ParamPoint) -> float:
    check_regular(spec, point)
    return _controller(spec.S, spec.n, point.a, point.b, effective_f(spec, point))


def _coordinate(value, k, nvars, order, dtype):
    if order:
        return variable(value, k, nvars, order, dtype)
    return constant(value, nvars, order, dtype)


def controller_jet(spec: ControllerSpec, point: ParamPoint, order: int = 4, dtype=float) -> Jet:
    """Taylor jet of G in the mode's fluctuating coordinates."""
    check_regular(spec, point)
    nv = spec.dim
    a = _coordinate(point.a, 0, nv, order, dtype)
    b = _coordinate(point.b, 1, nv, order, dtype)
    f = _coordinate(point.f, 2, nv, order, dtype) if spec.mode == "variable" else spec.f
    return _controller(spec.S, spec.n, a, b, f)


CONTROLLER_EXPRESSION = "(S-a)*(S+b)/((1+f*S)^n*(S-a)^2-(S+b)^2)"


class ConfigFunction:
    """A configuration function: the built-in controller or a parsed expression."""

    def __init__(self, expression: str | None = None, constants: dict | None = None):
        self.expression = expression
        self.constants = dict(constants or {})
        self.ast = None
        if expression is not None:
            self.ast = parse(expression, self.constants)

    @property
    def builtin(self) -> bool:
        return self.ast is None

    def __repr__(self) -> str:
        return "ConfigFunction(builtin)" if self.builtin else f"ConfigFunction({self.expression!r})"

    def _bindings(self, spec: ControllerSpec, point: ParamPoint, order: int | None, dtype=float):
        values = {"a": point.a, "b": point.b, "f": effective_f(spec, point)}
        names = spec.coordinates
        binds: dict = dict(self.constants)
        binds["S"] = spec.S
        for k, name in enumerate(("a", "b", "f")):
            if order is not None and name in names:
                binds[name] = _coordinate(values[name], k, spec.dim, order, dtype)
            else:
                binds[name] = values[name]
        return binds

    def value(self, spec: ControllerSpec, point: ParamPoint) -> float:
        if self.builtin:
            return controller_value(spec, point)
        try:
            return float(evaluate(self.ast, self._bindings(spec, point, None), {"n": spec.n}))
        except DivisionBySingularJet as exc:
            raise SingularPoint(f"singular point: {exc}") from exc

    def jet(self, spec: ControllerSpec, point: ParamPoint, order: int, dtype=float) -> Jet:
        if self.builtin:
            return controller_jet(spec, point, order, dtype)
        try:
            return eval_jet(self.ast, self._bindings(spec, point, order, dtype), {"n": spec.n})
        except DivisionBySingularJet as exc:
            raise SingularPoint(f"singular point: {exc}") from exc

    def singular_distance(self, spec: ControllerSpec, point: ParamPoint) -> float:
        if self.builtin:
            return singular_set_distance(spec, point)
        return math.nan


BUILTIN = ConfigFunction()
