"""Grid scans over parameter boxes, boundary bisection and divergence probes."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import closed_forms as cf
from .analysis import analyze
from .closed_forms import FormulaId, FormulaSingular, Variant
from .controller import BUILTIN, ConfigFunction, ControllerSpec, ParamPoint, SingularPoint
from .geometry import StabilityClass
from .parallel import ordered_map
from .verify import fmt

SCHEMA_VERSION = 1
AXIS_NAMES = ("a", "b", "f", "S")
QUANTITIES = ("value", "det", "minors", "scalar_R", "flat_cert", "R_gsc", "R_mcur")
BISECT_TOL = 1e-10
DIVERGENCE_FACTOR = 100.0
# magnitudes below this never count as divergent (rounding noise of zero quantities)
DIVERGENCE_FLOOR = 1e-6


class InvalidJob(ValueError):
    pass


class NoSignChange(ValueError):
    pass


class SingularInBracket(ValueError):
    def __init__(self, location: float):
        super().__init__(f"singular point inside bracket at {location!r}")
        self.location = location


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    steps: int

    def values(self) -> list[float]:
        # min + span*k/(steps-1) keeps both endpoints exact
        span = self.max - self.min
        return [self.min + span * k / (self.steps - 1) for k in range(self.steps)]


@dataclass(frozen=True)
class ScanJob:
    spec: ControllerSpec
    axes: tuple[Axis, ...]
    quantities: tuple[str, ...] = ("det",)
    fixed: dict = field(default_factory=dict)
    refine_boundaries: bool = False
    seed: int = 0  # reserved; scans are deterministic
    expression: str | None = None
    constants: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        _validate(self)

    @property
    def func(self) -> ConfigFunction:
        if self.expression is None:
            return BUILTIN
        return ConfigFunction(self.expression, self.constants)

    @property
    def columns(self) -> list[str]:
        return [a.name for a in self.axes] + quantity_columns(self.quantities, self.spec.dim)

    @classmethod
    def from_json(cls, data: dict) -> "ScanJob":
        allowed = {"schema_version", "spec", "axes", "fixed", "quantities", "refine_boundaries",
                   "seed", "expression", "constants", "workers"}
        if not isinstance(data, dict):
            raise InvalidJob("job must be a JSON object")
        unknown = set(data) - allowed
        if unknown:
            raise InvalidJob(f"unknown job keys: {sorted(unknown)}")
        if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise InvalidJob(f"unsupported schema_version {data.get('schema_version')!r}")
        try:
            spec = ControllerSpec.from_json(data.get("spec", {}))
            axes = []
            for ax in data.get("axes", []):
                if set(ax) != {"name", "min", "max", "steps"}:
                    raise InvalidJob(f"axis needs exactly name, min, max, steps: {ax}")
                if isinstance(ax["steps"], bool) or not isinstance(ax["steps"], int):
                    raise InvalidJob("axis steps must be an integer")
                axes.append(Axis(ax["name"], float(ax["min"]), float(ax["max"]), ax["steps"]))
            return cls(
                spec=spec,
                axes=tuple(axes),
                quantities=tuple(data.get("quantities", ["det"])),
                fixed={k: float(v) for k, v in data.get("fixed", {}).items()},
                refine_boundaries=bool(data.get("refine_boundaries", False)),
                seed=int(data.get("seed", 0)),
                expression=data.get("expression"),
                constants={k: float(v) for k, v in data.get("constants", {}).items()},
                workers=int(data.get("workers", 1)),
            )
        except InvalidJob:
            raise
        except (TypeError, ValueError, AttributeError) as exc:
            raise InvalidJob(str(exc)) from exc

    def to_json(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "spec": self.spec.to_json(),
            "axes": [{"name": a.name, "min": a.min, "max": a.max, "steps": a.steps} for a in self.axes],
            "fixed": dict(self.fixed),
            "quantities": list(self.quantities),
            "refine_boundaries": self.refine_boundaries,
            "seed": self.seed,
        }
        if self.expression is not None:
            out["expression"] = self.expression
            out["constants"] = dict(self.constants)
        return out


def _validate(job: ScanJob) -> None:
    if not 1 <= len(job.axes) <= 3:
        raise InvalidJob("a scan needs 1 to 3 axes")
    names = [a.name for a in job.axes]
    if len(set(names)) != len(names):
        raise InvalidJob(f"duplicate axes: {names}")
    for a in job.axes:
        if a.name not in AXIS_NAMES:
            raise InvalidJob(f"unknown axis {a.name!r}; choose from {AXIS_NAMES}")
        if not (math.isfinite(a.min) and math.isfinite(a.max)) or not a.min < a.max:
            raise InvalidJob(f"axis {a.name}: need finite min < max")
        if a.steps < 2:
            raise InvalidJob(f"axis {a.name}: steps must be >= 2")
        if a.name == "S" and a.min <= 0 <= a.max:
            raise InvalidJob("S axis must not contain 0")
    for k, v in job.fixed.items():
        if k not in AXIS_NAMES or k in names:
            raise InvalidJob(f"fixed value for {k!r} is not a free symbol")
        if not math.isfinite(v):
            raise InvalidJob(f"fixed value for {k!r} must be finite")
    if job.fixed.get("S", 1.0) == 0:
        raise InvalidJob("S must be nonzero")
    if not job.quantities:
        raise InvalidJob("no quantities requested")
    for q in job.quantities:
        if q not in QUANTITIES:
            raise InvalidJob(f"unknown quantity {q!r}; choose from {QUANTITIES}")
    if len(set(job.quantities)) != len(job.quantities):
        raise InvalidJob("duplicate quantities")
    if "flat_cert" in job.quantities and job.spec.dim != 2:
        raise InvalidJob("flat_cert is defined for constant mode (2D) only")
    oracle = {"R_gsc", "R_mcur"} & set(job.quantities)
    if oracle and (job.spec.mode != "variable" or job.expression is not None):
        raise InvalidJob(f"{sorted(oracle)} need the built-in controller in variable mode")
    if job.workers < 1:
        raise InvalidJob("workers must be >= 1")
    if job.expression is not None:
        try:
            ConfigFunction(job.expression, job.constants)
        except Exception as exc:  # parser errors carry their own message
            raise InvalidJob(f"bad expression: {exc}") from exc


def quantity_columns(quantities: Sequence[str], dim: int) -> list[str]:
    cols = []
    for q in quantities:
        if q == "minors":
            cols.extend(f"p{k}" for k in range(1, dim + 1))
        else:
            cols.append(q)
    return cols


# -- per-point evaluation --------------------------------------------------------


@dataclass(frozen=True)
class PointRecord:
    coords: tuple[float, ...]
    values: dict  # column -> float | None
    classification: StabilityClass
    singular_distance: float


def resolve(job_spec: ControllerSpec, fixed: dict, coords: dict) -> tuple[ControllerSpec, ParamPoint]:
    vals = {"S": job_spec.S, "f": job_spec.f, "a": 0.0, "b": 0.0}
    vals.update(fixed)
    vals.update(coords)
    spec = job_spec.with_(S=vals["S"], f=vals["f"])
    return spec, ParamPoint(vals["a"], vals["b"], vals["f"])


def _order_for(quantities) -> int:
    if "scalar_R" in quantities or "flat_cert" in quantities:
        return 3
    return 2


def point_quantities(
    spec: ControllerSpec, point: ParamPoint, quantities: Sequence[str], func: ConfigFunction = BUILTIN
) -> PointRecord:
    cols = quantity_columns(quantities, spec.dim)
    dist = func.singular_distance(spec, point)
    empty = dict.fromkeys(cols)
    try:
        rep = analyze(spec, point, _order_for(quantities), func)
    except SingularPoint as exc:
        if math.isnan(dist):
            dist = exc.distance
        return PointRecord((), empty, StabilityClass.SINGULAR, dist)
    out = dict(empty)
    for q in quantities:
        if q == "value":
            out["value"] = rep.derivs.value
        elif q == "det":
            out["det"] = rep.metric.det
        elif q == "minors":
            for k, p in enumerate(rep.metric.leading_minors, 1):
                out[f"p{k}"] = p
        elif q == "scalar_R":
            out["scalar_R"] = rep.scalar
        elif q == "flat_cert":
            out["flat_cert"] = rep.flat_certificate
        elif q == "R_gsc":
            out["R_gsc"] = _oracle(FormulaId.R_GENERAL, spec, point)
        elif q == "R_mcur":
            if point.a == 0 and point.b == 0:
                out["R_mcur"] = _oracle(FormulaId.R_LIMIT_MCUR, spec, point)
    return PointRecord((), out, rep.classification, dist)


def _oracle(fid: FormulaId, spec: ControllerSpec, point: ParamPoint) -> float | None:
    try:
        val = cf.eval_formula(fid, Variant.AS_PRINTED, spec.S, spec.n, point.f, point.a, point.b)[""]
    except FormulaSingular:
        return None
    return float(val)


def _eval_cell(args) -> PointRecord:
    job, coords = args
    spec, point = resolve(job.spec, job.fixed, dict(zip((a.name for a in job.axes), coords)))
    rec = point_quantities(spec, point, job.quantities, job.func)
    return PointRecord(tuple(coords), rec.values, rec.classification, rec.singular_distance)


# -- scan ------------------------------------------------------------------------


@dataclass(frozen=True)
class Boundary:
    quantity: str
    axis: str
    at: dict  # coordinates on the other axes
    lo: float
    hi: float
    location: float
    kind: str  # Root, SignChangeAtPole, SingularInBracket

    def to_json(self) -> dict:
        return {"quantity": self.quantity, "axis": self.axis, "at": self.at, "lo": self.lo,
                "hi": self.hi, "location": self.location, "kind": self.kind}


@dataclass(frozen=True)
class DivergenceFlag:
    quantity: str
    axis: str
    at: dict
    location: float
    neighbour_magnitude: float
    line_median: float

    def to_json(self) -> dict:
        return {"quantity": self.quantity, "axis": self.axis, "at": self.at,
                "location": self.location, "neighbour_magnitude": self.neighbour_magnitude,
                "line_median": self.line_median}


@dataclass(frozen=True)
class ScanResult:
    job: ScanJob
    records: list[PointRecord]
    boundaries: list[Boundary]
    divergences: list[DivergenceFlag]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.steps for a in self.job.axes)

    def column(self, name: str) -> list:
        axis_names = [a.name for a in self.job.axes]
        if name in axis_names:
            k = axis_names.index(name)
            return [r.coords[k] for r in self.records]
        if name == "class":
            return [r.classification.value for r in self.records]
        if name == "singular_distance":
            return [r.singular_distance for r in self.records]
        return [r.values[name] for r in self.records]

    def to_csv(self) -> str:
        cols = self.job.columns
        qcols = cols[len(self.job.axes):]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols + ["class", "singular_distance"])
        for r in self.records:
            row = [fmt(c) for c in r.coords]
            row += ["" if r.values[c] is None else fmt(r.values[c]) for c in qcols]
            row += [r.classification.value, fmt(r.singular_distance)]
            w.writerow(row)
        return buf.getvalue()

    def boundaries_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "boundaries": [b.to_json() for b in self.boundaries],
            "divergences": [d.to_json() for d in self.divergences],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_scan(job: ScanJob, workers: int | None = None) -> ScanResult:
    """Evaluate the full grid (row-major, axes in declaration order)."""
    grids = [a.values() for a in job.axes]
    cells = [(job, coords) for coords in itertools.product(*grids)]
    records = ordered_map(_eval_cell, cells, workers or job.workers)
    qcols = quantity_columns(job.quantities, job.spec.dim)
    boundaries: list[Boundary] = []
    divergences: list[DivergenceFlag] = []
    for ax_index, axis in enumerate(job.axes):
        for line in _lines(job, ax_index):
            recs = [records[i] for i in line]
            at = {a.name: recs[0].coords[k] for k, a in enumerate(job.axes) if k != ax_index}
            xs = [r.coords[ax_index] for r in recs]
            for q in qcols:
                ys = [r.values[q] for r in recs]
                divergences.extend(_divergence_flags(q, axis.name, at, xs, ys))
                if job.refine_boundaries:
                    boundaries.extend(_line_boundaries(job, q, axis.name, at, xs, ys))
    return ScanResult(job, records, boundaries, divergences)


def _lines(job: ScanJob, ax_index: int) -> list[list[int]]:
    """Flat record indices of every 1D line running along one axis."""
    shape = [a.steps for a in job.axes]
    strides = [math.prod(shape[k + 1:]) for k in range(len(shape))]
    others = [range(s) if k != ax_index else [0] for k, s in enumerate(shape)]
    out = []
    for base in itertools.product(*others):
        start = sum(i * st for i, st in zip(base, strides))
        out.append([start + j * strides[ax_index] for j in range(shape[ax_index])])
    return out


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _line_boundaries(job, q, axis, at, xs, ys) -> list[Boundary]:
    out = []
    prev = None  # index of last regular cell
    for i, y in enumerate(ys):
        if y is None or not math.isfinite(y) or _sign(y) == 0:
            continue
        if prev is not None and _sign(ys[prev]) != _sign(y):
            lo, hi = xs[prev], xs[i]
            if i - prev > 1:
                # a missing cell sits between the regular neighbours
                mid = xs[prev + 1] if i - prev == 2 else 0.5 * (lo + hi)
                out.append(Boundary(q, axis, at, lo, hi, mid, "SingularInBracket"))
            else:
                out.append(_refine(job, q, axis, at, lo, hi))
        prev = i
    return out


def _refine(job, q, axis, at, lo, hi) -> Boundary:
    try:
        loc, kind = bisect_boundary(job, q, axis, lo, hi, at)
    except SingularInBracket as exc:
        return Boundary(q, axis, at, lo, hi, exc.location, "SingularInBracket")
    return Boundary(q, axis, at, lo, hi, loc, kind)


def _divergence_flags(q, axis, at, xs, ys) -> list[DivergenceFlag]:
    mags = [abs(y) if y is not None and math.isfinite(y) else None for y in ys]
    finite = [m for m in mags if m is not None]
    if len(finite) < 3:
        return []
    med = statistics.median(finite)
    thresh = max(DIVERGENCE_FACTOR * med, DIVERGENCE_FLOOR)
    out = []
    n = len(mags)
    for i, m in enumerate(mags):
        nbrs = [mags[j] for j in (i - 1, i + 1) if 0 <= j < n and mags[j] is not None]
        if not nbrs:
            continue
        if m is None:
            peak = max(nbrs)
            if peak > thresh:
                out.append(DivergenceFlag(q, axis, at, xs[i], peak, med))
        elif m > thresh and all(m >= x for x in nbrs) and len(nbrs) == 2 and 0 < i < n - 1:
            out.append(DivergenceFlag(q, axis, at, xs[i], m, med))
    return out


# -- bisection -------------------------------------------------------------------


def bisect_sign_change(
    fn: Callable[[float], float | None], lo: float, hi: float, tol: float = BISECT_TOL
) -> tuple[float, str]:
    """Locate a sign change of ``fn`` in [lo, hi].

    ``fn`` returns None (or raises SingularPoint) where it is undefined; hitting
    such a point raises SingularInBracket.  Returns (location, kind) with kind
    "Root" or "SignChangeAtPole", the latter when |fn| grows while the bracket
    shrinks.
    """

    def call(x):
        try:
            y = fn(x)
        except SingularPoint:
            y = None
        if y is None or not math.isfinite(y):
            raise SingularInBracket(x)
        return y

    ylo, yhi = call(lo), call(hi)
    if ylo == 0:
        return lo, "Root"
    if yhi == 0:
        return hi, "Root"
    if _sign(ylo) == _sign(yhi):
        raise NoSignChange(f"no sign change on [{lo!r}, {hi!r}]")
    start = max(abs(ylo), abs(yhi))
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        ym = call(mid)
        if ym == 0:
            return mid, "Root"
        if _sign(ym) == _sign(ylo):
            lo, ylo = mid, ym
        else:
            hi, yhi = mid, ym
    loc = 0.5 * (lo + hi)
    grown = min(abs(ylo), abs(yhi)) > start
    return loc, "SignChangeAtPole" if grown else "Root"


def bisect_boundary(
    job: ScanJob, quantity: str, axis: str, lo: float, hi: float, at: dict | None = None
) -> tuple[float, str]:
    """Bisect a quantity column along one axis, other coordinates held at ``at``."""
    if axis not in AXIS_NAMES:
        raise InvalidJob(f"unknown axis {axis!r}")
    base = dict(at or {})
    func = job.func
    quantities = [q for q in job.quantities if quantity in quantity_columns([q], job.spec.dim)]
    if not quantities:
        raise InvalidJob(f"quantity {quantity!r} not in job")

    def fn(x):
        spec, point = resolve(job.spec, job.fixed, {**base, axis: x})
        rec = point_quantities(spec, point, quantities, func)
        return rec.values[quantity]

    return bisect_sign_change(fn, lo, hi)


# -- divergence probe --------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceProfile:
    quantity: str
    distances: tuple[float, ...]
    values: tuple[float | None, ...]

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(math.nan if v is None else abs(v) for v in self.values)

    @property
    def monotone_increasing(self) -> bool:
        m = self.magnitudes
        return all(b > a for a, b in zip(m, m[1:]))


def divergence_probe(
    spec: ControllerSpec,
    target: dict,
    direction: dict,
    quantity: str,
    exponents: Sequence[int] = (1, 2, 3, 4),
    func: ConfigFunction = BUILTIN,
) -> DivergenceProfile:
    """Sample ``quantity`` at target + 10^-k * direction for each k.

    ``target`` and ``direction`` map symbols in {a, b, f, S} to values.
    Distances decrease, so a divergence shows as growing magnitudes.
    """
    base = {k: v for q in (target, direction) for k, v in q.items()}
    for k in base:
        if k not in AXIS_NAMES:
            raise ValueError(f"unknown symbol {k!r}")
    qname = quantity
    qlist = [q for q in QUANTITIES if qname in quantity_columns([q], spec.dim)]
    if not qlist:
        raise ValueError(f"unknown quantity {quantity!r}")
    dists, vals = [], []
    for k in exponents:
        eps = 10.0 ** (-k)
        coords = {s: target.get(s, 0.0) + eps * direction.get(s, 0.0) for s in base}
        s2, point = resolve(spec, {}, coords)
        rec = point_quantities(s2, point, qlist, func)
        dists.append(eps)
        vals.append(rec.values[qname])
    return DivergenceProfile(quantity, tuple(dists), tuple(vals))
