"""Pointwise comparison of published closed forms against AD ground truth.

The controller definition evaluated by jets is the single source of truth;
each closed form is a hypothesis checked at every applicable grid point and
recorded as a ``DiscrepancyRecord``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import closed_forms as cf
from .analysis import PointReport, analyze
from .closed_forms import FormulaId, FormulaSingular, Variant
from .controller import ControllerSpec, ParamPoint, SingularPoint, check_regular
from .geometry import StabilityClass
from .parallel import ordered_map

MATCH_TOL = 1e-9
CURVATURE_IDS = {FormulaId.R_GENERAL, FormulaId.R_LIMIT_MCUR}
CROSS_ID = "R_GENERAL~R_LIMIT_MCUR"

LEDGER_COLUMNS = ("formula", "variant", "S", "n", "f", "a", "b",
                  "paper_value", "ad_value", "rel_error", "verdict")


@dataclass(frozen=True)
class GridPoint:
    S: float
    n: int
    f: float
    a: float
    b: float


@dataclass(frozen=True)
class DiscrepancyRecord:
    formula: str  # FormulaId value, with ".component" for tensor-valued ids
    variant: str
    point: GridPoint
    paper_value: float
    ad_value: float
    rel_error: float
    verdict: str  # Match, Mismatch, SignFlippedMatch, BothSingular

    def row(self) -> list[str]:
        p = self.point
        return [self.formula, self.variant, fmt(p.S), str(p.n), fmt(p.f), fmt(p.a), fmt(p.b),
                fmt(self.paper_value), fmt(self.ad_value), fmt(self.rel_error), self.verdict]


def fmt(x: float) -> str:
    """Shortest round-trip decimal; ``nan`` for missing values."""
    if isinstance(x, int):
        return str(x)
    if x is None or math.isnan(x):
        return "nan"
    return repr(float(x))


def default_grid() -> list[GridPoint]:
    values = (-0.4, -0.2, 0.0, 0.2, 0.4)
    return [
        GridPoint(1.0, n, f, a, b)
        for n in (1, 2, 3)
        for f in (-0.5, 0.5, 1.0, 2.0)
        for a in values
        for b in values
    ]


def grid_from_json(data: dict) -> list[GridPoint]:
    """Cartesian grid ``{"S": [...], "n": [...], "f": [...], "a": [...], "b": [...]}``
    and/or explicit ``"points": [{"S":..,"n":..,"f":..,"a":..,"b":..}, ...]``."""
    allowed = {"schema_version", "S", "n", "f", "a", "b", "points"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    if data.get("schema_version", 1) != 1:
        raise ValueError("unsupported grid schema_version")
    pts: list[GridPoint] = []
    axes = [k for k in ("S", "n", "f", "a", "b") if k in data]
    if axes:
        missing = {"S", "n", "f", "a", "b"} - set(axes)
        if missing:
            raise ValueError(f"cartesian grid is missing axes {sorted(missing)}")
        for S, n, f, a, b in itertools.product(*(data[k] for k in ("S", "n", "f", "a", "b"))):
            pts.append(_grid_point(S, n, f, a, b))
    for p in data.get("points", []):
        if set(p) != {"S", "n", "f", "a", "b"}:
            raise ValueError(f"grid point needs exactly S, n, f, a, b: {p}")
        pts.append(_grid_point(p["S"], p["n"], p["f"], p["a"], p["b"]))
    if not pts:
        raise ValueError("grid is empty")
    return pts


def _grid_point(S, n, f, a, b) -> GridPoint:
    vals = [float(S), float(f), float(a), float(b)]
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("grid values must be finite")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    if vals[0] == 0:
        raise ValueError("S must be nonzero")
    return GridPoint(vals[0], n, vals[1], vals[2], vals[3])


# -- AD side -----------------------------------------------------------------


def _safe_analyze(spec, point, order):
    try:
        rep = analyze(spec, point, order)
    except SingularPoint:
        return None
    return rep


def _ad_values(p: GridPoint) -> dict:
    """AD counterparts keyed by (FormulaId, component); missing -> absent."""
    const = _safe_analyze(ControllerSpec(p.S, p.n, "constant", p.f), ParamPoint(p.a, p.b), 3)
    var = _safe_analyze(ControllerSpec(p.S, p.n, "variable", p.f), ParamPoint(p.a, p.b, p.f), 4)
    out: dict = {}
    if const is not None:
        g = const.metric.g
        out[(FormulaId.CORCONST_GAA, "")] = g[0, 0]
        out[(FormulaId.CORCONST_GAB, "")] = g[0, 1]
        out[(FormulaId.CORCONST_GBB, "")] = g[1, 1]
        out[(FormulaId.DET2_CONST, "")] = const.metric.det
        out[(FormulaId.LIMIT_METRIC_CONST, "g_aa")] = g[0, 0]
        out[(FormulaId.LIMIT_METRIC_CONST, "g_ab")] = g[0, 1]
        out[(FormulaId.LIMIT_METRIC_CONST, "g_bb")] = g[1, 1]
        out[(FormulaId.LIMIT_DET_CONST, "")] = const.metric.det
        gam = 0.5 * const.derivs.third
        for name, idx in (("aaa", (0, 0, 0)), ("aab", (0, 0, 1)), ("abb", (0, 1, 1)), ("bbb", (1, 1, 1))):
            out[(FormulaId.CHRISTOFFEL_LIMIT, name)] = gam[idx]
    if var is not None:
        g = var.metric.g
        for fid in (FormulaId.MIXED_METRIC_VAR, FormulaId.LIMIT_MIXED_VAR):
            out[(fid, "g_af")] = g[0, 2]
            out[(fid, "g_bf")] = g[1, 2]
            out[(fid, "g_ff")] = g[2, 2]
        out[(FormulaId.P2_VAR, "")] = var.metric.leading_minors[1]
        det3 = var.metric.det
        for fid in (FormulaId.DET3_VAR, FormulaId.LIMIT_DET3_VAR, FormulaId.DET3_N1):
            out[(fid, "")] = det3
        g1 = _g1_from_det(p, det3)
        if g1 is not None:
            out[(FormulaId.G1_POLY, "")] = g1
        if var.classification is not StabilityClass.SINGULAR and var.geometry is not None:
            out[(FormulaId.R_GENERAL, "")] = var.geometry.scalar
            out[(FormulaId.R_LIMIT_MCUR, "")] = var.geometry.scalar
    return out


def _g1_from_det(p: GridPoint, det3: float):
    # invert det = -u^3 v n S^2 g1 / (y^2 d^7)
    u, v, y = p.S - p.a, p.S + p.b, 1.0 + p.f * p.S
    d = y**p.n * u * u - v * v
    pref = u**3 * v * p.n * p.S**2
    if pref == 0:
        return None
    return -det3 * y**2 * d**7 / pref


# -- comparison ----------------------------------------------------------------


def compare(paper: float | None, ad: float | None, curvature: bool) -> tuple[float, str]:
    if paper is None and ad is None:
        return math.nan, "BothSingular"
    if paper is None or ad is None:
        return math.nan, "Mismatch"
    rel = abs(paper - ad) / max(abs(ad), 1e-30)
    if rel < MATCH_TOL:
        return rel, "Match"
    if curvature and abs(paper + ad) / max(abs(ad), 1e-30) < MATCH_TOL:
        return rel, "SignFlippedMatch"
    return rel, "Mismatch"


def _nan(x):
    return math.nan if x is None else float(x)


def _on_singular_set(p: GridPoint) -> bool:
    try:
        check_regular(ControllerSpec(p.S, p.n, "variable", p.f), ParamPoint(p.a, p.b, p.f))
    except SingularPoint:
        return True
    return False


def _records_for_point(p: GridPoint) -> list[tuple[int, int, int, DiscrepancyRecord]]:
    ad = _ad_values(p)
    # off the controller's domain: closed forms that extend continuously
    # across the pole set are not counted as disagreements
    pole = _on_singular_set(p)
    out = []
    fids = list(FormulaId)
    vorder = list(Variant)
    for fi, fid in enumerate(fids):
        if not cf.applicable(fid, p.n, p.a, p.b):
            continue
        for variant in cf.variants(fid):
            try:
                values = cf.eval_formula(fid, variant, p.S, p.n, p.f, p.a, p.b)
            except FormulaSingular:
                values = None
            comps = list(values) if values is not None else _components(fid)
            for ci, comp in enumerate(comps):
                paper = None if values is None else float(values[comp])
                adv = ad.get((fid, comp))
                rel, verdict = compare(paper, adv, fid in CURVATURE_IDS)
                if pole and adv is None:
                    verdict = "BothSingular"
                name = fid.value if comp == "" else f"{fid.value}.{comp}"
                rec = DiscrepancyRecord(name, variant.value, p, _nan(paper), _nan(adv), rel, verdict)
                out.append((fi, vorder.index(variant), ci, rec))
    if cf.applicable(FormulaId.R_LIMIT_MCUR, p.n, p.a, p.b):
        try:
            rg = float(cf.eval_formula(FormulaId.R_GENERAL, Variant.AS_PRINTED, p.S, p.n, p.f, p.a, p.b)[""])
        except FormulaSingular:
            rg = None
        try:
            rm = float(cf.eval_formula(FormulaId.R_LIMIT_MCUR, Variant.AS_PRINTED, p.S, p.n, p.f)[""])
        except FormulaSingular:
            rm = None
        rel, verdict = compare(rg, rm, True)
        rec = DiscrepancyRecord(CROSS_ID, Variant.AS_PRINTED.value, p, _nan(rg), _nan(rm), rel, verdict)
        out.append((len(fids), 0, 0, rec))
    return out


def _components(fid: FormulaId) -> list[str]:
    return {
        FormulaId.LIMIT_METRIC_CONST: ["g_aa", "g_ab", "g_bb"],
        FormulaId.CHRISTOFFEL_LIMIT: ["aaa", "aab", "abb", "bbb"],
        FormulaId.MIXED_METRIC_VAR: ["g_af", "g_bf", "g_ff"],
        FormulaId.LIMIT_MIXED_VAR: ["g_af", "g_bf", "g_ff"],
    }.get(fid, [""])


def verify(points: Sequence[GridPoint], workers: int = 1) -> list[DiscrepancyRecord]:
    """One record per (formula, variant, component, point), ordered by formula
    id, then point index, then variant and component."""
    per_point = ordered_map(_records_for_point, list(points), workers)
    keyed = []
    for pi, recs in enumerate(per_point):
        for fi, vi, ci, rec in recs:
            keyed.append(((fi, pi, vi, ci), rec))
    keyed.sort(key=lambda kv: kv[0])
    return [rec for _, rec in keyed]


def ledger_csv(records: Iterable[DiscrepancyRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def read_ledger(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and tuple(rows[0]) != LEDGER_COLUMNS:
        raise ValueError("unexpected ledger columns")
    return rows


def ledger_differences(actual: list[dict], expected: list[dict], rtol: float = 1e-9) -> list[str]:
    """Human-readable differences; empty when ledgers agree.

    Keys and verdicts must agree exactly; numeric columns to ``rtol``.
    """
    key_cols = ("formula", "variant", "S", "n", "f", "a", "b")
    diffs = []
    amap = {tuple(r[c] for c in key_cols): r for r in actual}
    emap = {tuple(r[c] for c in key_cols): r for r in expected}
    for k in sorted(set(emap) - set(amap)):
        diffs.append(f"missing row {k}")
    for k in sorted(set(amap) - set(emap)):
        diffs.append(f"unexpected row {k}")
    for k in sorted(set(amap) & set(emap)):
        a, e = amap[k], emap[k]
        if a["verdict"] != e["verdict"]:
            diffs.append(f"{k}: verdict {a['verdict']} != expected {e['verdict']}")
            continue
        for col in ("paper_value", "ad_value"):
            x, y = float(a[col]), float(e[col])
            if math.isnan(x) and math.isnan(y):
                continue
            if not math.isclose(x, y, rel_tol=rtol, abs_tol=0.0):
                diffs.append(f"{k}: {col} {a[col]} != expected {e[col]}")
    return diffs


def errata_markdown(records: Sequence[DiscrepancyRecord]) -> str:
    """Summary table: per formula/variant counts of each verdict."""
    verdicts = ("Match", "SignFlippedMatch", "Mismatch", "BothSingular")
    counts: dict = {}
    worst: dict = {}
    for r in records:
        key = (r.formula, r.variant)
        counts.setdefault(key, dict.fromkeys(verdicts, 0))[r.verdict] += 1
        if r.verdict == "Mismatch" and not math.isnan(r.rel_error):
            worst[key] = max(worst.get(key, 0.0), r.rel_error)
    lines = [
        "# Closed-form errata",
        "",
        "Generated from the verification ledger; AD of the controller definition is ground truth.",
        "",
        "| formula | variant | Match | SignFlippedMatch | Mismatch | BothSingular | max rel. error (mismatch) |",
        "|---|---|---|---|---|---|---|",
    ]
    for key in counts:  # records are already ordered
        c = counts[key]
        w = worst.get(key)
        lines.append(
            f"| {key[0]} | {key[1]} | " + " | ".join(str(c[v]) for v in verdicts)
            + f" | {'' if w is None else f'{w:.3g}'} |"
        )
    return "\n".join(lines) + "\n"
