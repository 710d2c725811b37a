import math
from collections import Counter

import pytest

from ctrlgeom.verify import (
    CROSS_ID,
    GridPoint,
    compare,
    default_grid,
    errata_markdown,
    grid_from_json,
    ledger_csv,
    ledger_differences,
    read_ledger,
    verify,
)
from ctrlgeom.cli import expected_ledger_text

REF = GridPoint(1.0, 1, 1.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def ref_records():
    return {(r.formula, r.variant): r for r in verify([REF])}


@pytest.fixture(scope="module")
def default_records():
    return verify(default_grid())


def test_corconst_gaa_printed_is_flagged(ref_records):
    r = ref_records[("CORCONST_GAA", "AsPrinted")]
    assert (r.paper_value, r.ad_value) == (28.0, 20.0)
    assert r.rel_error == pytest.approx(0.4, abs=1e-6)
    assert r.verdict == "Mismatch"
    assert ref_records[("CORCONST_GAA", "Corrected")].verdict == "Match"


def test_reference_point_matches(ref_records):
    for key in [("DET2_CONST", "AsPrinted"), ("LIMIT_DET_CONST", "AsPrinted"), ("LIMIT_DET3_VAR", "AsPrinted"),
                ("DET3_N1", "AsPrinted"), ("CHRISTOFFEL_LIMIT.aaa", "AsPrinted"),
                ("LIMIT_MIXED_VAR.g_ff", "AsPrinted"), ("LIMIT_METRIC_CONST.g_ab", "AsPrinted"),
                ("R_LIMIT_MCUR", "AsPrinted"), ("R_GENERAL", "Corrected")]:
        assert ref_records[key].verdict == "Match", key
    assert ref_records[("LIMIT_METRIC_CONST.g_aa", "AsPrinted")].verdict == "Mismatch"


def test_curvature_self_inconsistency_recorded(ref_records):
    cross = ref_records[(CROSS_ID, "AsPrinted")]
    assert cross.paper_value == pytest.approx(-17 / 12, rel=1e-12)
    assert cross.ad_value == pytest.approx(-53 / 36, rel=1e-12)
    assert cross.rel_error == pytest.approx(2 / 53, rel=1e-9)
    assert cross.verdict == "Mismatch"
    rg = ref_records[("R_GENERAL", "AsPrinted")]
    assert rg.verdict in ("Match", "SignFlippedMatch", "Mismatch")
    assert rg.ad_value == pytest.approx(-53 / 36, rel=1e-9)


def test_compare_rules():
    assert compare(1.0, 1.0, False) == (0.0, "Match")
    assert compare(-2.0, 2.0, True)[1] == "SignFlippedMatch"
    assert compare(-2.0, 2.0, False)[1] == "Mismatch"
    rel, verdict = compare(None, None, False)
    assert math.isnan(rel) and verdict == "BothSingular"
    assert compare(None, 1.0, False)[1] == "Mismatch"


def test_default_grid_verdict_summary(default_records):
    by = Counter((r.formula.split(".")[0], r.variant, r.verdict) for r in default_records)
    families = {(r.formula.split(".")[0], r.variant) for r in default_records}
    # every determinant, Christoffel and mixed component matches in some variant
    for fam in ("DET2_CONST", "LIMIT_DET_CONST", "LIMIT_DET3_VAR", "DET3_N1", "CHRISTOFFEL_LIMIT",
                "MIXED_METRIC_VAR", "LIMIT_MIXED_VAR"):
        rows = [r for r in default_records if r.formula.split(".")[0] == fam and r.variant == "AsPrinted"]
        assert rows and all(r.verdict in ("Match", "BothSingular") for r in rows), fam
    assert by[("CORCONST_GAA", "AsPrinted", "Match")] == 0
    assert ("CORCONST_GAA", "Corrected") in families
    gaa = [r for r in default_records if r.formula == "LIMIT_METRIC_CONST.g_aa" and r.variant == "AsPrinted"]
    assert gaa and all(r.verdict == "Mismatch" for r in gaa)
    for comp in ("g_ab", "g_bb"):
        rows = [r for r in default_records if r.formula == f"LIMIT_METRIC_CONST.{comp}"]
        assert all(r.verdict == "Match" for r in rows)


def test_ledger_is_deterministic_and_worker_independent(default_records):
    text = ledger_csv(default_records)
    assert ledger_csv(verify(default_grid())) == text
    assert ledger_csv(verify(default_grid(), workers=3)) == text


def test_ledger_matches_committed_expectation(default_records):
    actual = read_ledger(ledger_csv(default_records))
    expected = read_ledger(expected_ledger_text())
    assert ledger_differences(actual, expected) == []


def test_ledger_differences_detects_changes():
    rows = read_ledger(ledger_csv(verify([REF])))
    changed = [dict(r) for r in rows]
    changed[0]["verdict"] = "Match" if rows[0]["verdict"] != "Match" else "Mismatch"
    assert len(ledger_differences(changed, rows)) == 1
    assert any("missing row" in d for d in ledger_differences(rows[1:], rows))
    bumped = [dict(r) for r in rows]
    bumped[1]["ad_value"] = repr(float(rows[1]["ad_value"]) * (1 + 1e-6))
    assert len(ledger_differences(bumped, rows)) == 1


def test_read_ledger_rejects_wrong_columns():
    with pytest.raises(ValueError):
        read_ledger("x,y\n1,2\n")


def test_ledger_row_ordering(default_records):
    order = [r.formula.split(".")[0] for r in default_records]
    seen = []
    for name in order:
        if not seen or seen[-1] != name:
            assert name not in seen, f"{name} rows are not contiguous"
            seen.append(name)
    assert seen[-1] == CROSS_ID


def test_grid_from_json():
    pts = grid_from_json({"S": [1.0], "n": [1, 2], "f": [1.0], "a": [0.0], "b": [0.0, 0.1]})
    assert len(pts) == 4 and pts[0] == REF
    pts = grid_from_json({"points": [{"S": 1, "n": 1, "f": 1, "a": 0, "b": 0}]})
    assert pts == [REF]


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"S": [1.0], "n": [1]},
        {"bogus": 1, "points": []},
        {"schema_version": 2, "points": [{"S": 1, "n": 1, "f": 1, "a": 0, "b": 0}]},
        {"points": [{"S": 1, "n": 0, "f": 1, "a": 0, "b": 0}]},
        {"points": [{"S": 0, "n": 1, "f": 1, "a": 0, "b": 0}]},
        {"points": [{"S": 1, "n": 1, "f": float("inf"), "a": 0, "b": 0}]},
        {"points": [{"S": 1, "n": 1, "f": 1, "a": 0}]},
    ],
)
def test_grid_from_json_errors(data):
    with pytest.raises(ValueError):
        grid_from_json(data)


def test_pole_points_are_both_singular():
    recs = verify([GridPoint(1.0, 1, 0.0, 0.0, 0.0)])
    assert recs
    for r in recs:
        if math.isnan(r.ad_value) and r.formula != CROSS_ID:
            assert r.verdict == "BothSingular", r.formula


def test_errata_markdown(default_records):
    md = errata_markdown(default_records)
    assert md.startswith("# Closed-form errata")
    assert "| CORCONST_GAA | AsPrinted |" in md
    assert md.count("\n| ") >= 20
