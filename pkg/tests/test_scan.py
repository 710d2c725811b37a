import json
import math
import time

import pytest

from ctrlgeom.controller import ControllerSpec
from ctrlgeom.figures import load_job
from ctrlgeom.scan import (
    Axis,
    InvalidJob,
    NoSignChange,
    ScanJob,
    SingularInBracket,
    bisect_boundary,
    bisect_sign_change,
    divergence_probe,
    run_scan,
)

VAR = ControllerSpec(S=1.0, n=1, mode="variable", f=1.0)
CONST = ControllerSpec(S=1.0, n=1, mode="constant", f=1.0)


def _job(spec, axes, quantities=("det",), **kw):
    kw.setdefault("fixed", {"a": 0.0, "b": 0.0})
    return ScanJob(spec=spec, axes=tuple(axes), quantities=tuple(quantities), **kw)


@pytest.fixture(scope="module")
def fig3():
    return run_scan(load_job(3))


@pytest.fixture(scope="module")
def fig6():
    return run_scan(load_job(6))


# -- grid layout -----------------------------------------------------------------------


def test_row_major_ordering_and_count():
    job = _job(VAR, [Axis("f", 0.5, 1.5, 3), Axis("S", 1.0, 2.0, 2)])
    res = run_scan(job)
    assert len(res.records) == 6 and res.shape == (3, 2)
    assert [r.coords for r in res.records] == [
        (0.5, 1.0), (0.5, 2.0), (1.0, 1.0), (1.0, 2.0), (1.5, 1.0), (1.5, 2.0)]
    header = res.to_csv().splitlines()[0]
    assert header == "f,S,det,class,singular_distance"


def test_axis_endpoints_are_exact():
    vals = Axis("f", -3.0, 3.0, 601).values()
    assert vals[0] == -3.0 and vals[-1] == 3.0 and vals[300] == 0.0
    assert vals[290] == pytest.approx(-0.1, abs=1e-15)


def test_minors_expand_to_columns():
    job = _job(VAR, [Axis("f", 0.5, 1.0, 2)], ("minors", "value"))
    assert job.columns == ["f", "p1", "p2", "p3", "value"]
    rec = run_scan(job).records[1]
    assert rec.values["p3"] == -18.0 and rec.values["p1"] == 20.0 and rec.values["value"] == 1.0


# -- figures ---------------------------------------------------------------------------


def test_fig3_det_negative_and_growing_at_pole(fig3):
    # f = -2 has (x+1)^2 = 0: det vanishes exactly and the metric is Singular
    (deg,) = [r for r in fig3.records if r.coords[0] == -2.0]
    assert deg.values["det"] == 0.0 and deg.classification.value == "Singular"
    regular = [(r.coords[0], r.values["det"]) for r in fig3.records
               if r.values["det"] is not None and r.classification.value != "Singular"]
    assert len(regular) == 599
    assert all(d < 0 for _, d in regular)
    near = {round(f, 6): d for f, d in regular if abs(abs(f) - 0.1) < 1e-9}
    assert set(near) == {-0.1, 0.1}
    assert all(abs(d) > 1e3 for d in near.values())
    far = max(abs(d) for f, d in regular if abs(f) > 2.5)
    assert min(abs(d) for d in near.values()) > 100 * far
    assert all(r.classification.value != "Stable" for r in fig3.records)


def test_fig6_det_sign_flips_at_pole(fig6):
    pos = neg = 0
    for r in fig6.records:
        f, d = r.coords[0], r.values["det"]
        if d is None or r.classification.value == "Singular":
            continue
        if -0.7 < f < 0:
            assert d > 0
            pos += 1
        elif f > 0:
            assert d < 0
            neg += 1
    assert pos > 50 and neg > 250
    kinds = {(round(b.location, 8), b.kind) for b in fig6.boundaries}
    assert (0.0, "SingularInBracket") in kinds
    assert any(abs(d.location) < 0.02 for d in fig6.divergences)


def test_fig6_boundaries_inside_brackets(fig6):
    assert fig6.boundaries
    for b in fig6.boundaries:
        assert b.lo <= b.location <= b.hi


def test_fig7_divergence_flag_near_minus_two():
    res = run_scan(load_job(7))
    assert any(abs(d.location + 2.0) < 0.02 for d in res.divergences if d.quantity == "R_mcur")
    r = [x for x in res.records if abs(x.coords[0] + 1.8) < 1e-9][0]
    assert r.values["scalar_R"] == pytest.approx(r.values["R_mcur"], rel=1e-8)


# -- determinism --------------------------------------------------------------------------


def test_byte_identical_across_worker_counts():
    job = _job(VAR, [Axis("f", -3.0, 3.0, 121), Axis("S", 0.5, 2.0, 11)], ("det", "scalar_R", "minors"),
               refine_boundaries=True)
    one = run_scan(job, workers=1)
    csv1, b1 = one.to_csv(), one.boundaries_json()
    for w in (2, 8):
        other = run_scan(job, workers=w)
        assert other.to_csv() == csv1
        assert other.boundaries_json() == b1


def test_job_json_round_trip():
    job = load_job(4)
    again = ScanJob.from_json(json.loads(json.dumps(job.to_json())))
    assert again == job


# -- validation ------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "data",
    [
        {"axes": []},
        {"axes": [{"name": "q", "min": 0, "max": 1, "steps": 3}]},
        {"axes": [{"name": "f", "min": 1, "max": 0, "steps": 3}]},
        {"axes": [{"name": "f", "min": 0, "max": 1, "steps": 1}]},
        {"axes": [{"name": "f", "min": 0, "max": float("inf"), "steps": 3}]},
        {"axes": [{"name": "f", "min": 0, "max": 1, "steps": 3}], "quantities": ["bogus"]},
        {"axes": [{"name": "f", "min": 0, "max": 1, "steps": 3}], "extra": 1},
        {"axes": [{"name": "S", "min": -1, "max": 1, "steps": 3}]},
        {"axes": [{"name": "f", "min": 0, "max": 1, "steps": 3}] * 2},
        {"axes": [{"name": n, "min": 0.1, "max": 1, "steps": 2} for n in "abfS"]},
        {"axes": [{"name": "f", "min": 0, "max": 1, "steps": 3}], "quantities": ["R_mcur"]},
        {"spec": {"mode": "variable"}, "axes": [{"name": "f", "min": 0.1, "max": 1, "steps": 3}],
         "quantities": ["flat_cert"]},
        {"schema_version": 9, "axes": [{"name": "f", "min": 0, "max": 1, "steps": 3}]},
    ],
)
def test_invalid_jobs(data):
    with pytest.raises(InvalidJob):
        ScanJob.from_json(data)


def test_singular_cells_are_records_not_errors():
    res = run_scan(_job(VAR, [Axis("f", -1.0, 1.0, 3)], ("det", "scalar_R")))
    mid = res.records[1]
    assert mid.classification.value == "Singular"
    assert mid.values == {"det": None, "scalar_R": None}
    assert ",,," in res.to_csv().splitlines()[2]


# -- bisection ------------------------------------------------------------------------------


def test_bisect_polynomial_root():
    loc, kind = bisect_sign_change(lambda f: f * (1 + f), -1.5, -0.5)
    assert loc == pytest.approx(-1.0, abs=1e-10) and kind == "Root"


def test_bisect_variable_det_hits_pole():
    job = _job(VAR, [Axis("f", -0.5, 0.5, 3)])
    with pytest.raises(SingularInBracket) as exc:
        bisect_boundary(job, "det", "f", -0.5, 0.5)
    assert exc.value.location == 0.0


def test_bisect_reports_pole_when_bracket_avoids_exact_singularity():
    job = _job(VAR, [Axis("f", -0.5, 0.7, 3)])
    loc, kind = bisect_boundary(job, "det", "f", -0.5, 0.7)
    assert abs(loc) < 1e-9 and kind == "SignChangeAtPole"


def test_bisect_constant_det_no_sign_change():
    job = _job(CONST, [Axis("f", 0.5, 3.0, 3)])
    with pytest.raises(NoSignChange):
        bisect_boundary(job, "det", "f", 0.5, 3.0)


# -- probes --------------------------------------------------------------------------------


def test_mcur_divergence_at_minus_two():
    prof = divergence_probe(VAR, {"f": -2.0}, {"f": 1.0}, "R_mcur")
    assert prof.monotone_increasing
    assert prof.magnitudes[2] > 1e6
    assert prof.values[2] == pytest.approx(-2e6, rel=0.01)


def test_ad_curvature_divergence_at_minus_two():
    prof = divergence_probe(VAR, {"f": -2.0}, {"f": 1.0}, "scalar_R", exponents=(1, 2, 3))
    assert prof.monotone_increasing and prof.magnitudes[-1] > 1e6


def test_constant_mode_curvature_stays_flat():
    prof = divergence_probe(CONST, {"f": 1.0, "a": 0.1}, {"b": 1.0}, "scalar_R", exponents=(1, 2, 3, 4, 6))
    assert all(m < 1e-8 for m in prof.magnitudes)


def test_variable_det_growth_matches_leading_order():
    prof = divergence_probe(VAR, {"f": 0.0}, {"f": 1.0}, "det", exponents=(2, 3, 4))
    for d, v in zip(prof.distances, prof.values):
        ratio = abs(v) / (8 / d**7)
        assert 0.5 < ratio < 2


# -- performance ------------------------------------------------------------------------------


def test_600_cell_scan_with_all_quantities_is_fast():
    job = _job(CONST, [Axis("f", -3.0, 3.0, 600)], ("value", "det", "minors", "scalar_R", "flat_cert"))
    t0 = time.perf_counter()
    res = run_scan(job)
    assert time.perf_counter() - t0 < 5.0
    assert len(res.records) == 600
    assert all(not math.isnan(r.singular_distance) for r in res.records)
