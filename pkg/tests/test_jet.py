import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrlgeom.jet import (
    DivisionBySingularJet,
    IndexOutOfOrder,
    Jet,
    JetMismatch,
    constant,
    derivative_tensor,
    extract_partial,
    layout,
    powi,
    reciprocal,
    variable,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def jets(draw, nvars=2, order=4, nonzero=False):
    size = layout(nvars, order).size
    vals = draw(st.lists(finite, min_size=size, max_size=size))
    if nonzero:
        c0 = draw(st.floats(0.5, 3)) * draw(st.sampled_from([-1, 1]))
        vals[0] = c0
    return Jet(nvars, order, vals)


def close(x: Jet, y: Jet, tol=1e-10):
    scale = max(1.0, float(np.max(np.abs(x.coeffs))), float(np.max(np.abs(y.coeffs))))
    return float(np.max(np.abs(x.coeffs - y.coeffs))) <= tol * scale


def test_layout_sizes():
    assert layout(2, 4).size == 15
    assert layout(3, 4).size == 35
    assert layout(4, 4).size == 70
    assert layout(3, 0).size == 1


def test_graded_order_starts_with_unit_vectors():
    lay = layout(3, 2)
    assert lay.indices[:4] == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_product_of_variables():
    x = variable(2.0, 0, 2, 3)
    y = variable(3.0, 1, 2, 3)
    p = x * y
    assert p.value == 6.0
    assert p.coeff((1, 0)) == 3.0
    assert p.coeff((0, 1)) == 2.0
    assert p.coeff((1, 1)) == 1.0
    assert p.coeff((2, 0)) == 0.0


def test_reciprocal_series_one_variable():
    x = variable(1.0, 0, 1, 4)
    r = 1.0 / (1.0 - (x - 1.0))  # 1/(1-t) at t=0
    assert [r.coeff((k,)) for k in range(5)] == [1.0, 1.0, 1.0, 1.0, 1.0]


def test_partials_of_known_function():
    # G = a^3 b at (1, 2): G_aab = 6a = 6, G_aaa = 6b = 12
    a = variable(1.0, 0, 2, 4)
    b = variable(2.0, 1, 2, 4)
    g = a**3 * b
    assert extract_partial(g, (2, 1)) == 6.0
    assert extract_partial(g, (3, 0)) == 12.0
    assert extract_partial(g, (3, 1)) == 6.0
    assert extract_partial(g, (0, 2)) == 0.0


def test_index_beyond_order_rejected():
    j = variable(0.0, 0, 2, 2)
    with pytest.raises(IndexOutOfOrder):
        j.coeff((2, 1))
    with pytest.raises(IndexOutOfOrder):
        extract_partial(j, (3, 0))
    with pytest.raises(IndexOutOfOrder):
        derivative_tensor(j, 3)


def test_division_by_singular_jet():
    z = variable(0.0, 0, 2, 3)
    with pytest.raises(DivisionBySingularJet):
        1.0 / z
    with pytest.raises(DivisionBySingularJet):
        reciprocal(constant(1e-13, 2, 3))


def test_shape_mismatch():
    with pytest.raises(JetMismatch):
        variable(0.0, 0, 2, 3) + variable(0.0, 0, 2, 4)


def test_jets_are_immutable():
    j = variable(1.0, 0, 2, 2)
    with pytest.raises(AttributeError):
        j.order = 3
    with pytest.raises(ValueError):
        j.coeffs[0] = 5.0


def test_variable_needs_positive_order():
    with pytest.raises(ValueError):
        variable(1.0, 0, 2, 0)


def test_derivative_tensor_symmetric():
    a = variable(0.3, 0, 3, 4)
    b = variable(-0.2, 1, 3, 4)
    c = variable(0.7, 2, 3, 4)
    g = (a * b * b + c) / (1.0 + a * a + c * b)
    t3 = derivative_tensor(g, 3)
    for perm in [(0, 2, 1), (1, 0, 2), (2, 1, 0)]:
        assert np.allclose(t3, t3.transpose(perm), rtol=0, atol=0)


def test_powi_matches_float_power_exactly():
    for k in range(0, 9):
        j = powi(variable(1.7, 0, 1, 3), k)
        assert j.value == powi(1.7, k)
    assert powi(2.0, -2) == 0.25


def test_order_zero_division_matches_float():
    x = constant(0.37, 2, 0)
    y = constant(2.9, 2, 0)
    assert (x / y).value == 0.37 / 2.9


@settings(max_examples=60, deadline=None)
@given(jets(), jets(), jets())
def test_product_associative_and_commutative(x, y, z):
    assert close((x * y) * z, x * (y * z), 1e-9)
    assert close(x * y, y * x, 1e-12)


@settings(max_examples=60, deadline=None)
@given(jets(), jets(), jets())
def test_distributive(x, y, z):
    assert close(x * (y + z), x * y + x * z, 1e-9)


@settings(max_examples=60, deadline=None)
@given(jets(), jets(nonzero=True))
def test_division_inverts_product(x, y):
    assert close((x / y) * y, x, 1e-8)
    assert close(y * reciprocal(y), constant(1.0, 2, 4), 1e-9)


@settings(max_examples=40, deadline=None)
@given(jets(nvars=3, order=3, nonzero=True), st.integers(1, 5))
def test_integer_power_is_repeated_product(x, k):
    p = constant(1.0, 3, 3)
    for _ in range(k):
        p = p * x
    assert close(x**k, p, 1e-9)
    assert close(x ** (-k) * p, constant(1.0, 3, 3), 1e-8)


# -- finite-difference oracle ---------------------------------------------------

mpmath.mp.dps = 50


def _test_function(a, b, c):
    # rational and generic: works on jets and on mpmath numbers alike
    return (a * a * b - c + 2) / (1 + a * a + b * b * c * c) + (a - b) ** 3 / (3 + c * c)


def test_jets_agree_with_high_precision_finite_differences():
    # mpmath.diff at 50 digits serves as an independent derivative oracle
    rng = np.random.default_rng(20240521)
    for _ in range(100):
        point = [float(v) for v in rng.uniform(-1.0, 1.0, size=3)]
        order = int(rng.integers(1, 4))
        j = _test_function(*(variable(point[i], i, 3, order) for i in range(3)))
        for alpha in layout(3, order).indices:
            ad = extract_partial(j, alpha)
            ref = float(mpmath.diff(_test_function, [mpmath.mpf(p) for p in point], alpha))
            assert abs(ad - ref) <= 1e-6 * max(1.0, abs(ref)), (point, alpha, ad, ref)


def test_as_dict_roundtrip():
    j = variable(0.5, 1, 2, 2) ** 2
    d = j.as_dict()
    assert d[(0, 2)] == 1.0 and d[(0, 1)] == 1.0 and math.isclose(d[(0, 0)], 0.25)


def test_extended_precision_jets():
    x = variable(0.3, 0, 2, 3, np.longdouble)
    y = variable(-0.7, 1, 2, 3, np.longdouble)
    q = (x * x + 1.0) / (x - y)
    assert q.coeffs.dtype == np.longdouble
    d = (variable(0.3, 0, 2, 3) * variable(0.3, 0, 2, 3) + 1.0) / (variable(0.3, 0, 2, 3) - variable(-0.7, 1, 2, 3))
    assert np.allclose(q.coeffs.astype(float), d.coeffs, rtol=1e-14, atol=0)
    assert derivative_tensor(q, 2).dtype == np.longdouble
