"""Reference closed-form expressions for the controller geometry.

Every evaluator is written with plain arithmetic so it accepts floats,
``fractions.Fraction`` (exact checks) or sympy symbols (polynomial
expansion).  Three variants exist:

``AsPrinted``
    verbatim transcription, typos included;
``Compact``
    the closed binomial form in ``u = S - a``, ``v = S + b``,
    ``x = (1 + f S)^n``, with ``(S - b)`` denominators read as ``(S + b)``;
    only provided where it differs from the printed form;
``Corrected``
    derived fixes that reconcile a printed formula with the exact Hessian
    geometry (g_aa numerator, limiting metric S-powers, weight w_1).

Notation inside evaluators: ``y = 1 + f S``, ``x = y^n``.
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction
from numbers import Real
from typing import Callable

from .jet import EPS_DEN


class FormulaSingular(ZeroDivisionError):
    pass


class VariantUnavailable(KeyError):
    pass


class FormulaId(str, Enum):
    CORCONST_GAA = "CORCONST_GAA"
    CORCONST_GAB = "CORCONST_GAB"
    CORCONST_GBB = "CORCONST_GBB"
    DET2_CONST = "DET2_CONST"
    LIMIT_METRIC_CONST = "LIMIT_METRIC_CONST"
    LIMIT_DET_CONST = "LIMIT_DET_CONST"
    CHRISTOFFEL_LIMIT = "CHRISTOFFEL_LIMIT"
    MIXED_METRIC_VAR = "MIXED_METRIC_VAR"
    P2_VAR = "P2_VAR"
    DET3_VAR = "DET3_VAR"
    G1_POLY = "G1_POLY"
    R_GENERAL = "R_GENERAL"
    R_LIMIT_MCUR = "R_LIMIT_MCUR"
    LIMIT_MIXED_VAR = "LIMIT_MIXED_VAR"
    LIMIT_DET3_VAR = "LIMIT_DET3_VAR"
    DET3_N1 = "DET3_N1"


class Variant(str, Enum):
    AS_PRINTED = "AsPrinted"
    COMPACT = "Compact"
    CORRECTED = "Corrected"


def _den(x):
    """Guard a denominator; symbolic values pass through."""
    if isinstance(x, (Fraction, int)):
        if x == 0:
            raise FormulaSingular("vanishing denominator")
    elif isinstance(x, Real):
        if abs(x) <= EPS_DEN:
            raise FormulaSingular(f"vanishing denominator ({x!r})")
    return x


# -- sub-polynomials: m_i (leading 2x2 minor) --------------------------------


def m0_printed(S, a, b):
    return (S**8 + 8*b*S**7 + 28*b**2*S**6 + 56*b**3*S**5 + 70*b**4*S**4
            + 56*b**5*S**3 + 28*b**6*S**2 + 8*b**7*S + b**8)


def m1_printed(S, a, b):
    return (-2*S**8 + 8*(a - b)*S**7 - 4*(3*b**2 + 3*a**2 - 8*a*b)*S**6
            + 8*(a**3 - b**3 + 6*a*b**2 - 6*a**2*b)*S**5
            - 2*(a**4 + b**4 + 36*a**2*b**2 - 16*a**3*b - 16*b**3*a)*S**4
            + 8*(6*a**3*b**2 - 6*b**3*a**2 - a**4*b + b**4*a)*S**3
            - 4*(3*a**4*b**2 + 3*b**4*a**2 - 8*b**3*a**3)*S**2
            - 8*b**3*a**3*(a - b)*S - 2*b**4*a**4)


def m2_printed(S, a, b):
    return (S**8 - 8*a*S**7 + 28*a**2*S**6 - 56*a**3*S**5 + 70*a**4*S**4
            - 56*a**5*S**3 + 28*a**6*S**2 - 8*a**7*S + a**8)


def m0_compact(S, a, b):
    return (S + b)**8


def m1_compact(S, a, b):
    return -2*(S - a)**4*(S + b)**4


def m2_compact(S, a, b):
    return (S - a)**8


# -- sub-polynomials: h_k (3x3 determinant numerator) -------------------------


def h1_printed(S, a, b, n=1):
    return S**6 + 20*S**3*b**3 + 6*S**5*b + 15*S**2*b**4 + 15*S**4*b**2 + 6*b**5*S + b**6


def h2_printed(S, a, b, n=1):
    return (S**6 - 2*S**5*a + 4*S**5*b - 8*S**4*a*b + 6*S**4*b**2 + S**4*a**2
            + 4*S**3*a**2*b - 12*S**3*a*b**2 + 4*S**3*b**3 + 6*S**2*a**2*b**2
            + S**2*b**4 - 8*S**2*a*b**3 + 4*S*a**2*b**3 - 2*S*a*b**4 + a**2*b**4)


def h3_printed(S, a, b, n=1):
    return (S**6 - 4*a*S**5 + 2*S**5*b + 6*a**2*S**4 + S**4*b**2 - 8*a*S**4*b
            - 4*a**3*S**3 + 12*a**2*S**3*b - 4*a*S**3*b**2 + a**4*S**2
            - 8*a**3*S**2*b + 6*a**2*S**2*b**2 - 4*a**3*S*b**2 + 2*a**4*S*b + a**4*b**2)


def h4_printed(S, a, b, n=1):
    # the stray factor n on the a^4 S^2 term is part of the printed form
    return S**6 - 6*a*S**5 + 15*a**2*S**4 - 20*a**3*S**3 + 15*a**4*n*S**2 - 6*S*a**5 + a**6


def h1_compact(S, a, b, n=1):
    return (S + b)**6


def h2_compact(S, a, b, n=1):
    return (S - a)**2*(S + b)**4


def h3_compact(S, a, b, n=1):
    return (S - a)**4*(S + b)**2


def h4_compact(S, a, b, n=1):
    return (S - a)**6


# -- sub-polynomials: r_k (general scalar curvature numerator) ----------------


def r0_printed(S, a, b):
    # printed coefficient 210 on b^7 S^3 (binomial value is 120)
    return (S**10 + 10*S**9*b + 45*S**8*b**2 + 120*S**7*b**3 + 210*S**6*b**4
            + 252*b**5*S**5 + 210*b**6*S**4 + 210*b**7*S**3 + 45*b**8*S**2
            + 10*b**9*S + b**10)


def r1_printed(S, a, b):
    return (-S**10 + 2*(a - 4*b)*S**9 + (16*a*b - 28*b**2 - a**2)*S**8
            + 8*(7*a*b**2 - 7*b**3 - a**2*b)*S**7
            + 14*(8*a*b**3 - 5*b**4 - 2*a**2*b**2)*S**6
            + 28*(5*a*b**4 - 2*b**5 - 2*a**2*b**3)*S**5
            + 14*(8*a*b**5 - 2*b**6 - 5*a**2*b**4)*S**4
            + 8*(7*a*b**6 - b**7 - 7*a**2*b**5)*S**3
            + (16*a*b**7 - b**8 - 28*a**2*b**6)*S**2
            + 2*a*b*(b**7 - 4*a*b**6)*S - a**2*b**8)


def r2_printed(S, a, b):
    return (-S**10 + (4*a - 6*b)*S**9 + (24*a*b - 15*b**2 - 6*a**2)*S**8
            + (60*a*b**2 - 36*a**2*b - 20*b**3 + 4*a**3)*S**7
            + (80*a*b**3 - 15*b**4 + 24*a**3*b - 90*a**2*b**2 - a**4)*S**6
            + (60*a**3*b**2 - 120*a**2*b**3 + 60*a*b**4 - 6*a**4*b - 6*b**5)*S**5
            + (80*a**3*b**3 - b**6 - 90*a**2*b**4 + 24*a*b**5 - 15*a**4*b**2)*S**4
            + (60*a**3*b**4 + 4*a*b**6 - 20*a**4*b**3 - 36*a**2*b**5)*S**3
            + (24*a**3*b**5 - 6*a**2*b**6 - 15*a**4*b**4)*S**2
            + (4*a**3*b**6 - 6*a**4*b**5)*S - a**4*b**6)


def r3_printed(S, a, b):
    return (S**10 + (4*b - 6*a)*S**9 + (6*b**2 + 15*a**2 - 24*a*b)*S**8
            + (4*b**3 - 20*a**3 + 60*a**2*b - 36*a*b**2)*S**7
            + (b**4 - 80*a**3*b + 90*a**2*b**2 + 15*a**4 - 24*a*b**3)*S**6
            + (60*a**4*b - 6*a**5 - 120*a**3*b**2 + 60*a**2*b**3 - 6*a*b**4)*S**5
            + (a**6 - 24*a**5*b - 80*a**3*b**3 + 90*a**4*b**2 + 15*a**2*b**4)*S**4
            + (4*a**6*b - 20*a**3*b**4 + 60*a**4*b**3 - 36*a**5*b**2)*S**3
            + (6*a**6*b**2 - 24*a**5*b**3 + 15*a**4*b**4)*S**2
            + (4*a**6*b**3 - 6*a**5*b**4)*S + a**6*b**4)


def r4_printed(S, a, b):
    return (S**10 + (2*b - 8*a)*S**9 + (b**2 - 16*a*b + 28*a**2)*S**8
            + (56*a**2*b - 56*a**3 - 8*a*b**2)*S**7
            + (70*a**4 + 28*a**2*b**2 - 112*a**3*b)*S**6
            + (140*a**4*b - 56*a**3*b**2 - 56*a**5)*S**5
            + (28*a**6 - 112*a**5*b + 70*a**4*b**2)*S**4
            + (56*a**6*b - 56*a**5*b**2 - 8*a**7)*S**3
            + (a**8 - 16*a**7*b + 28*a**6*b**2)*S**2
            + (2*a**8*b - 8*a**7*b**2)*S + a**8*b**2)


def r5_printed(S, a, b):
    return (S**10 - 10*a*S**9 + 45*a**2*S**8 - 120*a**3*S**7 + 210*a**4*S**6
            - 252*a**5*S**5 + 210*a**6*S**4 - 120*a**7*S**3 + 45*a**8*S**2
            - 10*a**9*S + a**10)


_R_SIGNS = (1, -1, -1, 1, 1, 1)


def r_compact(k: int, S, a, b):
    return _R_SIGNS[k]*(S - a)**(2*k)*(S + b)**(10 - 2*k)


R_PRINTED = (r0_printed, r1_printed, r2_printed, r3_printed, r4_printed, r5_printed)
M_PRINTED = (m0_printed, m1_printed, m2_printed)
M_COMPACT = (m0_compact, m1_compact, m2_compact)
H_PRINTED = (h1_printed, h2_printed, h3_printed, h4_printed)
H_COMPACT = (h1_compact, h2_compact, h3_compact, h4_compact)


def D_printed(S, a, b, f, n):
    y = 1 + f*S
    return ((n - 1)*(S**4 + 4*S**3*b + 6*S**2*b**2 + 4*S*b**3 + b**4)
            + y**n*(2*n*S**4 + 4*n*(b - a)*S**3 + 2*n*(b**2 - 4*a*b + a**2)*S**2
                    + 4*n*a*b*(a - b)*S + 2*n*a**2*b**2)
            + y**(2*n)*(n + 1)*(S**4 - 4*S**3*a + 6*S**2*a**2 - 4*S*a**3 + a**4))


def D_compact(S, a, b, f, n):
    x = (1 + f*S)**n
    u, v = S - a, S + b
    return (n - 1)*v**4 + 2*n*x*u**2*v**2 + (n + 1)*x**2*u**4


def curvature_weights(n, corrected: bool = False):
    w1 = 9*n - 9 if corrected else 9*n - 1
    return (-6*(n - 1), w1, 10*n + 16, 8*n - 18, 16*n + 18, n + 1)


def limit_curvature_coefficients(n: int):
    # n(n-1) and n(n+1) are even, so the printed halves stay integral
    return (3*n*(n - 1), 9*(n*(n - 1)//2), n*(5*n + 8), -n*(4*n - 9), -n*(8*n + 9),
            -(n*(n + 1)//2))


# -- metric components, constant mismatch ------------------------------------


def _corconst(S, n, f, a, b, variant: Variant):
    y = 1 + f*S
    x = y**n
    u, v = S - a, S + b
    wrong_b = S - b if variant is Variant.AS_PRINTED else v
    den = _den((x*u**2 - wrong_b**2)**3)
    if variant is Variant.CORRECTED:
        gaa = 2*v*u*x*(x*u**2 + 3*v**2)/den
    else:
        gaa = 2*v*u*x*(3*u**2*x + v**2)/den
    gab = (u**4*x**2 + 6*u**2*v**2*x + v**4)/den
    gbb = 2*v*u*(3*x*u**2 + v**2)/den
    return {"g_aa": gaa, "g_ab": gab, "g_bb": gbb}


def det2_const(S, n, f, a, b):
    x = (1 + f*S)**n
    u, v = S - a, S + b
    return -(x*u**2 + v**2)**2/_den((x*u**2 - v**2)**4)


def limit_metric_const(S, n, f, variant: Variant = Variant.AS_PRINTED):
    x = (1 + f*S)**n
    den = _den((x - 1)**3)
    if variant is Variant.CORRECTED:
        return {
            "g_aa": 2*(x**2 + 3*x)/(S**2*den),
            "g_ab": (x**2 + 6*x + 1)/(S**2*den),
            "g_bb": 2*(3*x + 1)/(S**2*den),
        }
    return {
        "g_aa": 6*(x**2 + 2*x)/(S**4*den),
        "g_ab": (x**2 + 6*x + 1)/(S**2*den),
        "g_bb": 2*(3*x + 1)/(S**4*den),
    }


def limit_det_const(S, n, f):
    x = (1 + f*S)**n
    return -(x**2 + 2*x + 1)/(S**4*_den((x - 1)**4))


def christoffel_limit(S, n, f):
    x = (1 + f*S)**n
    den = S**3*_den((x - 1)**4)
    return {
        "aaa": 3*(x**3 + 6*x**2 + x)/den,
        "aab": (x**3 + 14*x**2 + 9*x)/den,
        "abb": (9*x**2 + 14*x + 1)/den,
        "bbb": 3*(x**2 + 6*x + 1)/den,
    }


# -- variable mismatch -------------------------------------------------------


def mixed_metric_var(S, n, f, a, b):
    y = _den(1 + f*S)
    x = y**n
    u, v = S - a, S + b
    den = _den((x*u**2 - v**2)**3)
    return {
        "g_af": -n*S*v*u**2*y**(n - 1)*(x*u**2 + 3*v**2)/den,
        "g_bf": -n*S*u**3*y**(n - 1)*(x*u**2 + 3*v**2)/den,
        "g_ff": n*S**2*u**3*v*y**(n - 2)*((n + 1)*x*u**2 + (n - 1)*v**2)/den,
    }


def p2_var(S, n, f, a, b, variant: Variant = Variant.AS_PRINTED):
    x = (1 + f*S)**n
    u, v = S - a, S + b
    if variant is Variant.AS_PRINTED:
        m0, m1, m2 = (m(S, a, b) for m in M_PRINTED)
        return -(m0 + m1*x**2 + m2*x**4)/_den((x*u**2 - (S - b)**2)**6)
    return -(v**4 - x**2*u**4)**2/_den((x*u**2 - v**2)**6)


def g1_poly(S, n, f, a, b, variant: Variant = Variant.AS_PRINTED):
    x = (1 + f*S)**n
    hs = H_PRINTED if variant is Variant.AS_PRINTED else H_COMPACT
    h1, h2, h3, h4 = (h(S, a, b, n) for h in hs)
    return (n - 1)*h1*x + (3*n - 1)*h2*x**2 + (3*n + 1)*h3*x**3 + (n + 1)*h4*x**4


def det3_var(S, n, f, a, b, variant: Variant = Variant.AS_PRINTED):
    y = _den(1 + f*S)
    x = y**n
    u, v = S - a, S + b
    g1 = g1_poly(S, n, f, a, b, variant)
    return -(u**3*v*n*S**2)/(y**2*_den((x*u**2 - v**2)**7))*g1


def r_general(S, n, f, a, b, variant: Variant = Variant.AS_PRINTED):
    x = (1 + f*S)**n
    u, v = S - a, S + b
    w = curvature_weights(n, corrected=variant is Variant.CORRECTED)
    if variant is Variant.AS_PRINTED:
        r = [rk(S, a, b) for rk in R_PRINTED]
        D = D_printed(S, a, b, f, n)
    else:
        r = [r_compact(k, S, a, b) for k in range(6)]
        D = D_compact(S, a, b, f, n)
    num = sum(w[k]*r[k]*x**k for k in range(6))
    return -n/(2*_den(D)**2)*num/_den(v*u)


def r_limit_mcur(S, n, f):
    x = (1 + f*S)**n
    t = limit_curvature_coefficients(n)
    num = sum(t[k]*x**k for k in range(6))
    return num/_den(((n + 1)*x**2 + 2*n*x + n - 1)**2)


def limit_mixed_var(S, n, f):
    y = _den(1 + f*S)
    x = y**n
    den = _den((x - 1)**3)
    gaf = -n*(y**(2*n - 1) + 3*y**(n - 1))/den
    return {
        "g_af": gaf,
        "g_bf": -n*(y**(2*n - 1) + 3*y**(n - 1))/den,
        "g_ff": S**2*n*(y**(2*n - 2)*(n + 1) + y**(n - 2)*(n - 1))/den,
    }


def limit_det3_var(S, n, f):
    y = _den(1 + f*S)
    x = y**n
    poly = (n + 1)*x**3 + (3*n + 1)*x**2 + (3*n - 1)*x + (n - 1)
    return -n*y**(n - 2)*poly/(S**2*_den((x - 1)**7))


def det3_n1(S, f):
    y = _den(1 + f*S)
    return -2*(y**2 + 2*y**3 + y**4)/(S**2*y**2*_den((y - 1)**7))


# -- registry ------------------------------------------------------------------

# Each entry: (needs_origin, needs_n1, {variant: evaluator(S, n, f, a, b) -> {component: value}})
Evaluator = Callable[..., dict]


def _scalar(fn, *extra):
    return lambda S, n, f, a, b: {"": fn(S, n, f, a, b, *extra)}


def _corconst_component(key, variant):
    return lambda S, n, f, a, b: {"": _corconst(S, n, f, a, b, variant)[key]}


def _corconst_entry(key):
    table = {v: _corconst_component(key, v) for v in (Variant.AS_PRINTED, Variant.COMPACT)}
    if key == "g_aa":
        table[Variant.CORRECTED] = _corconst_component(key, Variant.CORRECTED)
    return table


REGISTRY: dict[FormulaId, tuple[bool, bool, dict[Variant, Evaluator]]] = {
    FormulaId.CORCONST_GAA: (False, False, _corconst_entry("g_aa")),
    FormulaId.CORCONST_GAB: (False, False, _corconst_entry("g_ab")),
    FormulaId.CORCONST_GBB: (False, False, _corconst_entry("g_bb")),
    FormulaId.DET2_CONST: (False, False, {Variant.AS_PRINTED: _scalar(det2_const)}),
    FormulaId.LIMIT_METRIC_CONST: (True, False, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: limit_metric_const(S, n, f),
        Variant.CORRECTED: lambda S, n, f, a, b: limit_metric_const(S, n, f, Variant.CORRECTED),
    }),
    FormulaId.LIMIT_DET_CONST: (True, False, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: {"": limit_det_const(S, n, f)},
    }),
    FormulaId.CHRISTOFFEL_LIMIT: (True, False, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: christoffel_limit(S, n, f),
    }),
    FormulaId.MIXED_METRIC_VAR: (False, False, {Variant.AS_PRINTED: mixed_metric_var}),
    FormulaId.P2_VAR: (False, False, {
        Variant.AS_PRINTED: _scalar(p2_var),
        Variant.COMPACT: _scalar(p2_var, Variant.COMPACT),
    }),
    FormulaId.DET3_VAR: (False, False, {
        Variant.AS_PRINTED: _scalar(det3_var),
        Variant.COMPACT: _scalar(det3_var, Variant.COMPACT),
    }),
    FormulaId.G1_POLY: (False, False, {
        Variant.AS_PRINTED: _scalar(g1_poly),
        Variant.COMPACT: _scalar(g1_poly, Variant.COMPACT),
    }),
    FormulaId.R_GENERAL: (False, False, {v: _scalar(r_general, v) for v in Variant}),
    FormulaId.R_LIMIT_MCUR: (True, False, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: {"": r_limit_mcur(S, n, f)},
    }),
    FormulaId.LIMIT_MIXED_VAR: (True, False, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: limit_mixed_var(S, n, f),
    }),
    FormulaId.LIMIT_DET3_VAR: (True, False, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: {"": limit_det3_var(S, n, f)},
    }),
    FormulaId.DET3_N1: (True, True, {
        Variant.AS_PRINTED: lambda S, n, f, a, b: {"": det3_n1(S, f)},
    }),
}


def variants(fid: FormulaId) -> tuple[Variant, ...]:
    return tuple(REGISTRY[FormulaId(fid)][2])


def applicable(fid: FormulaId, n: int, a, b) -> bool:
    needs_origin, needs_n1, _ = REGISTRY[FormulaId(fid)]
    if needs_origin and (a != 0 or b != 0):
        return False
    if needs_n1 and n != 1:
        return False
    return True


def eval_formula(fid, variant, S, n, f, a=0, b=0) -> dict:
    """Evaluate one formula; returns {component: value} ("" for scalars)."""
    fid = FormulaId(fid)
    variant = Variant(variant)
    table = REGISTRY[fid][2]
    if variant not in table:
        raise VariantUnavailable(f"{fid.value} has no {variant.value} variant")
    try:
        return table[variant](S, n, f, a, b)
    except ZeroDivisionError as exc:
        if isinstance(exc, FormulaSingular):
            raise
        raise FormulaSingular(str(exc)) from exc
