import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weingarten import psiexpr
from weingarten.psiexpr import PsiDomainError, PsiNameError, PsiSyntaxError


@pytest.mark.parametrize("src,expected", [
    ("1 + 2*3", 7.0),
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("(1+2)*(3-1)/4", 1.5),
    ("pow(2, 10)", 1024.0),
    ("sin(pi/2) + cos(0)", 2.0),
    ("exp(log(3))", 3.0),
    ("1e-3 * 1000", 1.0),
    (".5 + 1.", 1.5),
    ("--3", 3.0),
    ("cot(pi/4)", 1.0),
])
def test_constant_expressions(src, expected):
    assert psiexpr.parse(src).evaluate() == pytest.approx(expected, rel=1e-15)


def test_variables_and_vectorization():
    spec = psiexpr.parse("t^2 * (1 + 0.5*sin(x1)*cos(x2)) - nu_t")
    assert spec.free_vars == {"t", "x1", "x2", "nu_t"}
    t = np.linspace(0.1, 1, 5)
    out = spec.evaluate(t=t, x1=0.3, x2=np.zeros(5), nu_t=-1.0)
    np.testing.assert_allclose(out, t ** 2 * (1 + 0.5 * np.sin(0.3)) + 1.0)


def test_syntax_error_reports_position():
    with pytest.raises(PsiSyntaxError) as exc:
        psiexpr.parse("sin(t) + * 2")
    assert exc.value.pos == 9
    lines = exc.value.caret().splitlines()
    assert lines[0] == "sin(t) + * 2"
    assert lines[1].index("^") == 9


@pytest.mark.parametrize("src", ["", "1 +", "(t", "sin t", "t 2", "3 $ 4", "pow(1)", "sin(1, 2)"])
def test_malformed(src):
    with pytest.raises((PsiSyntaxError, PsiNameError)):
        psiexpr.parse(src)


def test_unknown_names():
    with pytest.raises(PsiNameError):
        psiexpr.parse("foo(t)")
    with pytest.raises(PsiNameError):
        psiexpr.parse("y + 1")
    with pytest.raises(PsiNameError):
        psiexpr.parse("t + x1").evaluate(t=1.0)


def test_domain_error():
    with pytest.raises(PsiDomainError):
        psiexpr.parse("log(t)").evaluate(t=-1.0)
    with pytest.raises(PsiDomainError):
        psiexpr.parse("1/t").evaluate(t=0.0)


def test_partials_match_analytic():
    spec = psiexpr.parse("exp(-t) * sin(t) * (1 + x1^2)")
    b = {"t": 0.7, "x1": 0.4}
    d = psiexpr.partial(spec, "t", b)
    ref = math.exp(-0.7) * (math.cos(0.7) - math.sin(0.7)) * 1.16
    assert d == pytest.approx(ref, rel=1e-9)
    d2 = psiexpr.second_partial(spec, "t", b)
    assert d2 == pytest.approx(-2 * math.exp(-0.7) * math.cos(0.7) * 1.16, rel=1e-6)
    assert psiexpr.partial(spec, "nu_t", b) == 0.0


def test_round_trip_source():
    for src in ["1 + 2*t", "-(t^2)", "sin(x1)*cos(x2)/(1 + t)", "2^-1", "-2^2"]:
        spec = psiexpr.parse(src)
        again = psiexpr.parse(spec.to_source())
        assert again.evaluate(t=0.3, x1=0.2, x2=1.1) == pytest.approx(spec.evaluate(t=0.3, x1=0.2, x2=1.1))


small = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 3))


@settings(max_examples=200, deadline=None)
@given(small, small, small)
def test_arithmetic_matches_python(a, b, c):
    src = f"({a}) + ({b}) * ({c}) - ({a}) * ({c})"
    assert psiexpr.parse(src).evaluate() == pytest.approx(a + b * c - a * c, abs=1e-12)
