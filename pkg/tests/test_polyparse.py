from fractions import Fraction

import pytest

from src.algebra.bfv_finite import PhaseSpace
from src.algebra.graded_core import mul
from src.algebra.polyparse import parse_monomial, parse_poly
from src.utils.reliability import PolynomialSyntaxError


@pytest.fixture
def alg():
    return PhaseSpace(2, 2).algebra()


def test_rational_coefficients_and_powers(alg):
    p = parse_poly(alg, "-1/2*x2*b1*c1*c2 + p1^2")
    x2, b1, c1, c2, p1 = (alg.var(n) for n in ("x2", "b1", "c1", "c2", "p1"))
    assert p == mul(mul(mul(x2, b1), c1), c2) * Fraction(-1, 2) + mul(p1, p1)
    assert parse_poly(alg, "p1**2") == mul(p1, p1)


def test_written_order_of_odd_factors(alg):
    c1, c2 = alg.var("c1"), alg.var("c2")
    assert parse_poly(alg, "c2*c1") == -mul(c1, c2)
    assert parse_poly(alg, "c1*c2 + c2*c1").is_zero()
    assert parse_poly(alg, "c1^2").is_zero()


def test_printer_output_parses_back(alg):
    p = parse_poly(alg, "3*x1*p2 - 1/2*b2*c1*c2 + 7")
    assert parse_poly(alg, str(p)) == p


@pytest.mark.parametrize("text", ["", "x3*p1", "1.5*x1", "x1**-1", "x1 +* p1", "sin(x1)"])
def test_rejected_inputs(alg, text):
    with pytest.raises(PolynomialSyntaxError):
        parse_poly(alg, text)


def test_parse_monomial_requires_single_term(alg):
    assert parse_monomial(alg, "2*x1*p1") == mul(alg.var("x1"), alg.var("p1")) * 2
    with pytest.raises(PolynomialSyntaxError):
        parse_monomial(alg, "x1 + p1")
