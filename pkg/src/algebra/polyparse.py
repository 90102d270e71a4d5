"""Polynomial strings from model files -> GradedPoly (parsed with sympy)."""

from fractions import Fraction

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from src.algebra.graded_core import GradedAlgebra, GradedPoly, mul
from src.utils.reliability import PolynomialSyntaxError

TRANSFORMATIONS = standard_transformations + (convert_xor,)


def _symbols(algebra: GradedAlgebra):
    # odd generators are non-commutative so sympy keeps their written order
    return {g.name: sympy.Symbol(g.name, commutative=(g.parity == 0)) for g in algebra.generators}


def parse_poly(algebra: GradedAlgebra, text: str) -> GradedPoly:
    """Parse e.g. ``"-1/2*x2*b1*c1*c2 + p1^2"``; products keep the written order."""
    if not isinstance(text, str) or not text.strip():
        raise PolynomialSyntaxError(str(text), "empty expression")
    try:
        expr = parse_expr(text, local_dict=_symbols(algebra), transformations=TRANSFORMATIONS)
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise PolynomialSyntaxError(text, str(e))
    return _to_poly(algebra, expr, text)


def _to_poly(algebra: GradedAlgebra, node, text: str) -> GradedPoly:
    if node.is_Number:
        if not node.is_Rational:
            raise PolynomialSyntaxError(text, f"non-rational coefficient {node}")
        return algebra.const(Fraction(int(node.p), int(node.q)))
    if node.is_Symbol:
        if node.name not in algebra:
            raise PolynomialSyntaxError(text, f"unknown generator {node.name}")
        return algebra.var(node.name)
    if node.is_Add:
        out = algebra.zero()
        for arg in node.args:
            out = out + _to_poly(algebra, arg, text)
        return out
    if node.is_Mul:
        out = algebra.one()
        for arg in node.args:
            out = mul(out, _to_poly(algebra, arg, text))
        return out
    if node.is_Pow:
        base, exp = node.args
        if not (exp.is_Integer and int(exp) >= 0):
            raise PolynomialSyntaxError(text, f"exponent {exp} is not a non-negative integer")
        factor = _to_poly(algebra, base, text)
        out = algebra.one()
        for _ in range(int(exp)):
            out = mul(out, factor)
        return out
    raise PolynomialSyntaxError(text, f"unsupported construct {node.func.__name__}")


def parse_monomial(algebra: GradedAlgebra, text: str) -> GradedPoly:
    p = parse_poly(algebra, text)
    if len(p.terms) != 1:
        raise PolynomialSyntaxError(text, "expected a single monomial")
    return p
