"""Exact arithmetic expressions in the family index ``n`` and the point ``x``."""

from __future__ import annotations

import re
from fractions import Fraction
from tokenize import TokenError

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication_application,
    parse_expr,
    standard_transformations,
)

N, X = sympy.symbols("n x")

_TRANSFORMS = standard_transformations + (implicit_multiplication_application, convert_xor)
_DECIMAL = re.compile(r"\d*\.\d|\d\.")
_ALLOWED = re.compile(r"^[\sxn0-9+\-*/^()]*$")


class ExprError(ValueError):
    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


def parse(text: str, allow: str = "nx") -> sympy.Expr:
    """Parse an exact rational expression; decimal literals are rejected."""
    m = _DECIMAL.search(text)
    if m:
        raise ExprError(f"decimal literal {m.group(0)!r} is not allowed; write a fraction p/q", m.start())
    if not _ALLOWED.match(text):
        bad = next(i for i, ch in enumerate(text) if not re.match(r"[\sxn0-9+\-*/^()]", ch))
        raise ExprError(f"unexpected character {text[bad]!r}", bad)
    if not text.strip():
        raise ExprError("empty expression", 0)
    try:
        expr = parse_expr(text, local_dict={"n": N, "x": X}, transformations=_TRANSFORMS, evaluate=True)
    except (SyntaxError, TypeError, sympy.SympifyError, TokenError) as exc:
        raise ExprError(f"cannot parse {text!r}: {exc}") from None
    expr = sympy.sympify(expr)
    names = {s.name for s in expr.free_symbols}
    if not names <= set(allow):
        raise ExprError(f"expression {text!r} may only use {', '.join(allow) or 'constants'}")
    if expr.has(sympy.Float):
        raise ExprError(f"decimal value in {text!r}")
    return expr


def to_fraction(value) -> Fraction:
    value = sympy.sympify(value)
    if not isinstance(value, sympy.Rational):
        value = sympy.simplify(value)
    if not isinstance(value, sympy.Rational):
        raise ExprError(f"{value} is not rational")
    return Fraction(int(value.p), int(value.q))


def at(expr: sympy.Expr, n: int) -> Fraction:
    """Evaluate an expression of ``n`` alone at an integer."""
    value = sympy.sympify(expr).subs(N, n)
    if not isinstance(value, sympy.Rational):
        value = sympy.simplify(value)
    if not isinstance(value, sympy.Rational):
        raise ExprError(f"{expr} at n={n} is not rational")
    return Fraction(int(value.p), int(value.q))


def affine_parts(expr: sympy.Expr) -> tuple[sympy.Expr, sympy.Expr]:
    """Split ``q(n) x + r(n)``; anything non-affine in ``x`` is rejected."""
    expr = sympy.expand(expr)
    poly = sympy.Poly(expr, X) if expr.has(X) else None
    if poly is None:
        return sympy.Integer(0), expr
    if poly.degree() > 1:
        raise ExprError(f"{expr} is not affine in x")
    slope = poly.coeff_monomial(X)
    intercept = poly.coeff_monomial(1)
    if slope.has(X) or intercept.has(X):
        raise ExprError(f"{expr} is not affine in x")
    return slope, intercept


def is_zero(expr: sympy.Expr) -> bool:
    return sympy.simplify(expr) == 0


def fraction_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def expr_text(expr: sympy.Expr) -> str:
    """Render in the configuration syntax (``^`` for powers)."""
    return str(expr).replace("**", "^")
