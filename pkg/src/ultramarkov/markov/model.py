"""Interval partitions and piecewise-affine branches with exact endpoints."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator

import sympy

from .expr import ExprError, N, X, affine_parts, expr_text, fraction_text


class MarkovError(ValueError):
    pass


# -- exact evaluation of sympy trees over Fractions -----------------------


def _compile(expr: sympy.Expr) -> Callable[[dict], Fraction]:
    if isinstance(expr, sympy.Rational):
        value = Fraction(int(expr.p), int(expr.q))
        return lambda env: value
    if isinstance(expr, sympy.Symbol):
        name = expr.name
        return lambda env: env[name]
    if isinstance(expr, sympy.Add):
        parts = [_compile(a) for a in expr.args]
        return lambda env: sum((p(env) for p in parts), Fraction(0))

    if isinstance(expr, sympy.Mul):
        parts = [_compile(a) for a in expr.args]

        def mul(env):
            out = Fraction(1)
            for p in parts:
                out *= p(env)
            return out

        return mul
    if isinstance(expr, sympy.Pow):
        base, exp = _compile(expr.base), _compile(expr.exp)

        def power(env):
            e = exp(env)
            if e.denominator != 1:
                raise ExprError(f"non-integer exponent in {expr}")
            return Fraction(base(env)) ** int(e)

        return power
    raise ExprError(f"unsupported expression {expr}")


@lru_cache(maxsize=None)
def compiled(expr: sympy.Expr) -> Callable[[dict], Fraction]:
    return _compile(sympy.sympify(expr))


def evaluate(expr: sympy.Expr, n: int | None = None, x: Fraction | None = None) -> Fraction:
    env = {}
    if n is not None:
        env["n"] = Fraction(n)
    if x is not None:
        env["x"] = Fraction(x)
    try:
        return compiled(expr)(env)
    except KeyError as exc:
        raise ExprError(f"{expr} needs a value for {exc.args[0]}") from None


# -- concrete data ---------------------------------------------------------


def _bracket(lo: Fraction, hi: Fraction, lo_closed: bool, hi_closed: bool) -> str:
    return ("[" if lo_closed else "(") + f"{fraction_text(lo)},{fraction_text(hi)}" + ("]" if hi_closed else ")")


@dataclass(frozen=True)
class Piece:
    """An affine branch ``slope * x + intercept`` on a sub-interval."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool
    slope: Fraction
    intercept: Fraction

    def contains(self, y: Fraction) -> bool:
        if y < self.lo or y > self.hi:
            return False
        if y == self.lo and not self.lo_closed:
            return False
        if y == self.hi and not self.hi_closed:
            return False
        return True

    def apply(self, y: Fraction) -> Fraction:
        return self.slope * y + self.intercept

    def image(self) -> tuple[Fraction, Fraction]:
        a, b = self.apply(self.lo), self.apply(self.hi)
        return (a, b) if a <= b else (b, a)

    def solve(self, y: Fraction) -> Fraction | None:
        z = (y - self.intercept) / self.slope
        return z if self.contains(z) else None

    def pullback_open(self, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction] | None:
        """Preimage of the open interval (lo, hi), intersected with the piece interior."""
        a, b = (lo - self.intercept) / self.slope, (hi - self.intercept) / self.slope
        if a > b:
            a, b = b, a
        a, b = max(a, self.lo), min(b, self.hi)
        return (a, b) if a < b else None

    def __str__(self) -> str:
        return f"on {_bracket(self.lo, self.hi, self.lo_closed, self.hi_closed)}: {_affine_text(self.slope, self.intercept)}"


def _affine_text(slope: Fraction, intercept: Fraction) -> str:
    return expr_text(sympy.Rational(slope.numerator, slope.denominator) * X
                     + sympy.Rational(intercept.numerator, intercept.denominator))


@dataclass(frozen=True)
class IntervalData:
    """A closed interval ``I_n`` with the restriction of ``g`` to it."""

    index: int
    lo: Fraction
    hi: Fraction
    pieces: tuple
    overrides: tuple = ()

    @property
    def override_map(self) -> dict:
        return dict(self.overrides)

    def contains(self, y: Fraction) -> bool:
        return self.lo <= y <= self.hi

    def interior(self, y: Fraction) -> bool:
        return self.lo < y < self.hi

    def apply(self, y: Fraction) -> Fraction | None:
        """``g_n(y)``: overrides first, then the first piece containing ``y``."""
        for p, v in self.overrides:
            if p == y:
                return v
        for piece in self.pieces:
            if piece.contains(y):
                return piece.apply(y)
        return None

    def image_hull(self) -> tuple[Fraction, Fraction]:
        ims = [p.image() for p in self.pieces]
        return min(a for a, _ in ims), max(b for _, b in ims)

    def closed_image(self) -> list[tuple[Fraction, Fraction]]:
        """Merged closed images of the pieces (override points excluded)."""
        comps = sorted(p.image() for p in self.pieces)
        merged: list[list[Fraction]] = []
        for a, b in comps:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return [(a, b) for a, b in merged]

    def preimages(self, y: Fraction) -> list[tuple[Fraction, Piece]]:
        out = []
        for piece in self.pieces:
            z = piece.solve(y)
            if z is not None and self.apply(z) == y:
                out.append((z, piece))
        return out


# -- parametric families ---------------------------------------------------


@dataclass(frozen=True)
class PieceRule:
    lo: sympy.Expr
    hi: sympy.Expr
    lo_closed: bool
    hi_closed: bool
    expr: sympy.Expr
    parity: str | None = None  # "odd", "even" or None

    def __post_init__(self):
        slope, _ = affine_parts(self.expr)
        if slope == 0:
            raise MarkovError(f"branch {expr_text(self.expr)} is constant")

    @property
    def slope(self) -> sympy.Expr:
        return affine_parts(self.expr)[0]

    @property
    def intercept(self) -> sympy.Expr:
        return affine_parts(self.expr)[1]

    def applies(self, n: int) -> bool:
        return self.parity is None or (n % 2 == 1) == (self.parity == "odd")

    def instantiate(self, n: int) -> Piece:
        slope, intercept = affine_parts(self.expr)
        q = evaluate(slope, n)
        if q == 0:
            raise MarkovError(f"branch {expr_text(self.expr)} is constant at n={n}")
        return Piece(evaluate(self.lo, n), evaluate(self.hi, n), self.lo_closed, self.hi_closed,
                     q, evaluate(intercept, n))

    def text(self) -> str:
        cond = f" if n {self.parity}" if self.parity else ""
        lo, hi = expr_text(self.lo), expr_text(self.hi)
        br = ("[" if self.lo_closed else "(") + f"{lo}, {hi}" + ("]" if self.hi_closed else ")")
        return f"on {br}{cond}: {expr_text(self.expr)}"


@dataclass(frozen=True)
class FamilyRule:
    """``I_n = [lo(n), hi(n)]`` and its branches for all ``n >= n0``."""

    n0: int
    lo: sympy.Expr
    hi: sympy.Expr
    pieces: tuple
    overrides: tuple = ()  # (point expr, value expr)

    @property
    def period(self) -> int:
        return 2 if any(p.parity for p in self.pieces) else 1

    def instantiate(self, n: int) -> IntervalData:
        pieces = tuple(sorted((p.instantiate(n) for p in self.pieces if p.applies(n)),
                              key=lambda p: (p.lo, not p.lo_closed)))
        overrides = tuple((evaluate(a, n), evaluate(b, n)) for a, b in self.overrides)
        return IntervalData(n, evaluate(self.lo, n), evaluate(self.hi, n), pieces, overrides)

    def lo_at(self, n: int) -> Fraction:
        return evaluate(self.lo, n)

    def hi_at(self, n: int) -> Fraction:
        return evaluate(self.hi, n)


# -- the map ---------------------------------------------------------------


@dataclass
class MarkovMap:
    """A countable closed-interval partition of ``[a, b)`` with a branch on each piece.

    ``ambient_hi`` of ``None`` stands for ``+inf``.
    """

    ambient_lo: Fraction
    ambient_hi: Fraction | None
    explicit: tuple
    family: FamilyRule | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.explicit = tuple(self.explicit)
        for k, iv in enumerate(self.explicit, start=1):
            if iv.index != k:
                raise MarkovError(f"explicit intervals must be numbered 1..k; got I_{iv.index} at position {k}")
        if self.family is not None and self.family.n0 != len(self.explicit) + 1:
            raise MarkovError(
                f"family must start at n={len(self.explicit) + 1}, right after the explicit intervals")
        if not self.explicit and self.family is None:
            raise MarkovError("the partition has no intervals")

    @property
    def count(self) -> int | None:
        return None if self.family is not None else len(self.explicit)

    @property
    def n_explicit(self) -> int:
        return len(self.explicit)

    def has_interval(self, n: int) -> bool:
        return n >= 1 and (self.count is None or n <= self.count)

    def interval(self, n: int) -> IntervalData:
        if not self.has_interval(n):
            raise IndexError(f"no interval I_{n}")
        if n <= len(self.explicit):
            return self.explicit[n - 1]
        data = self._cache.get(n)
        if data is None:
            data = self._cache[n] = self.family.instantiate(n)
        return data

    def intervals(self, horizon: int) -> Iterator[IntervalData]:
        n = 1
        while n <= horizon and self.has_interval(n):
            yield self.interval(n)
            n += 1

    def last_index(self, horizon: int) -> int:
        return horizon if self.count is None else min(horizon, self.count)

    # -- point location ---------------------------------------------------

    def _first_reaching(self, y: Fraction) -> int | None:
        """Smallest n with hi(I_n) >= y, or None if y lies beyond every interval."""
        for iv in self.explicit:
            if iv.hi >= y:
                return iv.index
        if self.family is None:
            return None
        if self.ambient_hi is not None and y >= self.ambient_hi:
            return None
        lo = self.family.n0
        if self.interval(lo).hi >= y:
            return lo
        step = 1
        while self.interval(lo + step).hi < y:
            lo += step
            step *= 2
            if step > 1 << 48:
                raise MarkovError(f"cannot locate {y}: partition does not reach it")
        hi = lo + step
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.interval(mid).hi >= y:
                hi = mid
            else:
                lo = mid
        return hi

    def locate(self, y: Fraction) -> list[int]:
        """Indices of the closed intervals containing ``y`` (at most two)."""
        if y < self.ambient_lo:
            return []
        n = self._first_reaching(y)
        if n is None:
            return []
        out = [k for k in (n, n + 1) if self.has_interval(k) and self.interval(k).contains(y)]
        return out

    def index_of(self, y: Fraction) -> int | None:
        found = self.locate(y)
        return found[0] if found else None

    def in_domain(self, y: Fraction) -> bool:
        return bool(self.locate(y))

    def in_gamma(self, y: Fraction) -> bool:
        return any(y in (self.interval(k).lo, self.interval(k).hi) for k in self.locate(y))

    def in_interior(self, y: Fraction) -> int | None:
        for k in self.locate(y):
            if self.interval(k).interior(y):
                return k
        return None

    def gap(self, n: int) -> tuple[Fraction, Fraction] | None:
        """The escape gap ``E_n = (max I_n, min I_{n+1})``; ``None`` if empty or absent."""
        if not self.has_interval(n + 1):
            if self.has_interval(n) and self.ambient_hi is not None and self.interval(n).hi < self.ambient_hi:
                return (self.interval(n).hi, self.ambient_hi)
            return None
        a, b = self.interval(n).hi, self.interval(n + 1).lo
        return (a, b) if a < b else None

    def gap_of(self, y: Fraction) -> int | None:
        """Index J with ``y`` in ``E_J``, or ``None``."""
        if self.in_domain(y) or y < self.ambient_lo:
            return None
        if self.ambient_hi is not None and y >= self.ambient_hi:
            return None
        n = self._first_reaching(y)
        if n is None:
            return self.count
        return n - 1 if n > 1 else None

    def g(self, y: Fraction) -> Fraction | None:
        """``g(y)``; at a shared endpoint the lower-indexed interval's branch is used."""
        found = self.locate(y)
        return self.interval(found[0]).apply(y) if found else None

    def iterate(self, y: Fraction, k: int) -> Fraction | None:
        for _ in range(k):
            y = self.g(y)
            if y is None:
                return None
        return y

    # -- description ------------------------------------------------------

    def describe_interval(self, n: int) -> str:
        iv = self.interval(n)
        return f"I_{n}=[{fraction_text(iv.lo)},{fraction_text(iv.hi)}]"
