"""Eventually-periodic sets of vertex indices.

A :class:`VertexSet` is a subset of the positive integers of the form::

    explicit_part  ∪  { j >= threshold : pattern[(j - threshold) % period] }

with ``explicit_part`` below ``threshold``.  The class is closed under union,
intersection and difference, which is all the ultragraph Boolean algebras
need.  Values are kept in a canonical form (minimal threshold, minimal period)
so that ``==`` coincides with extensional equality.

Textual notation::

    {1,2}                        finite set
    tail(2)                      {j >= 2}
    tail(1;period=2,bits=10)     odd indices
    {1} + tail(5)                union of the above
    primed(...)                  subset of the primed copy Y'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from math import gcd
from typing import Iterable, Iterator


class VertexSetError(ValueError):
    pass


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _minimal_period(bits: tuple[bool, ...]) -> tuple[bool, ...]:
    p = len(bits)
    for q in range(1, p + 1):
        if p % q == 0 and all(bits[i] == bits[i % q] for i in range(p)):
            return bits[:q]
    return bits


@dataclass(frozen=True)
class VertexSet:
    explicit_part: frozenset = frozenset()
    threshold: int = 1
    tail_pattern: tuple = (False,)
    primed: bool = False

    def __post_init__(self):
        c = _canonical(self.explicit_part, self.threshold, self.tail_pattern)
        object.__setattr__(self, "explicit_part", c[0])
        object.__setattr__(self, "threshold", c[1])
        object.__setattr__(self, "tail_pattern", c[2])

    # -- constructors -----------------------------------------------------

    @classmethod
    def finite(cls, items: Iterable[int] = (), primed: bool = False) -> "VertexSet":
        items = frozenset(int(i) for i in items)
        t = max(items) + 1 if items else 1
        return cls(items, t, (False,), primed)

    @classmethod
    def empty(cls, primed: bool = False) -> "VertexSet":
        return cls(frozenset(), 1, (False,), primed)

    @classmethod
    def tail(cls, start: int, period: int = 1, bits: Iterable[bool] | str | None = None,
             primed: bool = False) -> "VertexSet":
        """``{j >= start}``, optionally filtered by a periodic bit pattern."""
        if bits is None:
            pattern = (True,) + (False,) * (period - 1)
        elif isinstance(bits, str):
            pattern = tuple(ch == "1" for ch in bits)
        else:
            pattern = tuple(bool(b) for b in bits)
        if len(pattern) != period:
            if bits is not None and period == 1:
                period = len(pattern)
            else:
                raise VertexSetError(f"pattern length {len(pattern)} != period {period}")
        return cls(frozenset(), start, pattern, primed)

    @classmethod
    def parity(cls, odd: bool, start: int = 1, primed: bool = False) -> "VertexSet":
        first = start if (start % 2 == 1) == odd else start + 1
        return cls.tail(first, 2, "10", primed)

    # -- queries ----------------------------------------------------------

    @property
    def period(self) -> int:
        return len(self.tail_pattern)

    def __contains__(self, j: int) -> bool:
        if j < 1:
            return False
        if j < self.threshold:
            return j in self.explicit_part
        return self.tail_pattern[(j - self.threshold) % self.period]

    def member(self, j: int) -> bool:
        return j in self

    def is_finite(self) -> bool:
        return not any(self.tail_pattern)

    def is_empty(self) -> bool:
        return self.is_finite() and not self.explicit_part

    def __bool__(self) -> bool:
        return not self.is_empty()

    def enumerate_up_to(self, n: int) -> list[int]:
        if n < 0:
            raise VertexSetError("bound must be non-negative")
        return [j for j in range(1, n + 1) if j in self]

    def __iter__(self) -> Iterator[int]:
        """Iterate members in increasing order (unbounded for infinite sets)."""
        j = 1
        if self.is_finite():
            yield from sorted(self.explicit_part)
            return
        while True:
            if j in self:
                yield j
            j += 1

    def elements(self) -> list[int]:
        if not self.is_finite():
            raise VertexSetError(f"{self} is infinite")
        return sorted(self.explicit_part)

    def __len__(self) -> int:
        return len(self.elements())

    def min(self) -> int | None:
        for j in self:
            return j
        return None

    def bound(self) -> int:
        """An index past which membership is purely periodic, plus one period."""
        return self.threshold + self.period

    # -- Boolean operations ----------------------------------------------

    def _combine(self, other: "VertexSet", op) -> "VertexSet":
        if not isinstance(other, VertexSet):
            return NotImplemented
        if self.primed != other.primed:
            raise VertexSetError("cannot combine primed and unprimed vertex sets")
        t = max(self.threshold, other.threshold)
        p = _lcm(self.period, other.period)
        explicit = frozenset(j for j in range(1, t) if op(j in self, j in other))
        pattern = tuple(op(j in self, j in other) for j in range(t, t + p))
        return VertexSet(explicit, t, pattern, self.primed)

    def union(self, other: "VertexSet") -> "VertexSet":
        return self._combine(other, lambda a, b: a or b)

    def intersect(self, other: "VertexSet") -> "VertexSet":
        return self._combine(other, lambda a, b: a and b)

    def difference(self, other: "VertexSet") -> "VertexSet":
        return self._combine(other, lambda a, b: a and not b)

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def issubset(self, other: "VertexSet") -> bool:
        return (self - other).is_empty()

    __le__ = issubset

    def shift(self, d: int) -> "VertexSet":
        """``{j + d : j in self, j + d >= 1}``."""
        t = max(1, self.threshold + d)
        explicit = frozenset(j for j in range(1, t) if (j - d) in self)
        pattern = tuple((j - d) in self for j in range(t, t + self.period))
        return VertexSet(explicit, t, pattern, self.primed)

    def as_primed(self, primed: bool = True) -> "VertexSet":
        return VertexSet(self.explicit_part, self.threshold, self.tail_pattern, primed)

    def unprimed(self) -> "VertexSet":
        return self.as_primed(False)

    # -- notation ---------------------------------------------------------

    def __str__(self) -> str:
        parts = []
        if self.explicit_part or self.is_finite():
            parts.append("{" + ",".join(str(j) for j in sorted(self.explicit_part)) + "}")
        if not self.is_finite():
            if self.tail_pattern == (True,):
                parts.append(f"tail({self.threshold})")
            else:
                bits = "".join("1" if b else "0" for b in self.tail_pattern)
                parts.append(f"tail({self.threshold};period={self.period},bits={bits})")
        text = " + ".join(parts)
        return f"primed({text})" if self.primed else text

    def __repr__(self) -> str:
        return f"VertexSet({self})"

    def sort_key(self) -> tuple:
        return (self.primed, self.threshold, tuple(sorted(self.explicit_part)), self.tail_pattern)


def _canonical(explicit, threshold, pattern):
    explicit = frozenset(int(j) for j in explicit)
    pattern = tuple(bool(b) for b in pattern)
    if not pattern:
        raise VertexSetError("tail pattern must be nonempty")
    if any(j < 1 for j in explicit):
        raise VertexSetError("vertex indices must be positive")
    if threshold < 1:
        raise VertexSetError("threshold must be positive")
    p = len(pattern)

    def member(j):
        if j in explicit:
            return True
        return j >= threshold and pattern[(j - threshold) % p]

    # raise the threshold above any explicit element the tail does not cover
    t = max([threshold] + [j + 1 for j in explicit])
    pattern = tuple(member(j) for j in range(t, t + p))
    explicit = frozenset(j for j in range(1, t) if member(j))
    pattern = _minimal_period(pattern)
    p = len(pattern)
    while t > 1 and ((t - 1) in explicit) == pattern[p - 1]:
        explicit = explicit - {t - 1}
        pattern = pattern[p - 1:] + pattern[:p - 1]
        t -= 1
    return explicit, t, pattern


def canonicalize(explicit_part: Iterable[int], threshold: int, tail_pattern: Iterable,
                 primed: bool = False) -> VertexSet:
    return VertexSet(frozenset(explicit_part), threshold, tuple(tail_pattern), primed)


def union_all(sets: Iterable[VertexSet], primed: bool = False) -> VertexSet:
    return reduce(VertexSet.union, sets, VertexSet.empty(primed))


@dataclass(frozen=True)
class EXSet:
    """An element ``Z = A ∪ (B∩Y)'`` of the lifted Boolean algebra."""

    unprimed: VertexSet = VertexSet()
    primed: VertexSet = VertexSet(primed=True)

    def __post_init__(self):
        if self.unprimed.primed:
            raise VertexSetError("unprimed part carries the primed flag")
        if not self.primed.primed:
            object.__setattr__(self, "primed", self.primed.as_primed())

    @classmethod
    def of(cls, a: VertexSet | None = None, b: VertexSet | None = None) -> "EXSet":
        a = a if a is not None else VertexSet.empty()
        b = b if b is not None else VertexSet.empty(True)
        return cls(a, b.as_primed())

    def union(self, other: "EXSet") -> "EXSet":
        return EXSet(self.unprimed | other.unprimed, self.primed | other.primed)

    def intersect(self, other: "EXSet") -> "EXSet":
        return EXSet(self.unprimed & other.unprimed, self.primed & other.primed)

    def difference(self, other: "EXSet") -> "EXSet":
        return EXSet(self.unprimed - other.unprimed, self.primed - other.primed)

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def is_empty(self) -> bool:
        return self.unprimed.is_empty() and self.primed.is_empty()

    def __str__(self) -> str:
        if self.primed.is_empty():
            return str(self.unprimed)
        if self.unprimed.is_empty():
            return str(self.primed)
        return f"{self.unprimed} + {self.primed}"

    def __repr__(self) -> str:
        return f"EXSet({self})"

    def sort_key(self) -> tuple:
        return (self.unprimed.sort_key(), self.primed.sort_key())


# -- parsing --------------------------------------------------------------

def _split_top(text: str, sep: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out


def _parse_index(tok: str) -> int:
    tok = tok.strip()
    if tok.startswith("v"):
        tok = tok[1:]
    if not tok.isdigit():
        raise VertexSetError(f"bad vertex index {tok!r}")
    value = int(tok)
    if value < 1:
        raise VertexSetError("vertex indices must be positive")
    return value


def _parse_atom(text: str, primed: bool) -> VertexSet:
    text = text.strip()
    if text.startswith("{") and text.endswith("}"):
        body = text[1:-1].strip()
        items = [_parse_index(t) for t in body.split(",")] if body else []
        return VertexSet.finite(items, primed)
    m = re.fullmatch(r"tail\(\s*v?(\d+)\s*(?:;\s*period\s*=\s*(\d+)\s*,\s*bits\s*=\s*([01]+)\s*)?\)", text)
    if m:
        start = int(m.group(1))
        if start < 1:
            raise VertexSetError("tail start must be positive")
        if m.group(2):
            return VertexSet.tail(start, int(m.group(2)), m.group(3), primed)
        return VertexSet.tail(start, primed=primed)
    raise VertexSetError(f"cannot parse vertex set {text!r}")


def parse_vertexset(text: str) -> VertexSet:
    """Parse the textual notation; ``primed(...)`` sets the primed flag."""
    text = text.strip()
    primed = False
    m = re.fullmatch(r"primed\((.*)\)", text, re.S)
    if m:
        primed, text = True, m.group(1)
    if not text:
        raise VertexSetError("empty vertex set expression")
    parts = [p for p in _split_top(text, "+")]
    if any(not p.strip() for p in parts):
        raise VertexSetError(f"cannot parse vertex set {text!r}")
    return union_all((_parse_atom(p, primed) for p in parts), primed)


def parse_exset(text: str) -> EXSet:
    a = VertexSet.empty()
    b = VertexSet.empty(True)
    for part in _split_top(text.strip(), "+"):
        part = part.strip()
        if part.startswith("primed("):
            b = b | parse_vertexset(part)
        else:
            a = a | parse_vertexset(part)
    return EXSet(a, b)
