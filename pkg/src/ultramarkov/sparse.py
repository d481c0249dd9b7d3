"""Exact sparse square matrices over the rationals, stored column-wise."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping


class SparseMatrix:
    """A ``size x size`` matrix; ``cols[j][i]`` is the nonzero entry in row i, column j."""

    __slots__ = ("size", "cols")

    def __init__(self, size: int, cols: Mapping[int, Mapping[int, Fraction]] | None = None):
        self.size = size
        self.cols: dict[int, dict[int, Fraction]] = {}
        for j, col in (cols or {}).items():
            clean = {i: Fraction(v) for i, v in col.items() if v}
            if clean:
                self.cols[j] = clean

    @classmethod
    def zero(cls, size: int) -> "SparseMatrix":
        return cls(size)

    @classmethod
    def diagonal(cls, size: int, indices: Iterable[int]) -> "SparseMatrix":
        return cls(size, {j: {j: Fraction(1)} for j in indices})

    @classmethod
    def identity(cls, size: int) -> "SparseMatrix":
        return cls.diagonal(size, range(size))

    @classmethod
    def from_map(cls, size: int, mapping: Mapping[int, int]) -> "SparseMatrix":
        """The partial map ``e_j -> e_mapping[j]``."""
        return cls(size, {j: {i: Fraction(1)} for j, i in mapping.items()})

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        out = {j: dict(c) for j, c in self.cols.items()}
        for j, col in other.cols.items():
            tgt = out.setdefault(j, {})
            for i, v in col.items():
                tgt[i] = tgt.get(i, 0) + v
        return SparseMatrix(self.size, out)

    def scale(self, c: Fraction) -> "SparseMatrix":
        return SparseMatrix(self.size, {j: {i: c * v for i, v in col.items()} for j, col in self.cols.items()})

    def __neg__(self) -> "SparseMatrix":
        return self.scale(Fraction(-1))

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self + (-other)

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        out: dict[int, dict[int, Fraction]] = {}
        for j, bcol in other.cols.items():
            acc: dict[int, Fraction] = {}
            for k, bv in bcol.items():
                acol = self.cols.get(k)
                if acol:
                    for i, av in acol.items():
                        acc[i] = acc.get(i, 0) + av * bv
            out[j] = acc
        return SparseMatrix(self.size, out)

    def transpose(self) -> "SparseMatrix":
        out: dict[int, dict[int, Fraction]] = {}
        for j, col in self.cols.items():
            for i, v in col.items():
                out.setdefault(i, {})[j] = v
        return SparseMatrix(self.size, out)

    def column(self, j: int) -> dict[int, Fraction]:
        return dict(self.cols.get(j, {}))

    def entries(self) -> list[tuple[int, int, Fraction]]:
        return sorted((i, j, v) for j, col in self.cols.items() for i, v in col.items())

    def nonzero_columns(self) -> list[int]:
        return sorted(self.cols)

    def is_zero(self) -> bool:
        return not self.cols

    def is_diagonal_idempotent(self) -> bool:
        return all(col == {j: 1} for j, col in self.cols.items())

    def is_partial_permutation(self) -> bool:
        rows = set()
        for col in self.cols.values():
            if len(col) != 1:
                return False
            (i, v), = col.items()
            if v != 1 or i in rows:
                return False
            rows.add(i)
        return True

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SparseMatrix) and self.size == other.size and self.cols == other.cols

    def __repr__(self) -> str:
        return f"SparseMatrix(size={self.size}, nnz={sum(len(c) for c in self.cols.values())})"
