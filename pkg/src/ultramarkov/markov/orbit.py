"""Escape times and backward orbits of the escape target."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import preimage_open, preimage_points, transition_matrix
from .model import MarkovError, MarkovMap


@dataclass(frozen=True)
class EscapeData:
    x: Fraction
    tau: int
    J: int
    target: Fraction


@dataclass(frozen=True)
class NotEscaping:
    """Scoped verdict: the orbit stayed in the domain for ``bound`` steps."""

    bound: int


def escape_data(m: MarkovMap, x: Fraction, bound: int = 64) -> EscapeData | NotEscaping:
    """Iterate ``g`` from ``x`` until the orbit lands in an escape gap."""
    x = Fraction(x)
    if not m.in_domain(x):
        raise MarkovError(f"{x} is not in the domain of g")
    y = x
    for k in range(1, bound + 1):
        y = m.g(y)
        if not m.in_domain(y):
            J = m.gap_of(y)
            if J is None:
                raise MarkovError(f"g^{k}({x}) = {y} leaves the ambient interval")
            return EscapeData(x, k, J, y)
    return NotEscaping(bound)


@dataclass(frozen=True)
class OrbitNode:
    point: Fraction
    depth: int  # least n >= 1 with g^n(point) = target
    index: int  # the interval I_index containing the point
    image: Fraction  # g(point)


@dataclass
class OrbitTree:
    """Points of the backward orbit with depth <= D lying in I_1..I_N.

    Every node's forward orbit stays inside I_1..I_N, so the tree is closed
    under ``g`` and under the inverse branches of intervals up to the horizon,
    apart from the depth cut-off.
    """

    target: Fraction
    depth: int
    horizon: int
    nodes: dict = field(default_factory=dict)  # point -> OrbitNode
    excluded: list = field(default_factory=list)  # (point, index, depth) beyond the horizon
    recurrences: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, y: Fraction) -> bool:
        return y in self.nodes

    def ordered(self) -> list[OrbitNode]:
        return sorted(self.nodes.values(), key=lambda nd: (nd.depth, nd.point))

    def level(self, d: int) -> list[Fraction]:
        return sorted(nd.point for nd in self.nodes.values() if nd.depth == d)

    def in_interval(self, i: int) -> list[OrbitNode]:
        return sorted((nd for nd in self.nodes.values() if nd.index == i), key=lambda nd: (nd.depth, nd.point))


def backward_orbit(m: MarkovMap, ed: EscapeData, depth: int, horizon: int, overflow_window: int = 2) -> OrbitTree:
    """Breadth-first closure of the inverse branches starting from the target."""
    tree = OrbitTree(ed.target, depth, horizon)
    frontier = [ed.target]
    for d in range(1, depth + 1):
        fresh = []
        for y in frontier:
            for n, z in preimage_points(m, y, horizon + overflow_window):
                if n > horizon:
                    tree.excluded.append((z, n, d))
                    continue
                if z in tree.nodes or z == ed.target:
                    tree.recurrences.append((z, d))
                    continue
                if m.in_interior(z) != n or m.in_gamma(z):
                    raise MarkovError(f"preimage {z} of {y} is not interior to I_{n}")
                tree.nodes[z] = OrbitNode(z, d, n, y)
                fresh.append(z)
        frontier = sorted(fresh)
    return tree


def preimage_set(m: MarkovMap, target, horizon: int) -> list:
    """Exact preimages under ``g`` within intervals up to the horizon.

    A point yields ``(index, point)`` pairs; an open interval ``(lo, hi)``
    yields ``(index, lo, hi)`` open intervals.
    """
    if isinstance(target, tuple):
        return preimage_open(m, Fraction(target[0]), Fraction(target[1]), horizon)
    return preimage_points(m, Fraction(target), horizon)


# -- witnesses in the backward orbit beyond the tree -----------------------


class OrbitSearch:
    """Finds points of the backward orbit in a given interval via itineraries.

    A path ``i -> i_1 -> ... -> i_k`` in the transition graph ending at an
    interval that contains a preimage of the target is pulled back exactly
    along the inverse branches; the resulting point is checked forward.
    """

    def __init__(self, m: MarkovMap, ed: EscapeData, horizon: int):
        self.m, self.ed, self.horizon = m, ed, horizon
        tm = transition_matrix(m, horizon)
        self.rows = {n: row.enumerate_up_to(horizon) for n, row in tm.rows.items()}
        self.first_hits = {}
        for n, z in preimage_points(m, ed.target, horizon):
            self.first_hits.setdefault(n, z)

    def find(self, i: int, min_steps: int = 0) -> Fraction | None:
        """A point of the orbit in I_i reaching the target after at least ``min_steps + 1`` steps."""
        start = (i, 0)
        parent = {start: None}
        queue = deque([start])
        while queue:
            v, k = queue.popleft()
            if k >= min_steps and v in self.first_hits:
                return self._pull_back(self._path(parent, (v, k)))
            nk = min(k + 1, min_steps)
            for w in self.rows.get(v, ()):
                if (w, nk) not in parent:
                    parent[(w, nk)] = (v, k)
                    queue.append((w, nk))
        return None

    @staticmethod
    def _path(parent: dict, node) -> list[int]:
        out = []
        while node is not None:
            out.append(node[0])
            node = parent[node]
        return out[::-1]

    def _pull_back(self, path: list[int]) -> Fraction:
        y = self.first_hits[path[-1]]
        for n in reversed(path[:-1]):
            pre = self.m.interval(n).preimages(y)
            interior = [z for z, _ in pre if self.m.interval(n).interior(z)]
            if not interior:
                raise MarkovError(f"no interior preimage of {y} in I_{n}")
            y = interior[0]
        if self.m.iterate(y, len(path)) != self.ed.target:
            raise MarkovError(f"pulled-back point {y} does not reach the target")
        return y
