"""Rule-based countable ultragraphs, relative ultragraphs and the primed lift.

Vertices are positive integers ``v_1, v_2, ...``.  Sources are always
unprimed; a range is either an unprimed set or (for the edges added by the
lift) a primed set.  Infinite edge sets are described by offset families:
for ``n >= n0`` with ``n = residue (mod modulus)`` the edge ``e_n`` leaves
``v_n`` and has range ``{v_{n+d} : d in offsets} ∪ constant``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Iterable, Iterator

from .report import CheckResult, Report, Verdict
from .vertexset import EXSet, VertexSet, union_all


class UltragraphError(ValueError):
    pass


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _class_set(start: int, modulus: int, residue: int) -> VertexSet:
    """``{n >= start : n = residue (mod modulus)}``."""
    bits = tuple((j - residue) % modulus == 0 for j in range(start, start + modulus))
    return VertexSet(frozenset(), start, bits)


@dataclass(frozen=True)
class Edge:
    id: str
    source: int
    range: VertexSet

    @property
    def primed(self) -> bool:
        return self.id.endswith("'")

    @property
    def base_id(self) -> str:
        return self.id.rstrip("'")

    def sort_key(self) -> tuple:
        return (self.source, self.primed, _id_key(self.id))


def _id_key(edge_id: str) -> tuple:
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", edge_id))


@dataclass(frozen=True)
class EdgeFamily:
    """Edges ``prefix + str(n)`` for ``n >= n0``, ``n = residue (mod modulus)``."""

    n0: int
    offsets: tuple = ()
    constant: VertexSet = VertexSet()
    modulus: int = 1
    residue: int = 0
    prefix: str = "e"
    primed: bool = False

    def __post_init__(self):
        if self.n0 < 1 or self.modulus < 1:
            raise UltragraphError("family start and modulus must be positive")
        object.__setattr__(self, "offsets", tuple(sorted(set(self.offsets))))
        object.__setattr__(self, "residue", self.residue % self.modulus)
        if self.constant.primed != self.primed:
            object.__setattr__(self, "constant", self.constant.as_primed(self.primed))
        if not self.offsets and self.constant.is_empty():
            raise UltragraphError("family edges must have nonempty ranges")

    def contains(self, n: int) -> bool:
        return n >= self.n0 and (n - self.residue) % self.modulus == 0

    @property
    def indices(self) -> VertexSet:
        return _class_set(self.n0, self.modulus, self.residue)

    def range_of(self, n: int) -> VertexSet:
        near = VertexSet.finite((n + d for d in self.offsets if n + d >= 1), self.primed)
        return near | self.constant

    def edge(self, n: int) -> Edge:
        rng = self.range_of(n)
        if rng.is_empty():
            raise UltragraphError(f"edge {self.edge_id(n)} has empty range")
        return Edge(self.edge_id(n), n, rng)

    def edge_id(self, n: int) -> str:
        return f"{self.prefix}{n}" + ("'" if self.primed else "")

    def range_union(self) -> VertexSet:
        """Union of all ranges in the family."""
        parts = [self.constant]
        for d in self.offsets:
            parts.append(self.indices.shift(d).as_primed(self.primed))
        return union_all(parts, self.primed)

    def describe(self) -> str:
        cls = "" if self.modulus == 1 else f", n={self.residue} mod {self.modulus}"
        offs = ",".join(f"{d:+d}" for d in self.offsets)
        const = "" if self.constant.is_empty() else f" + {self.constant}"
        mark = "'" if self.primed else ""
        return f"{self.prefix}_n{mark}: n>={self.n0}{cls}: v_n -> offsets{{{offs}}}{const}"


@dataclass(frozen=True)
class Cycle:
    edges: tuple

    @property
    def ids(self) -> tuple:
        return tuple(e.id for e in self.edges)

    @property
    def simple(self) -> bool:
        sources = [e.source for e in self.edges]
        return len(set(sources)) == len(sources)

    def __len__(self) -> int:
        return len(self.edges)

    def __str__(self) -> str:
        return "(" + ",".join(self.ids) + ")"


@dataclass(frozen=True)
class Ultragraph:
    explicit_edges: tuple = ()
    edge_families: tuple = ()
    extra_vertices: VertexSet = VertexSet()
    vertex_horizon: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "explicit_edges", tuple(self.explicit_edges))
        object.__setattr__(self, "edge_families", tuple(self.edge_families))
        seen: set[str] = set()
        for e in self.explicit_edges:
            if e.id in seen:
                raise UltragraphError(f"duplicate edge id {e.id}")
            if e.source < 1:
                raise UltragraphError(f"edge {e.id} has non-positive source")
            if e.range.is_empty():
                raise UltragraphError(f"edge {e.id} has empty range")
            seen.add(e.id)
            for fam in self.edge_families:
                n = _family_index(fam, e.id)
                if n is not None and fam.contains(n):
                    raise UltragraphError(f"edge id {e.id} collides with a family edge")
        fams = self.edge_families
        for i, a in enumerate(fams):
            for b in fams[i + 1:]:
                if a.prefix == b.prefix and a.primed == b.primed and not (a.indices & b.indices).is_empty():
                    raise UltragraphError(f"edge families {a.describe()} and {b.describe()} collide")

    # -- edges ------------------------------------------------------------

    def edges_from(self, v: int) -> list[Edge]:
        out = [e for e in self.explicit_edges if e.source == v]
        out += [f.edge(v) for f in self.edge_families if f.contains(v)]
        return sorted(out, key=Edge.sort_key)

    def edges_up_to(self, horizon: int) -> list[Edge]:
        return [e for v in range(1, horizon + 1) for e in self.edges_from(v)]

    def edge(self, edge_id: str) -> Edge:
        for e in self.explicit_edges:
            if e.id == edge_id:
                return e
        for f in self.edge_families:
            n = _family_index(f, edge_id)
            if n is not None and f.contains(n):
                return f.edge(n)
        raise UltragraphError(f"no edge {edge_id}")

    def has_edge(self, edge_id: str) -> bool:
        try:
            self.edge(edge_id)
        except UltragraphError:
            return False
        return True

    # -- vertex sets ------------------------------------------------------

    @cached_property
    def _structure_bound(self) -> tuple[int, int]:
        t = max([e.source + 1 for e in self.explicit_edges] + [f.n0 for f in self.edge_families] + [1])
        p = 1
        for f in self.edge_families:
            p = _lcm(p, f.modulus)
        return t, p

    def multiplicity(self, v: int) -> int:
        return sum(e.source == v for e in self.explicit_edges) + sum(f.contains(v) for f in self.edge_families)

    def _set_from_predicate(self, pred) -> VertexSet:
        t, p = self._structure_bound
        explicit = frozenset(j for j in range(1, t) if pred(j))
        pattern = tuple(pred(j) for j in range(t, t + p))
        return VertexSet(explicit, t, pattern)

    @cached_property
    def sources(self) -> VertexSet:
        return self._set_from_predicate(lambda v: self.multiplicity(v) > 0)

    def regular_vertices(self) -> VertexSet:
        # every vertex emits finitely many edges, so regular means "emits"
        return self.sources

    @cached_property
    def multi_emitters(self) -> VertexSet:
        return self._set_from_predicate(lambda v: self.multiplicity(v) >= 2)

    @cached_property
    def vertices(self) -> VertexSet:
        ranges = [e.range for e in self.explicit_edges if not e.range.primed]
        ranges += [f.range_union() for f in self.edge_families if not f.primed]
        return union_all(ranges) | self.sources | self.extra_vertices

    @cached_property
    def primed_vertices(self) -> VertexSet:
        ranges = [e.range for e in self.explicit_edges if e.range.primed]
        ranges += [f.range_union() for f in self.edge_families if f.primed]
        return union_all(ranges, primed=True)

    @cached_property
    def sinks(self) -> VertexSet:
        return self.vertices - self.sources

    # -- cycles -----------------------------------------------------------

    def find_cycles(self, maxlen: int, horizon: int) -> list[Cycle]:
        """All cycles of length <= maxlen through sources <= horizon, up to rotation."""
        edges = [e for e in self.edges_up_to(horizon) if not e.range.primed]
        order = {e.id: i for i, e in enumerate(edges)}
        by_source: dict[int, list[Edge]] = {}
        for e in edges:
            by_source.setdefault(e.source, []).append(e)

        found: list[Cycle] = []

        def successors(e: Edge) -> Iterator[Edge]:
            for v in e.range.enumerate_up_to(horizon):
                yield from by_source.get(v, ())

        def canonical(path: list[Edge]) -> bool:
            key = [order[e.id] for e in path]
            rotations = [key[i:] + key[:i] for i in range(1, len(key))]
            # proper powers of shorter cycles share their exits and are skipped
            return all(key < r for r in rotations)

        def extend(path: list[Edge]):
            first, last = path[0], path[-1]
            if first.source in last.range and canonical(path):
                found.append(Cycle(tuple(path)))
            if len(path) == maxlen:
                return
            for nxt in successors(last):
                if order[nxt.id] >= order[first.id]:
                    path.append(nxt)
                    extend(path)
                    path.pop()

        for e in edges:
            extend([e])
        return found

    def exit_of(self, cycle: Cycle) -> str | None:
        """Describe an exit of the cycle, or ``None`` if it has none."""
        n = len(cycle)
        for i, a in enumerate(cycle.edges):
            nxt = cycle.edges[(i + 1) % n]
            rng = a.range
            if rng.primed:
                return f"r({a.id}) consists of sinks"
            sink = (rng & self.sinks).min()
            if sink is not None:
                return f"sink v{sink} in r({a.id})"
            other = ((rng & self.sources) - VertexSet.finite([nxt.source])).min()
            if other is not None:
                return f"edge from v{other} in r({a.id})"
            if self.multiplicity(nxt.source) >= 2:
                alt = next(e for e in self.edges_from(nxt.source) if e.id != nxt.id)
                return f"edge {alt.id} leaves v{nxt.source}"
        return None

    def has_exit(self, cycle: Cycle) -> bool:
        return self.exit_of(cycle) is not None


def _family_index(fam: EdgeFamily, edge_id: str) -> int | None:
    suffix = "'" if fam.primed else ""
    m = re.fullmatch(re.escape(fam.prefix) + r"(\d+)" + re.escape(suffix), edge_id)
    return int(m.group(1)) if m else None


# -- relative ultragraphs and the lift ------------------------------------


@dataclass(frozen=True)
class RelativeUltragraph:
    graph: Ultragraph
    X: VertexSet

    def __post_init__(self):
        if self.X.primed:
            raise UltragraphError("X must be a set of unprimed vertices")
        outside = self.X - self.graph.regular_vertices()
        if not outside.is_empty():
            raise UltragraphError(f"X is not contained in Reg(G): offending vertex v{outside.min()}")

    @cached_property
    def Y(self) -> VertexSet:
        return self.graph.regular_vertices() - self.X


@dataclass(frozen=True)
class LiftedUltragraph:
    base: RelativeUltragraph
    graph: Ultragraph

    @property
    def added_vertices(self) -> VertexSet:
        return self.base.Y.as_primed()

    def added_edges(self, horizon: int) -> list[Edge]:
        return [e for e in self.graph.edges_up_to(horizon) if e.primed]


def lift(rg: RelativeUltragraph) -> LiftedUltragraph:
    """Add a primed sink copy of Y and a primed edge e' for each e meeting Y."""
    g, Y = rg.graph, rg.Y
    explicit = list(g.explicit_edges)
    for e in g.explicit_edges:
        hit = e.range & Y
        if not hit.is_empty():
            explicit.append(Edge(e.id + "'", e.source, hit.as_primed()))
    families = list(g.edge_families)
    for fam in g.edge_families:
        fams, edges = _lift_family(fam, Y)
        families += fams
        explicit += edges
    graph = Ultragraph(tuple(explicit), tuple(families), g.vertices, g.vertex_horizon)
    return LiftedUltragraph(rg, graph)


def _lift_family(fam: EdgeFamily, Y: VertexSet) -> tuple[list[EdgeFamily], list[Edge]]:
    period = _lcm(fam.modulus, Y.period)
    low = min(fam.offsets, default=0)
    start = max(fam.n0, Y.threshold - low, 1 - low)
    edges = []
    for n in range(fam.n0, start):
        if fam.contains(n):
            hit = fam.range_of(n) & Y
            if not hit.is_empty():
                edges.append(Edge(fam.edge_id(n) + "'", n, hit.as_primed()))
    const = fam.constant & Y
    families = []
    for n in range(start, start + period):
        if not fam.contains(n):
            continue
        offsets = tuple(d for d in fam.offsets if (n + d) in Y)
        if offsets or not const.is_empty():
            families.append(EdgeFamily(n, offsets, const.as_primed(), period, n % period, fam.prefix, True))
    return families, edges


def regular_vertices(g: Ultragraph) -> VertexSet:
    return g.regular_vertices()


def decompose(z: EXSet, rg: RelativeUltragraph) -> tuple[VertexSet, VertexSet]:
    """Split ``Z = A ∪ (B∩Y)'`` into ``(A, B∩Y)``."""
    a, b = z.unprimed, z.primed.unprimed()
    stray = b - rg.Y
    if not stray.is_empty():
        raise UltragraphError(f"primed part is not contained in Y': v{stray.min()}' is not in Y'")
    return a, b


def recompose(a: VertexSet, b_cap_y: VertexSet) -> EXSet:
    return EXSet(a, b_cap_y.as_primed())


# -- scoped verdicts ------------------------------------------------------


def _scope(maxlen: int, horizon: int) -> dict:
    return {"maxlen": maxlen, "horizon": horizon}


def condition_L(g: Ultragraph, maxlen: int, horizon: int, subject: str = "G") -> CheckResult:
    bad = [c for c in g.find_cycles(maxlen, horizon) if not g.has_exit(c)]
    verdict = Verdict.FAILS if bad else Verdict.HOLDS
    return CheckResult("condition-L", "every cycle has an exit", subject, verdict,
                       _scope(maxlen, horizon), [str(c) for c in bad])


def relative_condition_L(rg: RelativeUltragraph, maxlen: int, horizon: int) -> CheckResult:
    g = rg.graph
    bad = []
    for c in g.find_cycles(maxlen, horizon):
        if g.has_exit(c):
            continue
        if all((e.range & rg.Y).is_empty() for e in c.edges):
            bad.append(c)
    verdict = Verdict.FAILS if bad else Verdict.HOLDS
    return CheckResult("relative-condition-L", "every exitless cycle has a range meeting Y", "(G,X)",
                       verdict, _scope(maxlen, horizon), [str(c) for c in bad])


def lift_condition_L_equivalence_check(rg: RelativeUltragraph, maxlen: int, horizon: int) -> Report:
    """Compare both sides of the lift/Condition (L) equivalence at one scope.

    Also checks, per cycle, that it is exitless in the lift exactly when it is
    exitless in G and no range along it meets Y.
    """
    lifted = lift(rg)
    rel = relative_condition_L(rg, maxlen, horizon)
    abs_ = condition_L(lifted.graph, maxlen, horizon, "G_X")
    report = Report([rel, abs_])
    agree = rel.verdict == abs_.verdict
    report.add(CheckResult("lift-condition-L-agreement", "Relative (L) for (G,X) iff (L) for G_X", "(G,X)",
                           Verdict.HOLDS if agree else Verdict.FAILS, _scope(maxlen, horizon),
                           detail=f"relative={rel.verdict.value}, lifted={abs_.verdict.value}"))
    base_cycles = rg.graph.find_cycles(maxlen, horizon)
    lifted_cycles = lifted.graph.find_cycles(maxlen, horizon)
    same = [c.ids for c in base_cycles] == [c.ids for c in lifted_cycles]
    report.add(CheckResult("lift-cycles-coincide", "cycles of G and G_X coincide", "(G,X)",
                           Verdict.HOLDS if same else Verdict.FAILS, _scope(maxlen, horizon)))
    mismatched = []
    lifted_by_ids = {c.ids: c for c in lifted_cycles}
    for c in base_cycles:
        predicted = not rg.graph.has_exit(c) and all((e.range & rg.Y).is_empty() for e in c.edges)
        lc = lifted_by_ids.get(c.ids)
        actual = lc is not None and not lifted.graph.has_exit(lc)
        if predicted != actual:
            mismatched.append(str(c))
    report.add(CheckResult("lift-exitless-cycles", "exitless in G_X iff exitless in G with ranges avoiding Y",
                           "(G,X)", Verdict.FAILS if mismatched else Verdict.HOLDS,
                           _scope(maxlen, horizon), mismatched))
    return report


def range_Y_finiteness(rg: RelativeUltragraph) -> Report:
    """Decide, per explicit edge and per family, whether r(e) ∩ Y is finite."""
    Y = rg.Y
    report = Report()
    for e in rg.graph.explicit_edges:
        hit = e.range & Y
        report.add(CheckResult("range-Y-finite", "r(e) ∩ Y finite", e.id,
                               Verdict.HOLDS if hit.is_finite() else Verdict.FAILS,
                               detail=f"r(e) ∩ Y = {hit}"))
    for fam in rg.graph.edge_families:
        hit = fam.constant & Y
        report.add(CheckResult("range-Y-finite", "r(e) ∩ Y finite", fam.describe(),
                               Verdict.HOLDS if hit.is_finite() else Verdict.FAILS,
                               detail=f"offset part finite; constant part ∩ Y = {hit}"))
    return report


def range_Y_finite(rg: RelativeUltragraph) -> bool:
    return range_Y_finiteness(rg).all_hold
