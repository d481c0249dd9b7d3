"""Formal *-polynomials over ultragraph generators, the maps phi and psi,
and guarded evaluation under truncated matrix representations."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Sequence

from .report import CheckResult, Report, Verdict
from .sparse import SparseMatrix
from .ultragraph import RelativeUltragraph, decompose
from .vertexset import EXSet, VertexSet


class RelationError(ValueError):
    pass


class GuardBandError(RelationError):
    """The truncation is too shallow to assert anything about a polynomial."""


REL, ABS = "REL", "ABS"

_KINDS = {"p": REL, "s": REL, "s*": REL, "P": ABS, "S": ABS, "S*": ABS}
_STAR = {"p": "p", "s": "s*", "s*": "s", "P": "P", "S": "S*", "S*": "S"}
_EXCURSION = {"p": 0, "P": 0, "s": 1, "S": 1, "s*": -1, "S*": -1}


@dataclass(frozen=True)
class Gen:
    """A generator symbol: ``p_A``, ``s_e``, ``s_e*`` or their G_X counterparts."""

    kind: str
    arg: VertexSet | EXSet | str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise RelationError(f"unknown generator kind {self.kind!r}")
        want = {"p": VertexSet, "P": EXSet}.get(self.kind, str)
        if not isinstance(self.arg, want):
            raise RelationError(f"generator {self.kind} takes a {want.__name__}")
        if self.kind == "p" and self.arg.primed:
            raise RelationError("p_A needs an unprimed set")

    @property
    def algebra(self) -> str:
        return _KINDS[self.kind]

    @property
    def excursion(self) -> int:
        return _EXCURSION[self.kind]

    def star(self) -> "Gen":
        return Gen(_STAR[self.kind], self.arg)

    def __str__(self) -> str:
        if self.kind in ("p", "P"):
            return f"{self.kind}[{self.arg}]"
        base = self.kind.rstrip("*")
        return f"{base}_{self.arg}" + ("*" if self.kind.endswith("*") else "")


def p(a: VertexSet) -> Gen:
    return Gen("p", a)


def s(e: str) -> Gen:
    return Gen("s", e)


def s_star(e: str) -> Gen:
    return Gen("s*", e)


def P(z: EXSet | VertexSet) -> Gen:
    if isinstance(z, VertexSet):
        z = EXSet(VertexSet.empty(), z) if z.primed else EXSet(z)
    return Gen("P", z)


def S(f: str) -> Gen:
    return Gen("S", f)


def S_star(f: str) -> Gen:
    return Gen("S*", f)


Word = tuple


class StarPolynomial:
    """A finite rational combination of generator words in one algebra."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: str, terms: dict | None = None):
        self.algebra = algebra
        self.terms: dict[Word, Fraction] = {}
        for word, c in (terms or {}).items():
            self._accumulate(word, Fraction(c))

    def _accumulate(self, word: Word, c: Fraction) -> None:
        if not word:
            raise RelationError("the empty word (unit) is not a generator")
        for g in word:
            if g.algebra != self.algebra:
                raise RelationError(f"{g} does not belong to {self.algebra}")
        total = self.terms.get(word, 0) + c
        if total:
            self.terms[word] = total
        else:
            self.terms.pop(word, None)

    @classmethod
    def zero(cls, algebra: str) -> "StarPolynomial":
        return cls(algebra)

    @classmethod
    def of(cls, *gens: Gen, coeff=1) -> "StarPolynomial":
        if not gens:
            raise RelationError("need at least one generator")
        return cls(gens[0].algebra, {tuple(gens): coeff})

    def _check(self, other: "StarPolynomial") -> None:
        if self.algebra != other.algebra:
            raise RelationError(f"cannot combine {self.algebra} with {other.algebra}")

    def __add__(self, other: "StarPolynomial") -> "StarPolynomial":
        self._check(other)
        out = StarPolynomial(self.algebra, self.terms)
        for w, c in other.terms.items():
            out._accumulate(w, c)
        return out

    def __neg__(self) -> "StarPolynomial":
        return StarPolynomial(self.algebra, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "StarPolynomial") -> "StarPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "StarPolynomial":
        if isinstance(other, StarPolynomial):
            self._check(other)
            out = StarPolynomial(self.algebra)
            for (w1, c1), (w2, c2) in product(self.terms.items(), other.terms.items()):
                out._accumulate(w1 + w2, c1 * c2)
            return out
        return StarPolynomial(self.algebra, {w: c * Fraction(other) for w, c in self.terms.items()})

    __rmul__ = lambda self, c: self * c  # noqa: E731  scalars commute

    def star(self) -> "StarPolynomial":
        return StarPolynomial(self.algebra, {tuple(g.star() for g in reversed(w)): c for w, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def gens(self) -> set[Gen]:
        return {g for w in self.terms for g in w}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StarPolynomial) and self.algebra == other.algebra and self.terms == other.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms.items(), key=lambda t: [str(g) for g in t[0]]):
            body = " ".join(str(g) for g in w)
            if c == 1:
                parts.append(f"+ {body}")
            elif c == -1:
                parts.append(f"- {body}")
            else:
                sign = "-" if c < 0 else "+"
                parts.append(f"{sign} {abs(c)} {body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[1:]

    __repr__ = __str__


def poly_sum(items: Iterable[StarPolynomial], algebra: str) -> StarPolynomial:
    out = StarPolynomial.zero(algebra)
    for it in items:
        out = out + it
    return out


def _proj(gen: Gen) -> StarPolynomial:
    """A projection symbol, dropping the empty set (``p_∅ = 0``)."""
    arg = gen.arg
    if arg.is_empty():
        return StarPolynomial.zero(gen.algebra)
    return StarPolynomial.of(gen)


def _range_proj(e: str) -> StarPolynomial:
    return StarPolynomial.of(s(e), s_star(e))


# -- phi, psi, q ----------------------------------------------------------


def _finite(a: VertexSet, what: str) -> list[int]:
    if not a.is_finite():
        raise RelationError(f"{what} = {a} is infinite; the sum over it is not finite")
    return a.elements()


def q_of(v: int, graph) -> StarPolynomial:
    """``p_v - sum over s(e)=v of s_e s_e*``."""
    edges = graph.edges_from(v)
    if not edges:
        raise RelationError(f"v{v} is not regular")
    out = StarPolynomial.of(p(VertexSet.finite([v])))
    for e in edges:
        out = out - _range_proj(e.id)
    return out


def _sum_range_proj(vertices: Iterable[int], graph) -> StarPolynomial:
    return poly_sum((_range_proj(e.id) for w in vertices for e in graph.edges_from(w)), REL)


def phi_image(g: Gen, rg: RelativeUltragraph) -> StarPolynomial:
    if g.algebra != REL:
        raise RelationError(f"phi is defined on the relative algebra, got {g}")
    Y = rg.Y
    if g.kind == "p":
        return _proj(P(EXSet(g.arg))) + _proj(P(EXSet(VertexSet.empty(), (g.arg & Y).as_primed())))
    e = rg.graph.edge(g.arg)
    image = StarPolynomial.of(S(e.id))
    if not (e.range & Y).is_empty():
        image = image + StarPolynomial.of(S(e.id + "'"))
    return image if g.kind == "s" else image.star()


def psi_image(g: Gen, rg: RelativeUltragraph) -> StarPolynomial:
    if g.algebra != ABS:
        raise RelationError(f"psi is defined on the lifted algebra, got {g}")
    graph, Y = rg.graph, rg.Y
    if g.kind == "P":
        a, b_y = decompose(g.arg, rg)
        a_y = a & Y
        out = _proj(p(a)) - _proj(p(a_y)) + _sum_range_proj(_finite(a_y, "A∩Y"), graph)
        return out + poly_sum((q_of(w, graph) for w in _finite(b_y, "B∩Y")), REL)
    f = g.arg
    if f.endswith("'"):
        e = graph.edge(f[:-1])
        r_y = e.range & Y
        if r_y.is_empty():
            raise RelationError(f"edge {f} does not exist: r({e.id}) misses Y")
        tail = _proj(p(r_y)) - _sum_range_proj(_finite(r_y, f"r({e.id})∩Y"), graph)
    else:
        e = graph.edge(f)
        r_y = e.range & Y
        tail = _proj(p(e.range)) - _proj(p(r_y)) + _sum_range_proj(_finite(r_y, f"r({e.id})∩Y"), graph)
    image = StarPolynomial.of(s(e.id)) * tail
    return image if g.kind == "S" else image.star()


def substitute(poly: StarPolynomial, image: Callable[[Gen], StarPolynomial]) -> StarPolynomial:
    """Replace every symbol by its image and multiply out."""
    out = None
    for word, c in poly.terms.items():
        acc = image(word[0])
        for gen in word[1:]:
            acc = acc * image(gen)
        acc = acc * c
        out = acc if out is None else out + acc
    if out is None:
        raise RelationError("cannot substitute into the zero polynomial without a target algebra")
    return out


# -- matrix representations -----------------------------------------------


@dataclass(frozen=True)
class BasisPoint:
    point: object
    depth: int
    index: int  # interval / vertex carrying the point


class MatrixRep:
    """Lazily assigns exact sparse matrices to generator symbols on a fixed basis.

    ``resolver`` returns the matrix of a symbol; adjoints fall back to the
    transpose when the resolver returns ``None`` for a starred symbol.
    """

    def __init__(self, basis: Sequence[BasisPoint], depth_bound: int, resolver: Callable[[Gen], SparseMatrix | None],
                 algebra: str = REL, name: str = "rep"):
        self.basis = list(basis)
        self.depth_bound = depth_bound
        self.algebra = algebra
        self.name = name
        self._resolver = resolver
        self._cache: dict[Gen, SparseMatrix] = {}
        self.position = {b.point: k for k, b in enumerate(self.basis)}
        if len(self.position) != len(self.basis):
            raise RelationError("basis points must be distinct")

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def min_depth(self) -> int:
        return min((b.depth for b in self.basis), default=0)

    def matrix(self, g: Gen) -> SparseMatrix:
        if g.algebra != self.algebra:
            raise RelationError(f"{g} is not a symbol of {self.algebra}")
        if g not in self._cache:
            m = self._resolver(g)
            if m is None and g.kind.endswith("*"):
                m = self.matrix(g.star()).transpose()
            if m is None:
                raise RelationError(f"{g} is not assigned in {self.name}")
            self._cache[g] = m
        return self._cache[g]

    def override(self, g: Gen, m: SparseMatrix) -> "MatrixRep":
        """A copy with one symbol reassigned (used to build mutated representations)."""
        base = self

        def resolver(h: Gen):
            if h == g:
                return m
            if h == g.star() and g.kind in ("s", "S"):
                return m.transpose()
            return base.matrix(h)

        return MatrixRep(self.basis, self.depth_bound, resolver, self.algebra, self.name + "*mutated")

    def columns_up_to(self, depth: int) -> list[int]:
        return [k for k, b in enumerate(self.basis) if b.depth <= depth]


def word_excursion(word: Word) -> int:
    """Largest depth rise over the suffixes of ``word`` (applied right to left)."""
    level = top = 0
    for g in reversed(word):
        level += g.excursion
        top = max(top, level)
    return top


def safe_depth(poly: StarPolynomial, depth_bound: int) -> int:
    return depth_bound - max((word_excursion(w) for w in poly.terms), default=0)


def evaluate(poly: StarPolynomial, rep: MatrixRep) -> tuple[SparseMatrix, int]:
    safe = safe_depth(poly, rep.depth_bound)
    if safe < rep.min_depth:
        raise GuardBandError(f"depth bound {rep.depth_bound} leaves no safe basis vector for {poly}")
    total = SparseMatrix.zero(rep.size)
    for word, c in poly.terms.items():
        m = rep.matrix(word[-1])
        for g in reversed(word[:-1]):
            m = rep.matrix(g) @ m
        total = total + m.scale(c)
    return total, safe


def zero_witness(m: SparseMatrix, rep: MatrixRep, safe: int) -> BasisPoint | None:
    """The first basis vector at depth <= ``safe`` on which ``m`` is nonzero."""
    for j in m.nonzero_columns():
        if rep.basis[j].depth <= safe:
            return rep.basis[j]
    return None


def check_zero(poly: StarPolynomial, rep: MatrixRep) -> BasisPoint | None:
    m, safe = evaluate(poly, rep)
    return zero_witness(m, rep, safe)


# -- the relation suite ---------------------------------------------------


@dataclass
class RelationScope:
    sets: list = field(default_factory=list)  # VertexSets in E
    edges: list = field(default_factory=list)  # edge ids
    vertices: list = field(default_factory=list)

    @classmethod
    def up_to(cls, graph, k: int) -> "RelationScope":
        """Vertices and edges with source index <= k, singletons, edge ranges and small unions."""
        vertices = list(range(1, k + 1))
        edges = [e for v in vertices for e in graph.edges_from(v)]
        sets = [VertexSet.empty()] + [VertexSet.finite([v]) for v in vertices]
        sets += [VertexSet.finite([v, v + 1]) for v in range(1, k)]
        sets += [e.range for e in edges]
        uniq = sorted(set(sets), key=VertexSet.sort_key)
        return cls(uniq, [e.id for e in edges], vertices)


class _Tally:
    """Accumulates identity instances into one report line per identity."""

    def __init__(self, name: str, anchor: str, scope: dict):
        self.name, self.anchor, self.scope = name, anchor, scope
        self.count = 0
        self.failures: list[tuple[str, BasisPoint]] = []

    def expect_zero(self, subject: str, poly: StarPolynomial, rep: MatrixRep) -> None:
        self.count += 1
        if poly.is_zero():
            return
        w = check_zero(poly, rep)
        if w is not None:
            self.failures.append((subject, w))

    def result(self, subject: str) -> CheckResult:
        if self.failures:
            shown = self.failures[:5]
            return CheckResult(
                self.name, self.anchor, subject, Verdict.FAILS, self.scope,
                [{"instance": s_, "basis_point": b.point, "depth": b.depth, "interval": b.index} for s_, b in shown],
                f"{len(self.failures)} of {self.count} instances nonzero",
            )
        return CheckResult(self.name, self.anchor, subject, Verdict.HOLDS, self.scope, [],
                           f"{self.count} instances zero within guard bands")


def _pp(a: VertexSet) -> StarPolynomial:
    return _proj(p(a))


def relation_suite(rep: MatrixRep, rg: RelativeUltragraph, scope: RelationScope, subject: str = "rep") -> Report:
    graph, Y = rg.graph, rg.Y
    sc = {"depth": rep.depth_bound, "basis": rep.size, "sets": len(scope.sets), "edges": len(scope.edges)}
    tallies = {}

    def tally(name, anchor):
        tallies[name] = _Tally(name, anchor, sc)
        return tallies[name]

    t = tally("rel.p-empty", "projections: p of the empty set vanishes")
    t.expect_zero("p[{}]", StarPolynomial.of(p(VertexSet.empty())), rep)

    meet = tally("rel.p-meet", "projections: p_A p_B = p_(A∩B)")
    join = tally("rel.p-join", "projections: p_(A∪B) = p_A + p_B - p_(A∩B)")
    for a, b in product(scope.sets, repeat=2):
        meet.expect_zero(f"{a},{b}", _pp(a) * _pp(b) - _pp(a & b), rep)
        join.expect_zero(f"{a},{b}", _pp(a | b) - _pp(a) - _pp(b) + _pp(a & b), rep)

    ss = tally("rel.s*s=p_r", "edges: s_e* s_e = p_r(e)")
    absorb = tally("rel.ss*<=p_s", "edges: s_e s_e* <= p_s(e)")
    piso = tally("rel.partial-isometry", "edges: s_e s_e* s_e = s_e")
    orth = tally("rel.orthogonal-ranges", "edges: orthogonal ranges")
    for eid in scope.edges:
        e = graph.edge(eid)
        ss.expect_zero(eid, StarPolynomial.of(s_star(eid), s(eid)) - _pp(e.range), rep)
        absorb.expect_zero(eid, _pp(VertexSet.finite([e.source])) * _range_proj(eid) - _range_proj(eid), rep)
        piso.expect_zero(eid, StarPolynomial.of(s(eid), s_star(eid), s(eid)) - StarPolynomial.of(s(eid)), rep)
        for fid in scope.edges:
            if fid != eid:
                orth.expect_zero(f"{eid},{fid}", StarPolynomial.of(s_star(eid), s(fid)), rep)

    ck = tally("rel.ck", "Cuntz-Krieger relation at v in X")
    for v in scope.vertices:
        if v in rg.X:
            ck.expect_zero(f"v{v}", q_of(v, graph), rep)

    def sum_ss(a):
        return _sum_range_proj(_finite(a & Y, "A∩Y"), graph)

    def sum_q(b):
        return poly_sum((q_of(w, graph) for w in _finite(b & Y, "B∩Y")), REL)

    ids = [tally(f"rel.q-identity-{k}", f"computational identity {k} for q_w and s_e s_e*") for k in range(1, 7)]
    for a, b in product(scope.sets, repeat=2):
        tag = f"{a},{b}"
        ids[0].expect_zero(tag, _pp(a) * sum_ss(b) - _pp(a & Y) * sum_ss(b), rep)
        ids[1].expect_zero(tag, sum_ss(a) * _pp(b) - sum_ss(a) * _pp(b & Y), rep)
        ids[2].expect_zero(tag, _pp(a) * sum_q(b) - _pp(a & Y) * sum_q(b), rep)
        ids[3].expect_zero(tag, sum_q(a) * _pp(b) - sum_q(a) * _pp(b & Y), rep)
        ids[4].expect_zero(tag, sum_ss(a) * sum_q(b), rep)
        ids[4].expect_zero(tag + " (mirrored)", sum_q(a) * sum_ss(b), rep)
        ids[5].expect_zero(tag, sum_q(a) * sum_q(b) - sum_q(a & b), rep)
    y_scope = [v for v in scope.vertices if v in Y]
    for w, v in product(y_scope, repeat=2):
        expected = q_of(w, graph) if w == v else StarPolynomial.zero(REL)
        ids[5].expect_zero(f"q_v{w} q_v{v}", q_of(w, graph) * q_of(v, graph) - expected, rep)

    ortho = tally("rel.orthogonality", "mutually orthogonal projections p_A - p_(A∩Y), s_e s_e*, q_v")
    for a, b in product(scope.sets, repeat=2):
        projs = [(f"p[{a}]-p[{a & Y}]", _pp(a) - _pp(a & Y))]
        projs += [(f"s_{e.id}s_{e.id}*", _range_proj(e.id)) for w in _finite(a & Y, "A∩Y") for e in graph.edges_from(w)]
        projs += [(f"q_v{w}", q_of(w, graph)) for w in _finite(b & Y, "B∩Y")]
        for (n1, x1), (n2, x2) in product(projs, repeat=2):
            target = x1 if n1 == n2 else StarPolynomial.zero(REL)
            ortho.expect_zero(f"Z=({a},{b}) {n1}·{n2}", x1 * x2 - target, rep)

    return Report(t.result(subject) for t in tallies.values())


def ck_check(rep: MatrixRep, graph, v: int, subject: str = "rep") -> CheckResult:
    """CK at a single vertex, regardless of whether it lies in X."""
    t = _Tally("rel.ck", "Cuntz-Krieger relation at a single vertex", {"depth": rep.depth_bound})
    t.expect_zero(f"v{v}", q_of(v, graph), rep)
    return t.result(f"{subject} v{v}")


def scope_generators(scope: RelationScope) -> list[Gen]:
    gens = [p(a) for a in scope.sets if not a.is_empty()]
    for eid in scope.edges:
        gens += [s(eid), s_star(eid)]
    return gens


def psi_phi_identity_check(rep: MatrixRep, rg: RelativeUltragraph, scope: RelationScope,
                           subject: str = "rep") -> Report:
    """psi(phi(g)) - g vanishes for each generator, by formal substitution."""
    report = Report()
    for g in scope_generators(scope):
        poly = substitute(phi_image(g, rg), lambda h: psi_image(h, rg)) - StarPolynomial.of(g)
        try:
            w = None if poly.is_zero() else check_zero(poly, rep)
        except GuardBandError as exc:
            report.add(CheckResult("rel.psi-phi", "psi inverts phi", f"{subject} {g}", Verdict.UNDETERMINED,
                                   {"depth": rep.depth_bound}, [], str(exc)))
            continue
        verdict = Verdict.HOLDS if w is None else Verdict.FAILS
        wit = [] if w is None else [{"basis_point": w.point, "depth": w.depth}]
        report.add(CheckResult("rel.psi-phi", "psi inverts phi", f"{subject} {g}", verdict,
                               {"depth": rep.depth_bound}, wit, f"{len(poly)} words after substitution"))
    return report
