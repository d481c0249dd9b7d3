"""Concrete representations: Markov operators, branching systems, their lift,
and the equivalence and injectivity checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
import re

from .markov import (
    EscapeData,
    MarkovMap,
    OrbitSearch,
    RepresentationError,
    backward_orbit,
    induced_ultragraph,
    x_hypothesis_check,
)
from .markov.orbit import OrbitTree
from .relations import (
    ABS,
    REL,
    BasisPoint,
    Gen,
    GuardBandError,
    MatrixRep,
    RelationScope,
    P,
    S,
    S_star,
    StarPolynomial,
    evaluate,
    psi_image,
    scope_generators,
    word_excursion,
    zero_witness,
)
from .report import CheckResult, Report, Verdict
from .sparse import SparseMatrix
from .ultragraph import Cycle, Edge, RelativeUltragraph, Ultragraph, decompose, lift, range_Y_finite
from .vertexset import EXSet, VertexSet


# -- the Markov representation built directly from the operator formulas --


@dataclass
class MarkovSetup:
    """Everything the Markov-side constructions share."""

    m: MarkovMap
    ed: EscapeData
    X: VertexSet
    depth: int
    horizon: int
    tree: OrbitTree
    graph: Ultragraph

    @cached_property
    def rg(self) -> RelativeUltragraph:
        return RelativeUltragraph(self.graph, self.X)

    @cached_property
    def basis(self) -> list[BasisPoint]:
        return [BasisPoint(nd.point, nd.depth, nd.index) for nd in self.tree.ordered()]

    def edge_index(self, eid: str) -> int:
        i = self.graph.edge(eid).source
        if i > self.horizon:
            raise RepresentationError(f"edge {eid} lies beyond the horizon N={self.horizon}")
        return i


def markov_setup(m: MarkovMap, ed: EscapeData, X: VertexSet, D: int, N: int, check_hypothesis: bool = True) -> MarkovSetup:
    if check_hypothesis:
        hyp = x_hypothesis_check(m, ed.J, X, N)
        if hyp.failures:
            bad = ", ".join(r.subject for r in hyp.failures if r.subject != "X")
            raise RepresentationError(f"hypothesis on X fails at {bad or 'X'}")
    tree = backward_orbit(m, ed, D, N)
    if not tree.nodes:
        raise RepresentationError(f"depth {D} yields an empty orbit tree")
    return MarkovSetup(m, ed, X, D, N, tree, induced_ultragraph(m, N))


def build_markov_rep(m: MarkovMap, ed: EscapeData, X: VertexSet, D: int, N: int,
                     setup: MarkovSetup | None = None) -> MatrixRep:
    """``W_B``, ``T_e`` and ``T_e*`` on the truncated orbit, straight from their formulas."""
    su = setup or markov_setup(m, ed, X, D, N)
    basis = su.basis
    pos = {b.point: k for k, b in enumerate(basis)}

    def resolver(g: Gen) -> SparseMatrix:
        if g.kind == "p":
            return SparseMatrix.diagonal(len(basis), [k for k, b in enumerate(basis) if b.index in g.arg])
        i = su.edge_index(g.arg)
        row = su.graph.edge(g.arg).range
        iv = m.interval(i)
        mapping = {}
        if g.kind == "s":
            for k, b in enumerate(basis):
                if b.index in row:
                    pre = [z for z, _ in iv.preimages(b.point) if iv.interior(z)]
                    if pre and pre[0] in pos:
                        mapping[k] = pos[pre[0]]
        else:  # adjoint: chi_{I_i}(y) delta_{g(y)} restricted to the range
            for k, b in enumerate(basis):
                if b.index == i:
                    gy = m.g(b.point)
                    if gy in pos and basis[pos[gy]].index in row:
                        mapping[k] = pos[gy]
        return SparseMatrix.from_map(len(basis), mapping)

    return MatrixRep(basis, D, resolver, REL, "nu")


# -- branching systems ----------------------------------------------------


@dataclass
class BranchingSystem:
    """A relative branching system on a finite, depth-labelled point space.

    ``complete`` means the point space is the whole measure space (so empty
    sets are genuinely empty); ``depth1_complete`` means every point outside
    the union of the ``R_e`` has been enumerated.
    """

    graph: Ultragraph
    X: VertexSet
    points: list
    D: dict  # vertex -> frozenset of points
    R: dict  # edge id -> frozenset
    f: dict  # edge id -> {y: f_e(y)}
    depth_bound: int
    vertex_horizon: int
    complete: bool = False
    depth1_complete: bool = False

    @cached_property
    def depth_of(self) -> dict:
        return {b.point: b.depth for b in self.points}

    @cached_property
    def rg(self) -> RelativeUltragraph:
        return RelativeUltragraph(self.graph, self.X)

    @cached_property
    def _memo(self) -> dict:
        return {}

    def D_of(self, a: VertexSet) -> frozenset:
        key = ("D", a)
        if key not in self._memo:
            self._memo[key] = frozenset().union(*(pts for v, pts in self.D.items() if v in a))
        return self._memo[key]

    @cached_property
    def _edges(self) -> list[Edge]:
        return sorted((self.graph.edge(eid) for eid in self.R), key=Edge.sort_key)

    def edges(self) -> list[Edge]:
        return list(self._edges)

    def edges_from(self, v: int) -> list[str]:
        return [e.id for e in self._edges if e.source == v]

    def R_from(self, v: int) -> frozenset:
        return frozenset().union(*(self.R[eid] for eid in self.edges_from(v)))

    def R_over(self, a: VertexSet) -> frozenset:
        key = ("R", a)
        if key not in self._memo:
            self._memo[key] = frozenset().union(*(self.R[e.id] for e in self._edges if e.source in a))
        return self._memo[key]

    def q_set(self, v: int) -> frozenset:
        return self.D.get(v, frozenset()) - self.R_from(v)

    def check_axioms(self, subject: str = "branching system") -> Report:
        report = Report()
        anchor = "relative branching system axioms"
        sc = {"depth": self.depth_bound, "points": len(self.points)}

        def add(name, bad, detail):
            verdict = Verdict.FAILS if bad else Verdict.HOLDS
            report.add(CheckResult(name, anchor, subject, verdict, sc, bad[:5], detail))

        vs = sorted(self.D)
        add("bs.D-disjoint", [f"{p_} in D_v{v} and D_v{w}" for i, v in enumerate(vs) for w in vs[i + 1:]
                              for p_ in sorted(self.D[v] & self.D[w])], "vertex sets pairwise disjoint")
        es = self.edges()
        add("bs.R-disjoint", [f"{p_} in R_{e.id} and R_{h.id}" for i, e in enumerate(es) for h in es[i + 1:]
                              for p_ in sorted(self.R[e.id] & self.R[h.id])], "R_e pairwise disjoint")
        add("bs.R-in-D", [f"{p_} in R_{e.id} outside D_v{e.source}" for e in es
                          for p_ in sorted(self.R[e.id] - self.D.get(e.source, frozenset()))], "R_e inside D_s(e)")
        bad = []
        for v in vs:
            if v in self.X:
                bad += [f"{p_} in D_v{v} but in no R_e" for p_ in sorted(self.q_set(v))]
        add("bs.X-complete", bad, "D_v is the union of R_e for v in X")
        bad = []
        for e in es:
            fe, dom = self.f[e.id], self.D_of(e.range)
            bad += [f"f_{e.id} defined at {y} outside D_r" for y in sorted(set(fe) - dom)]
            bad += [f"f_{e.id}({y}) = {z} outside R" for y, z in sorted(fe.items()) if z not in self.R[e.id]]
            if len(set(fe.values())) != len(fe):
                bad.append(f"f_{e.id} not injective")
            bad += [f"{z} in R_{e.id} has no f-preimage" for z in sorted(self.R[e.id] - set(fe.values()))]
            bad += [f"f_{e.id} undefined at {y} (depth {self.depth_of[y]})" for y in sorted(dom - set(fe))
                    if self.depth_of[y] < self.depth_bound]
            inv = {z: y for y, z in fe.items()}
            bad += [f"f_{e.id}^-1 f_{e.id} moves {y}" for y in fe if inv[fe[y]] != y]
        add("bs.f-bijection", bad, "f_e: D_r(e) -> R_e bijective (scoped below the depth bound)")
        return report


def branching_from_markov(m: MarkovMap, ed: EscapeData, D: int, N: int, X: VertexSet | None = None,
                          setup: MarkovSetup | None = None) -> BranchingSystem:
    """``D_v = I_v ∩ R_g(x)``, ``R_{e_i}`` the tree points in ``I_i`` with a parent, ``f_{e_i}`` from parent links."""
    su = setup or markov_setup(m, ed, X if X is not None else VertexSet.empty(), D, N, check_hypothesis=X is not None)
    Dsets: dict[int, set] = {}
    R: dict[str, set] = {}
    f: dict[str, dict] = {}
    eid_of = {i: su.graph.edges_from(i)[0].id for i in range(1, N + 1)}
    for i in range(1, N + 1):
        R[eid_of[i]] = set()
        f[eid_of[i]] = {}
    for nd in su.tree.nodes.values():
        Dsets.setdefault(nd.index, set()).add(nd.point)
        if nd.image in su.tree.nodes:
            eid = eid_of[nd.index]
            R[eid].add(nd.point)
            f[eid][nd.image] = nd.point
    return BranchingSystem(
        su.graph, su.X, su.basis, {v: frozenset(s_) for v, s_ in Dsets.items()},
        {e: frozenset(s_) for e, s_ in R.items()}, f, D, N, complete=False, depth1_complete=True,
    )


def identity_loop_system(points=(Fraction(0), Fraction(1))) -> BranchingSystem:
    """One vertex, one loop, ``f`` the identity on a two-point space."""
    e = Edge("e1", 1, VertexSet.finite([1]))
    g = Ultragraph((e,))
    pts = [BasisPoint(Fraction(x), 1, 1) for x in points]
    allp = frozenset(b.point for b in pts)
    return BranchingSystem(g, VertexSet.finite([1]), pts, {1: allp}, {"e1": allp},
                           {"e1": {y: y for y in allp}}, 1, 1, complete=True, depth1_complete=True)


def rep_from_branching(bs: "BranchingSystem | LiftedBranchingSystem") -> MatrixRep:
    if isinstance(bs, LiftedBranchingSystem):
        return bs.rep()
    pos = {b.point: k for k, b in enumerate(bs.points)}
    n = len(bs.points)

    def resolver(g: Gen):
        if g.kind == "p":
            return SparseMatrix.diagonal(n, [pos[y] for y in bs.D_of(g.arg)])
        if g.kind == "s":
            if g.arg not in bs.f:
                raise RepresentationError(f"edge {g.arg} is outside the branching system")
            dom = bs.D_of(bs.graph.edge(g.arg).range)
            return SparseMatrix.from_map(n, {pos[y]: pos[z] for y, z in bs.f[g.arg].items() if y in dom})
        return None

    return MatrixRep(bs.points, bs.depth_bound, resolver, REL, "pi")


# -- the lifted system ----------------------------------------------------


@dataclass
class LiftedBranchingSystem:
    base: BranchingSystem
    lifted_graph: Ultragraph

    @property
    def rg(self) -> RelativeUltragraph:
        return self.base.rg

    @property
    def Y(self) -> VertexSet:
        return self.base.rg.Y

    def _vertices_in(self, a: VertexSet) -> list[int]:
        return sorted(v for v in self.base.D if v in a)

    @cached_property
    def _memo(self) -> dict:
        return {}

    def B(self, z: EXSet) -> frozenset:
        if z not in self._memo:
            self._memo[z] = self._B(z)
        return self._memo[z]

    def _B(self, z: EXSet) -> frozenset:
        a, b_y = decompose(z, self.rg)
        bs, Y = self.base, self.Y
        a_y = a & Y
        out = (bs.D_of(a) - bs.D_of(a_y)) | bs.R_over(a_y)
        for v in self._vertices_in(b_y):
            out |= bs.q_set(v)
        return out

    def r_X(self, fid: str) -> EXSet:
        e = self.lifted_graph.edge(fid)
        if e.primed:
            return EXSet(VertexSet.empty(), e.range)
        return EXSet(e.range)

    def edge_ids(self) -> list[str]:
        out = []
        for eid in self.base.R:
            out.append(eid)
            if self.lifted_graph.has_edge(eid + "'"):
                out.append(eid + "'")
        return out

    def g(self, fid: str) -> dict:
        key = ("g", fid)
        if key not in self._memo:
            dom = self.B(self.r_X(fid))
            self._memo[key] = {y: z for y, z in self.base.f[fid.rstrip("'")].items() if y in dom}
        return self._memo[key]

    def Q(self, fid: str) -> frozenset:
        key = ("Q", fid)
        if key not in self._memo:
            self._memo[key] = frozenset(self.g(fid).values())
        return self._memo[key]

    def Q_display(self, fid: str) -> frozenset:
        """``Q_f`` straight from the displayed set formulas, for cross-checking ``Q``."""
        bs, Y = self.base, self.Y
        e = bs.graph.edge(fid.rstrip("'"))
        fe = bs.f[e.id]
        image = lambda pts: frozenset(fe[y] for y in pts if y in fe)  # noqa: E731
        r_y = e.range & Y
        if fid.endswith("'"):
            return image(frozenset().union(*(bs.q_set(v) for v in self._vertices_in(r_y))))
        return (image(bs.D_of(e.range)) - image(bs.D_of(r_y))) | image(bs.R_over(r_y))

    def rep(self) -> MatrixRep:
        pts = self.base.points
        pos = {b.point: k for k, b in enumerate(pts)}
        n = len(pts)

        def resolver(h: Gen):
            if h.kind == "P":
                return SparseMatrix.diagonal(n, [pos[y] for y in self.B(h.arg)])
            if h.kind == "S":
                return SparseMatrix.from_map(n, {pos[y]: pos[z] for y, z in self.g(h.arg).items()})
            return None

        return MatrixRep(pts, self.base.depth_bound, resolver, ABS, "pi_lift")

    def check(self, sets: list[VertexSet], subject: str = "lifted system") -> Report:
        """The six disjointness facts plus the branching axioms of the lift."""
        bs, Y = self.base, self.Y
        report = Report()
        sc = {"depth": bs.depth_bound, "points": len(bs.points), "sets": len(sets)}

        def add(name, anchor, bad, detail):
            report.add(CheckResult(name, anchor, subject, Verdict.FAILS if bad else Verdict.HOLDS, sc, bad[:5], detail))

        def d_part(a):
            return bs.D_of(a) - bs.D_of(a & Y)

        def r_part(a):
            return bs.R_over(a & Y)

        def q_part(b):
            return frozenset().union(*(bs.q_set(v) for v in self._vertices_in(b & Y)))

        pairs = [("D\\D_Y", d_part), ("R", r_part), ("q", q_part)]
        bad = []
        count = 0
        for a1 in sets:
            for a2 in sets:
                for (n1, f1), (n2, f2) in ((x, y) for x in pairs for y in pairs if x[0] != y[0]):
                    count += 1
                    hit = f1(a1) & f2(a2)
                    if hit:
                        bad.append(f"{n1}({a1}) ∩ {n2}({a2}) ∋ {min(hit)}")
        add("lift.disjointness", "six disjointness facts for the pieces of B_Z", bad, f"{count} intersections empty")

        fids = self.edge_ids()
        bad = [f"{fid}: {sorted(self.Q(fid) ^ self.Q_display(fid))[:3]}" for fid in fids
               if self.Q(fid) != self.Q_display(fid)]
        add("lift.Q-display", "Q_f equals the displayed formula", bad, f"{len(fids)} edges")

        bad = []
        for i, f1 in enumerate(fids):
            for f2 in fids[i + 1:]:
                hit = self.Q(f1) & self.Q(f2)
                if hit:
                    bad.append(f"Q_{f1} ∩ Q_{f2} ∋ {min(hit)}")
        add("lift.Q-disjoint", "Q_f pairwise disjoint", bad, f"{len(fids)} edges")

        bad = []
        for eid in bs.R:
            if eid + "'" in fids:
                whole = frozenset(bs.f[eid][y] for y in bs.D_of(bs.graph.edge(eid).range) if y in bs.f[eid])
                if self.Q(eid) | self.Q(eid + "'") != whole:
                    bad.append(eid)
        add("lift.Q-split", "Q_e ∪ Q_e' = f_e(D_r(e))", bad, "for every edge with a primed copy")

        bad = []
        for fid in fids:
            src = self.lifted_graph.edge(fid).source
            bad += [f"{y} in Q_{fid} outside B_v{src}" for y in sorted(self.Q(fid) - self.B(EXSet(VertexSet.finite([src]))))]
        add("lift.Q-in-B", "Q_f inside B_s(f)", bad, f"{len(fids)} edges")

        bad = []
        for v in sorted(bs.D):
            if v > bs.vertex_horizon or not bs.edges_from(v):
                continue
            bv = self.B(EXSet(VertexSet.finite([v])))
            qs = frozenset().union(*(self.Q(fid) for fid in fids if self.lifted_graph.edge(fid).source == v))
            missing = {y for y in bv - qs if bs.depth_of[y] < bs.depth_bound}
            if missing or qs - bv:
                bad.append(f"v{v}: {sorted(missing | (qs - bv))[:3]}")
        add("lift.ck", "B_v = union of Q_f over s(f)=v (scoped below the depth bound)", bad, "every regular vertex")

        bad = []
        zs = [EXSet(a) for a in sets] + [EXSet(VertexSet.empty(), VertexSet.finite([v], primed=True))
                                         for v in self._vertices_in(Y)]
        for z1 in zs:
            for z2 in zs:
                if self.B(z1.intersect(z2)) != self.B(z1) & self.B(z2):
                    bad.append(f"B meet fails at {z1},{z2}")
                if self.B(z1.union(z2)) != self.B(z1) | self.B(z2):
                    bad.append(f"B join fails at {z1},{z2}")
        add("lift.B-boolean", "B_Z respects unions and intersections", bad, f"{len(zs)} sets")
        return report


def lift_branching(bs: BranchingSystem) -> LiftedBranchingSystem:
    rg = bs.rg
    if not range_Y_finite(rg):
        raise RepresentationError("some range meets Y in an infinite set")
    return LiftedBranchingSystem(bs, lift(rg).graph)


# -- equivalence and diagram checks ---------------------------------------


def _mismatch(a: SparseMatrix, b: SparseMatrix, rep: MatrixRep, safe: int) -> BasisPoint | None:
    return zero_witness(a - b, rep, safe)


def check_nu_equals_pi(m: MarkovMap, ed: EscapeData, X: VertexSet, D: int, N: int, k: int = 6) -> Report:
    su = markov_setup(m, ed, X, D, N)
    nu = build_markov_rep(m, ed, X, D, N, setup=su)
    pi = rep_from_branching(branching_from_markov(m, ed, D, N, X, setup=su))
    report = Report()
    scope = RelationScope.up_to(su.graph, min(k, N))
    for g in scope_generators(scope):
        w = _mismatch(nu.matrix(g), pi.matrix(g), nu, D)
        report.add(CheckResult("equiv.nu=pi", "nu_x and pi_x agree on generators", str(g),
                               Verdict.HOLDS if w is None else Verdict.FAILS, {"depth": D, "horizon": N},
                               [] if w is None else [{"basis_point": w.point, "depth": w.depth}],
                               "exact matrix equality on the full basis"))
    return report


def lifted_scope(lbs: LiftedBranchingSystem, scope: RelationScope) -> list[Gen]:
    Y = lbs.Y
    zs = [EXSet(a) for a in scope.sets if not a.is_empty()]
    ys = [v for v in scope.vertices if v in Y]
    zs += [EXSet(VertexSet.empty(), VertexSet.finite([v], primed=True)) for v in ys]
    if ys:
        zs += [EXSet(a, VertexSet.finite(ys, primed=True)) for a in scope.sets]
    gens = [P(z) for z in dict.fromkeys(zs)]
    for eid in scope.edges:
        for fid in (eid, eid + "'"):
            if lbs.lifted_graph.has_edge(fid):
                gens += [S(fid), S_star(fid)]
    return gens


def check_diagram(bs: BranchingSystem, scope: RelationScope, subject: str = "diagram") -> Report:
    """``pi = eta ∘ psi`` on every scoped generator of the lifted algebra."""
    lbs = lift_branching(bs)
    eta, pi = rep_from_branching(bs), lbs.rep()
    report = Report()
    for g in lifted_scope(lbs, scope):
        image = psi_image(g, bs.rg)
        sc = {"depth": bs.depth_bound}
        try:
            if image.is_zero():
                lhs, safe = SparseMatrix.zero(eta.size), eta.depth_bound
            else:
                lhs, safe = evaluate(image, eta)
        except GuardBandError as exc:
            report.add(CheckResult("diagram.pi=eta-psi", "pi equals eta after psi", f"{subject} {g}",
                                   Verdict.UNDETERMINED, sc, [], str(exc)))
            continue
        safe = min(safe, bs.depth_bound - word_excursion((g,)))
        w = _mismatch(lhs, pi.matrix(g), eta, safe)
        report.add(CheckResult("diagram.pi=eta-psi", "pi equals eta after psi", f"{subject} {g}",
                               Verdict.HOLDS if w is None else Verdict.FAILS, {**sc, "safe_depth": safe},
                               [] if w is None else [{"basis_point": w.point, "depth": w.depth}],
                               f"psi image has {len(image)} words"))
    return report


# -- injectivity ----------------------------------------------------------


def _qualifying_cycles(graph: Ultragraph, Y: VertexSet, maxlen: int, horizon: int) -> list[Cycle]:
    return [c for c in graph.find_cycles(maxlen, horizon)
            if not graph.has_exit(c) and all((e.range & Y).is_empty() for e in c.edges)]


def _power_free_witness(candidates, step, periods: int):
    """First candidate x with ``step^n(x) != x`` for n = 1..periods; None entries of step mean undefined."""
    all_fixed, closed = True, True
    for x in candidates:
        y, moved, defined = x, True, True
        for _ in range(periods):
            y = step(y)
            if y is None:
                defined = closed = False
                break
            if y == x:
                moved = False
                break
        if defined and moved:
            return x, False
        if defined and step(x) != x:
            all_fixed = False
        if not defined:
            all_fixed = False
    return None, all_fixed and closed


def injectivity_markov(m: MarkovMap, ed: EscapeData, X: VertexSet, D: int, N: int, cycles: int = 4,
                       periods: int = 4, setup: MarkovSetup | None = None) -> Report:
    su = setup or markov_setup(m, ed, X, D, N, check_hypothesis=False)
    rg, tree = su.rg, su.tree
    Y = rg.Y
    report = Report()
    sc = {"depth": D, "horizon": N, "cycles": cycles}
    search = OrbitSearch(m, ed, N)

    def first(nodes):
        return nodes[0].point if nodes else None

    def record(cond, anchor, subject, verdict, wit, detail):
        report.add(CheckResult(cond, anchor, subject, verdict, sc, wit, detail))

    a1 = "the orbit of the target meets I_i"
    for i in X.enumerate_up_to(N):
        w = first(tree.in_interval(i))
        how = "orbit tree"
        if w is None:
            w, how = search.find(i), "itinerary search"
        if w is None:
            record("inj.1", a1, f"v{i}", Verdict.UNDETERMINED, [], "no orbit point found at scope")
        else:
            record("inj.1", a1, f"v{i}", Verdict.HOLDS, [w], f"witness from {how}")

    a2 = "some y in I_i maps into the orbit inside r(e_i)"
    a3 = "I_i meets the orbit inside g^-1(E_J)"
    for i in Y.enumerate_up_to(N):
        w = first([nd for nd in tree.in_interval(i) if nd.depth >= 2])
        how = "orbit tree"
        if w is None:
            w, how = search.find(i, min_steps=1), "itinerary search"
        if w is None:
            record("inj.2", a2, f"v{i}", Verdict.UNDETERMINED, [], "no witness at scope")
        else:
            record("inj.2", a2, f"v{i}", Verdict.HOLDS, [w, m.g(w)], f"witness y and g(y), from {how}")

        iv = m.interval(i)
        pre = [z for z, _ in iv.preimages(ed.target) if iv.interior(z)]
        if pre:
            record("inj.3", a3, f"v{i}", Verdict.HOLDS, [pre[0]], f"g({pre[0]}) = {ed.target} in E_{ed.J}")
        else:
            record("inj.3", a3, f"v{i}", Verdict.FAILS, [],
                   f"the target {ed.target} has no preimage in I_{i}: certified by exact solving")

    a4 = "exitless cycles outside Y have a non-periodic point"
    qual = _qualifying_cycles(su.graph, Y, cycles, N)
    if not qual:
        record("inj.4", a4, "cycles", Verdict.HOLDS, [], "vacuous: no exitless cycle avoids Y at scope")
    for c in qual:
        def step(y, c=c):
            for e in reversed(c.edges):
                iv = m.interval(e.source)
                pre = [z for z, _ in iv.preimages(y)]
                if not pre:
                    return None
                y = pre[0]
            return y

        start = c.edges[0].source
        w, _ = _power_free_witness([nd.point for nd in tree.in_interval(start)], step, periods)
        if w is None:
            record("inj.4", a4, str(c), Verdict.UNDETERMINED, [], f"no witness among tree points, n <= {periods}")
        else:
            record("inj.4", a4, str(c), Verdict.HOLDS, [w], f"f_(n alpha)(x) != x for n <= {periods}")
    return report


def injectivity_counting(bs: BranchingSystem, cycles: int = 4, periods: int = 4,
                         vertex_horizon: int | None = None) -> Report:
    """Conditions a)-d) on the enumerated point space; ``vertex_horizon`` narrows the vertex scope."""
    Y = bs.rg.Y
    top = min(vertex_horizon or bs.vertex_horizon, bs.vertex_horizon)
    report = Report()
    sc = {"depth": bs.depth_bound, "horizon": top, "cycles": cycles}

    def record(cond, anchor, subject, ok, wit, detail, certified):
        verdict = Verdict.HOLDS if ok else (Verdict.FAILS if certified else Verdict.UNDETERMINED)
        if not ok and not detail:
            detail = "empty: certified" if certified else "empty among the enumerated points"
        report.add(CheckResult(cond, anchor, subject, verdict, sc, wit, detail))

    for v in range(1, top + 1):
        if v in Y:
            continue
        pts = sorted(bs.D.get(v, ()), key=lambda y: (bs.depth_of[y], y))
        record("inj.a", "D_v nonempty for v outside Y", f"v{v}", bool(pts), pts[:1], "", bs.complete)
    for e in bs.edges():
        if e.source in Y and e.source <= top:
            pts = sorted(bs.R[e.id], key=lambda y: (bs.depth_of[y], y))
            record("inj.b", "R_e nonempty for s(e) in Y", e.id, bool(pts), pts[:1], "", bs.complete)
    for v in Y.enumerate_up_to(top):
        pts = sorted(bs.q_set(v), key=lambda y: (bs.depth_of[y], y))
        record("inj.c", "D_v minus the R_e nonempty for v in Y", f"v{v}", bool(pts), pts[:1], "",
               bs.complete or bs.depth1_complete)

    qual = _qualifying_cycles(bs.graph, Y, cycles, bs.vertex_horizon)
    a4 = "exitless cycles outside Y have a non-periodic point"
    if not qual:
        record("inj.d", a4, "cycles", True, [], "vacuous: no exitless cycle avoids Y at scope", True)
    for c in qual:
        def step(y, c=c):
            for e in reversed(c.edges):
                y = bs.f.get(e.id, {}).get(y)
                if y is None:
                    return None
            return y

        start = c.edges[0].source
        cands = sorted(bs.D.get(start, ()), key=lambda y: (bs.depth_of[y], y))
        w, identity = _power_free_witness(cands, step, periods)
        if w is not None:
            record("inj.d", a4, str(c), True, [w], f"f_(n alpha)(x) != x for n <= {periods}", False)
        else:
            detail = ("f_alpha is the identity on its closed domain" if identity
                      else f"no witness among enumerated points, n <= {periods}")
            record("inj.d", a4, str(c), False, [], detail, identity and bool(cands))
    return report


# -- export ---------------------------------------------------------------


def _fmt(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def export_matrices(rep: MatrixRep, gens: list[Gen], directory: str | Path) -> list[Path]:
    """Coordinate-list files (``row col value``) per generator plus ``basis.tsv``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "basis.tsv"]
    with written[0].open("w") as fh:
        fh.write("position\tpoint\tdepth\tinterval\n")
        for k, b in enumerate(rep.basis):
            pt = Fraction(b.point)
            fh.write(f"{k}\t{pt.numerator}/{pt.denominator}\t{b.depth}\t{b.index}\n")
    for g in gens:
        name = re.sub(r"[^A-Za-z0-9_.+-]+", "_", str(g).replace("*", "_adj").replace("'", "_prime")).strip("_")
        path = out / f"{rep.name}.{name}.coo"
        with path.open("w") as fh:
            fh.write(f"# {g} on {rep.size} basis vectors\n")
            for i, j, v in rep.matrix(g).entries():
                fh.write(f"{i} {j} {_fmt(v)}\n")
        written.append(path)
    return written
