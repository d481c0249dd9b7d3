from fractions import Fraction as F

import pytest

from ultramarkov.relations import P, RelationScope, S, p, s, s_star, scope_generators
from ultramarkov.rep import (
    RepresentationError,
    branching_from_markov,
    build_markov_rep,
    check_diagram,
    check_nu_equals_pi,
    export_matrices,
    identity_loop_system,
    injectivity_counting,
    injectivity_markov,
    lift_branching,
    markov_setup,
    rep_from_branching,
)
from ultramarkov.report import Verdict
from ultramarkov.vertexset import EXSet, VertexSet

fin = VertexSet.finite


def image_of(rep, gen, point):
    """``rep(gen) δ_point`` as ``{point: coefficient}``."""
    pos = {b.point: k for k, b in enumerate(rep.basis)}
    col = rep.matrix(gen).column(pos[point])
    return {rep.basis[i].point: c for i, c in col.items()}


def setup_for(ws, ed, name, D, N=32, X=None):
    w = ws(name)
    return w.markov, ed(name), X if X is not None else w.X, D, N


@pytest.fixture(scope="module")
def nu1_d3(ws, ed):
    return build_markov_rep(*setup_for(ws, ed, "example1", 3))


def test_nu_on_basis_example1(nu1_d3):
    half = F(1, 2)
    assert image_of(nu1_d3, s("e2"), half) == {F(5, 2): 1}
    assert image_of(nu1_d3, s("e1"), half) == {F(1, 6): 1}
    assert image_of(nu1_d3, s_star("e1"), half) == {}
    assert image_of(nu1_d3, s_star("e2"), F(5, 2)) == {half: 1}
    assert nu1_d3.matrix(p(VertexSet.empty())).is_zero()
    assert image_of(nu1_d3, p(fin([1])), half) == {half: 1}
    assert image_of(nu1_d3, p(fin([2])), half) == {}


def test_branching_sets_example1(ws, ed):
    bs = branching_from_markov(*setup_for(ws, ed, "example1", 3)[:2], 3, 32, ws("example1").X)
    assert bs.D[1] == {F(1, 2), F(1, 6), F(1, 18), F(5, 6)}
    assert bs.D[2] == {F(5, 2), F(13, 6)}
    assert bs.D[3] == {F(9, 2)}
    assert bs.R["e1"] == {F(1, 6), F(1, 18), F(5, 6)}
    assert bs.f["e2"][F(1, 2)] == F(5, 2)
    assert bs.q_set(1) == {F(1, 2)}
    assert bs.check_axioms().all_hold


def test_lift_sets_example2(ws, ed):
    m, e, X, D, N = setup_for(ws, ed, "example2", 5)
    bs = branching_from_markov(m, e, D, N, X)
    lbs = lift_branching(bs)
    fe2 = bs.f["e2"]
    q1 = bs.D[1] - bs.R_from(1)
    assert lbs.Q("e2'") == {fe2[y] for y in q1 if y in fe2}
    assert lbs.Q("e2'") == lbs.Q_display("e2'")
    v1p = EXSet(VertexSet.empty(), fin([1], primed=True))
    assert lbs.B(v1p) == q1
    assert lbs.B(EXSet(fin([1]))) == bs.R_from(1)
    assert lbs.check(RelationScope.up_to(bs.graph, 5).sets).all_hold
    pi = lbs.rep()
    assert pi.matrix(P(v1p)).is_diagonal_idempotent()
    assert pi.matrix(S("e2'")).is_partial_permutation()


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_nu_equals_pi(ws, ed, name):
    rep = check_nu_equals_pi(*setup_for(ws, ed, name, 5, 16))
    assert rep.all_hold and len(rep.results) > 10


@pytest.mark.parametrize("name", ["example1", "example2", "example2_negative", "example3"])
def test_diagram(ws, ed, name):
    m, e, X, D, N = setup_for(ws, ed, name, 6, 16)
    bs = branching_from_markov(m, e, D, N, X)
    rep = check_diagram(bs, RelationScope.up_to(bs.graph, 4))
    assert rep.all_hold, rep.to_text()


def test_hypothesis_failure_raises(ws, ed):
    with pytest.raises(RepresentationError):
        markov_setup(*setup_for(ws, ed, "example1", 3, X=VertexSet.tail(1)))


def test_injectivity_examples_hold(ws, ed):
    for name in ("example1", "example2", "example3"):
        rep = injectivity_markov(*setup_for(ws, ed, name, 6, 16))
        assert rep.all_hold, (name, rep.to_text())


def test_injectivity_negative(ws, ed):
    rep = injectivity_markov(*setup_for(ws, ed, "example2_negative", 6, 16))
    (bad,) = rep.failures
    assert (bad.check, bad.subject, bad.verdict) == ("inj.3", "v2", Verdict.FAILS)


@pytest.mark.parametrize("name", ["example1", "example2", "example2_negative", "example3"])
def test_counting_agrees_with_markov(ws, ed, name):
    m, e, X, D, N = setup_for(ws, ed, name, 6, 16)
    markov = injectivity_markov(m, e, X, D, N)
    counting = injectivity_counting(branching_from_markov(m, e, D, N, X), vertex_horizon=D)
    assert markov.all_hold == counting.all_hold
    if name == "example2_negative":
        assert [(r.check, r.subject) for r in counting.failures] == [("inj.c", "v2")]


def test_identity_loop_fails_d():
    bs = identity_loop_system()
    rep = injectivity_counting(bs)
    (d,) = rep.by_check("inj.d")
    assert d.verdict is Verdict.FAILS
    assert bs.check_axioms().all_hold


def test_identity_loop_with_moving_point_is_undetermined_not_failed():
    bs = identity_loop_system()
    bs.f["e1"] = {F(0): F(1), F(1): F(0)}
    (d,) = injectivity_counting(bs).by_check("inj.d")
    assert d.verdict is not Verdict.FAILS


def test_export(tmp_path, nu1_d3, ws):
    from ultramarkov.markov import induced_ultragraph

    gens = scope_generators(RelationScope.up_to(induced_ultragraph(ws("example1").markov, 8), 2))
    written = export_matrices(nu1_d3, gens, tmp_path)
    assert written[0].name == "basis.tsv"
    lines = written[0].read_text().splitlines()
    assert lines[0] == "position\tpoint\tdepth\tinterval"
    assert lines[1] == "0\t1/2\t1\t1"
    e2 = next(pth for pth in written if pth.name == "nu.s_e2.coo")
    body = [ln for ln in e2.read_text().splitlines() if not ln.startswith("#")]
    pos = {b.point: k for k, b in enumerate(nu1_d3.basis)}
    assert f"{pos[F(5, 2)]} {pos[F(1, 2)]} 1" in body
    assert len({pth.name for pth in written}) == len(written)


def test_rep_from_branching_matches_columns(ws, ed):
    m, e, X, D, N = setup_for(ws, ed, "example3", 4, 16)
    bs = branching_from_markov(m, e, D, N, X)
    pi = rep_from_branching(bs)
    for eid in ("e1", "e2", "e3"):
        assert pi.matrix(s_star(eid)) == pi.matrix(s(eid)).transpose()
