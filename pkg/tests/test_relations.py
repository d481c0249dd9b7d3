from fractions import Fraction as F

import pytest

from ultramarkov.markov import induced_ultragraph
from ultramarkov.relations import (
    ABS,
    REL,
    GuardBandError,
    RelationError,
    RelationScope,
    StarPolynomial,
    P,
    S,
    S_star,
    ck_check,
    evaluate,
    p,
    phi_image,
    psi_image,
    psi_phi_identity_check,
    q_of,
    relation_suite,
    s,
    s_star,
    safe_depth,
    substitute,
)
from ultramarkov.rep import build_markov_rep
from ultramarkov.report import Verdict
from ultramarkov.sparse import SparseMatrix
from ultramarkov.ultragraph import Edge, RelativeUltragraph, Ultragraph
from ultramarkov.vertexset import EXSet, VertexSet

fin = VertexSet.finite
of = StarPolynomial.of


@pytest.fixture(scope="module")
def rg2(ws):
    w = ws("example2")
    return RelativeUltragraph(induced_ultragraph(w.markov, 32), w.X)


@pytest.fixture(scope="module")
def nu1(ws, ed):
    w = ws("example1")
    return build_markov_rep(w.markov, ed("example1"), w.X, 6, 12)


@pytest.fixture(scope="module")
def rg1(ws):
    w = ws("example1")
    return RelativeUltragraph(induced_ultragraph(w.markov, 32), w.X)


# -- formal algebra ---------------------------------------------------------

def test_star_polynomial_algebra():
    a = of(s("e1"), s_star("e1"))
    assert (a - a).is_zero()
    assert a.star() == a
    assert of(s("e2")).star() == of(s_star("e2"))
    assert (of(s("e1")) * of(s("e2"))).star() == of(s_star("e2"), s_star("e1"))
    assert (a * 3 - a - a - a).is_zero()
    assert len(a + of(p(fin([1])))) == 2


def test_mixed_algebras_rejected():
    with pytest.raises(RelationError):
        of(s("e1")) + of(S("e1"))
    with pytest.raises(RelationError):
        of(s("e1"), S("e1"))


def test_empty_projection_symbol_is_zero(rg2):
    assert phi_image(p(VertexSet.empty()), rg2).is_zero()


def test_safe_depth_counts_right_to_left():
    assert safe_depth(of(s_star("e2"), s("e2")), 4) == 3
    assert safe_depth(of(s("e2"), s_star("e2")), 4) == 4
    assert safe_depth(of(s("e1"), s("e2"), s_star("e3")), 6) == 5
    assert safe_depth(of(p(fin([1]))), 4) == 4


# -- phi and psi ------------------------------------------------------------

def test_phi_example2(rg2):
    assert phi_image(s("e1"), rg2) == of(S("e1"))
    assert phi_image(s("e2"), rg2) == of(S("e2")) + of(S("e2'"))
    assert phi_image(s_star("e2"), rg2) == of(S_star("e2")) + of(S_star("e2'"))
    v1 = fin([1])
    assert phi_image(p(v1), rg2) == of(P(v1)) + of(P(EXSet(VertexSet.empty(), v1.as_primed())))
    assert phi_image(p(fin([2, 3])), rg2) == of(P(fin([2, 3])))


def test_psi_example2(rg2):
    v1 = fin([1])
    primed = P(EXSet(VertexSet.empty(), v1.as_primed()))
    assert psi_image(primed, rg2) == of(p(v1)) - of(s("e1"), s_star("e1"))
    img = psi_image(S("e2'"), rg2)
    assert img == of(s("e2"), p(v1)) - of(s("e2"), s("e1"), s_star("e1"))
    assert len(img) == 2
    assert psi_image(P(fin([2, 3])), rg2) == of(p(fin([2, 3])))
    assert psi_image(S("e2"), rg2) == of(s("e2"), s("e1"), s_star("e1"))
    assert psi_image(S_star("e1"), rg2).algebra == REL


def test_psi_of_phi_is_formally_identity(rg2):
    def back(g):
        return substitute(phi_image(g, rg2), lambda h: psi_image(h, rg2))

    for g in (p(fin([1])), p(fin([1, 2])), p(fin([2, 3]))):
        assert back(g) == of(g), str(g)
    # edges come back multiplied by their range projection, equal only modulo the relations
    assert back(s("e1")) == of(s("e1"), p(VertexSet.tail(2)))
    assert back(s("e2")) == of(s("e2"), p(fin([1])))


def test_psi_rejects_missing_primed_edge(rg2):
    with pytest.raises(RelationError):
        psi_image(S("e3'"), rg2)


def test_psi_rejects_infinite_sum(rg2):
    rg = RelativeUltragraph(rg2.graph, VertexSet.empty())
    with pytest.raises(RelationError):
        psi_image(S("e1"), rg)
    with pytest.raises(RelationError):
        psi_image(P(VertexSet.tail(3)), rg)


def test_phi_psi_domain_checks(rg2):
    with pytest.raises(RelationError):
        phi_image(S("e1"), rg2)
    with pytest.raises(RelationError):
        psi_image(s("e1"), rg2)


def test_q_of(rg2):
    assert q_of(1, rg2.graph) == of(p(fin([1]))) - of(s("e1"), s_star("e1"))
    g = Ultragraph((Edge("e2", 2, fin([1])),))
    with pytest.raises(RelationError):
        q_of(1, g)


# -- evaluation on the Markov representation --------------------------------

def test_guard_band_example(nu1, ws, ed):
    w = ws("example1")
    nu = build_markov_rep(w.markov, ed("example1"), w.X, 4, 12)
    poly = of(s_star("e2"), s("e2")) - of(p(fin([1])))
    m, safe = evaluate(poly, nu)
    assert safe == 3
    shallow = [j for j in m.nonzero_columns() if nu.basis[j].depth <= 3]
    assert shallow == []


def test_guard_band_error(ws, ed):
    w = ws("example1")
    nu = build_markov_rep(w.markov, ed("example1"), w.X, 1, 12)
    with pytest.raises(GuardBandError):
        evaluate(of(s_star("e2"), s("e2")), nu)


def test_transpose_for_adjoint(nu1):
    for eid in ("e1", "e2", "e3"):
        assert nu1.matrix(s_star(eid)) == nu1.matrix(s(eid)).transpose()
        assert nu1.matrix(s(eid)).is_partial_permutation()
    assert nu1.matrix(p(fin([1, 2]))).is_diagonal_idempotent()


def test_suite_holds_example1(nu1, rg1):
    rep = relation_suite(nu1, rg1, RelationScope.up_to(rg1.graph, 6), "nu")
    assert rep.all_hold, rep.to_text()
    assert {r.check for r in rep.results} >= {"rel.ck", "rel.orthogonality", "rel.q-identity-6"}


def test_psi_phi_check_holds(nu1, rg1):
    rep = psi_phi_identity_check(nu1, rg1, RelationScope.up_to(rg1.graph, 4), "nu")
    assert rep.all_hold


def test_zeroed_edge_is_detected(nu1, rg1):
    broken = nu1.override(s("e1"), SparseMatrix.zero(nu1.size))
    rep = relation_suite(broken, rg1, RelationScope.up_to(rg1.graph, 4), "mutant")
    (rec,) = rep.by_check("rel.s*s=p_r")
    assert rec.verdict is Verdict.FAILS
    wit = rec.witnesses[0]
    assert wit["instance"] == "e1" and wit["basis_point"] in (F(1, 2), F(1, 6))


def test_ck_fails_outside_x(nu1, rg1):
    assert 1 not in rg1.X
    res = ck_check(nu1, rg1.graph, 1, "nu")
    assert res.verdict is Verdict.FAILS
    assert res.witnesses[0]["basis_point"] == F(1, 2)
    assert ck_check(nu1, rg1.graph, 2, "nu").verdict is Verdict.HOLDS


def test_abs_tag(rg2):
    assert psi_image(P(fin([2])), rg2).algebra == REL
    assert of(S("e1")).algebra == ABS
