import pytest
from hypothesis import given, settings, strategies as st

from ultramarkov.ultragraph import (
    Edge,
    EdgeFamily,
    RelativeUltragraph,
    Ultragraph,
    UltragraphError,
    condition_L,
    decompose,
    lift,
    lift_condition_L_equivalence_check,
    range_Y_finite,
    range_Y_finiteness,
    recompose,
    regular_vertices,
    relative_condition_L,
)
from ultramarkov.report import Verdict
from ultramarkov.vertexset import EXSet, VertexSet

fin = VertexSet.finite
ODDS = VertexSet.parity(odd=True)
EVENS = VertexSet.parity(odd=False)


def example1_graph():
    return Ultragraph((Edge("e1", 1, fin([1, 2])),), (EdgeFamily(2, (-1,)),))


def example2_graph():
    return Ultragraph((Edge("e1", 1, VertexSet.tail(2)),), (EdgeFamily(2, (-1,)),))


def example3_graph():
    return Ultragraph((Edge("e1", 1, fin([2])),), (EdgeFamily(2, (-1, 1)),))


def two_vertex():
    return Ultragraph((Edge("e1", 1, fin([2])), Edge("e2", 2, fin([1]))))


def test_regular_vertices():
    g = example1_graph()
    assert regular_vertices(g) == VertexSet.tail(1)
    assert regular_vertices(Ultragraph((Edge("e2", 2, fin([1])),))) == fin([2])
    assert regular_vertices(two_vertex()) == fin([1, 2])


def test_sinks_and_vertices():
    g = Ultragraph((Edge("e2", 2, fin([1])),))
    assert g.sinks == fin([1])
    assert g.vertices == fin([1, 2])


def test_edge_lookup():
    g = example3_graph()
    assert g.edge("e5").range == fin([4, 6])
    assert [e.id for e in g.edges_from(1)] == ["e1"]
    assert not g.has_edge("e0") and not g.has_edge("f3")
    with pytest.raises(UltragraphError):
        g.edge("e0")


def test_colliding_ids_rejected():
    with pytest.raises(UltragraphError):
        Ultragraph((Edge("e1", 1, fin([1])), Edge("e1", 2, fin([1]))))
    with pytest.raises(UltragraphError):
        Ultragraph((Edge("e3", 3, fin([1])),), (EdgeFamily(2, (-1,)),))


def test_x_must_be_regular():
    g = Ultragraph((Edge("e2", 2, fin([1])),))
    with pytest.raises(UltragraphError):
        RelativeUltragraph(g, fin([1]))


def test_lift_two_vertex():
    rg = RelativeUltragraph(two_vertex(), fin([1]))
    lifted = lift(rg)
    assert rg.Y == fin([2])
    assert lifted.added_vertices == fin([2], primed=True)
    e1p = lifted.graph.edge("e1'")
    assert e1p.source == 1 and e1p.range == fin([2], primed=True)
    assert not lifted.graph.has_edge("e2'")
    assert lifted.graph.sources == fin([1, 2])


def test_lift_with_empty_y_adds_nothing():
    g = example1_graph()
    lifted = lift(RelativeUltragraph(g, VertexSet.tail(1)))
    assert lifted.added_edges(12) == []
    assert lifted.graph.edges_up_to(12) == g.edges_up_to(12)


def test_lift_example2():
    rg = RelativeUltragraph(example2_graph(), VertexSet.tail(2))
    assert rg.Y == fin([1])
    lifted = lift(rg)
    added = lifted.added_edges(20)
    assert [e.id for e in added] == ["e2'"]
    assert added[0].range == fin([1], primed=True)


def test_lift_family_per_residue():
    rg = RelativeUltragraph(example3_graph(), ODDS)
    lifted = lift(rg)
    for n in range(2, 16):
        e = lifted.graph.edge(f"e{n}'") if lifted.graph.has_edge(f"e{n}'") else None
        hit = example3_graph().edge(f"e{n}").range & EVENS
        assert (e is not None) == (not hit.is_empty())
        if e is not None:
            assert e.range == hit.as_primed()
    assert regular_vertices(lifted.graph) == regular_vertices(rg.graph)


def test_decompose():
    rg = RelativeUltragraph(example2_graph(), VertexSet.tail(2))
    assert decompose(EXSet(fin([1]), fin([1], primed=True)), rg) == (fin([1]), fin([1]))
    lifted = lift(rg)
    z = EXSet(VertexSet.empty(), lifted.graph.edge("e2'").range)
    assert decompose(z, rg) == (VertexSet.empty(), fin([1]))
    assert decompose(EXSet(VertexSet.tail(3)), rg) == (VertexSet.tail(3), VertexSet.empty())
    with pytest.raises(UltragraphError):
        decompose(EXSet(VertexSet.empty(), fin([2], primed=True)), rg)


def test_two_vertex_condition_L():
    g = two_vertex()
    cycles = g.find_cycles(4, 4)
    assert [c.ids for c in cycles] == [("e1", "e2")]
    assert not g.has_exit(cycles[0])
    assert condition_L(g, 4, 4).verdict is Verdict.FAILS
    rg = RelativeUltragraph(g, fin([1]))
    assert relative_condition_L(rg, 4, 4).verdict is Verdict.HOLDS
    assert lift_condition_L_equivalence_check(rg, 4, 4).all_hold
    lifted = lift(rg).graph
    assert condition_L(lifted, 4, 4).verdict is Verdict.HOLDS


def test_two_vertex_all_of_reg():
    rg = RelativeUltragraph(two_vertex(), fin([1, 2]))
    rep = lift_condition_L_equivalence_check(rg, 4, 4)
    assert relative_condition_L(rg, 4, 4).verdict is Verdict.FAILS
    assert rep.by_check("condition-L")[0].verdict is Verdict.FAILS
    assert rep.by_check("lift-condition-L-agreement")[0].verdict is Verdict.HOLDS


def test_example3_exit():
    g = example3_graph()
    cycles = {c.ids: c for c in g.find_cycles(2, 6)}
    assert "v1" in g.exit_of(cycles[("e2", "e3")])
    rep = lift_condition_L_equivalence_check(RelativeUltragraph(g, ODDS), 6, 12)
    assert rep.all_hold


def test_acyclic_truncation():
    g = Ultragraph((), (EdgeFamily(2, (-1,)),))
    assert g.find_cycles(4, 12) == []


def test_loop_and_proper_powers():
    g = Ultragraph((Edge("e1", 1, fin([1])),))
    assert [c.ids for c in g.find_cycles(4, 4)] == [("e1",)]
    c = g.find_cycles(4, 4)[0]
    assert c.simple and not g.has_exit(c)


def test_range_y_finiteness():
    assert range_Y_finite(RelativeUltragraph(example2_graph(), VertexSet.tail(2)))
    assert range_Y_finite(RelativeUltragraph(example3_graph(), ODDS))
    g = Ultragraph((Edge("e1", 1, VertexSet.tail(2)),), (EdgeFamily(2, (), VertexSet.tail(2)),))
    rg = RelativeUltragraph(g, ODDS & VertexSet.tail(2))
    rep = range_Y_finiteness(rg)
    assert rep.by_check("range-Y-finite")[0].verdict is Verdict.FAILS


# -- randomized suites -------------------------------------------------------

@st.composite
def relative_graphs(draw):
    n = draw(st.integers(2, 7))
    edges = []
    for v in range(1, n + 1):
        for k in range(draw(st.integers(0, 2))):
            rng = draw(st.frozensets(st.integers(1, n + 1), min_size=1, max_size=3))
            edges.append(Edge(f"e{v}_{k}", v, fin(rng)))
    g = Ultragraph(tuple(edges))
    reg = g.regular_vertices().elements()
    X = fin(draw(st.lists(st.sampled_from(reg), unique=True)) if reg else [])
    return RelativeUltragraph(g, X)


@settings(max_examples=50, deadline=None)
@given(relative_graphs())
def test_condition_L_equivalence_random(rg):
    rep = lift_condition_L_equivalence_check(rg, 4, 10)
    for check in ("lift-condition-L-agreement", "lift-cycles-coincide", "lift-exitless-cycles"):
        assert rep.by_check(check)[0].verdict is Verdict.HOLDS, rep.to_text()
    lifted = lift(rg).graph
    assert lifted.primed_vertices <= rg.Y.as_primed()
    assert all(e.range.primed for e in lift(rg).added_edges(10))
    assert regular_vertices(lifted) == regular_vertices(rg.graph)


@st.composite
def exsets(draw):
    g = example3_graph()
    X = fin(draw(st.lists(st.integers(1, 9), unique=True))) | VertexSet.tail(10)
    rg = RelativeUltragraph(g, X)
    start = draw(st.integers(1, 12))
    a = fin(draw(st.frozensets(st.integers(1, 12), max_size=4)))
    if draw(st.booleans()):
        a = a | VertexSet.tail(start, 2, draw(st.sampled_from(["10", "01", "11"])))
    b = fin(draw(st.frozensets(st.integers(1, 12), max_size=4))) & rg.Y
    return rg, a, b


@settings(max_examples=200, deadline=None)
@given(exsets())
def test_decompose_recompose_round_trip(data):
    rg, a, b_y = data
    z = recompose(a, b_y)
    assert decompose(z, rg) == (a, b_y)
    assert recompose(*decompose(z, rg)) == z
