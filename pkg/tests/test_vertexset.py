import pytest
from hypothesis import given, settings, strategies as st

from oracles import vertexset_members
from ultramarkov.vertexset import (
    EXSet,
    VertexSet,
    VertexSetError,
    canonicalize,
    parse_exset,
    parse_vertexset,
    union_all,
)

EVENS = VertexSet.parity(odd=False)
ODDS = VertexSet.parity(odd=True)


def members(s: VertexSet, n: int = 60) -> set[int]:
    return set(s.enumerate_up_to(n))


def test_absorbed_explicit_element():
    s = canonicalize({5}, 3, [1])
    assert (s.explicit_part, s.threshold, s.tail_pattern) == (frozenset(), 3, (True,))


def test_finite_set_already_canonical():
    s = canonicalize({1, 2}, 3, [0])
    assert (s.explicit_part, s.threshold, s.tail_pattern) == (frozenset({1, 2}), 3, (False,))
    assert s.is_finite()


def test_even_indices_normal_form():
    # {2} together with the even indices from 4 on is just the even indices
    s = canonicalize({2}, 4, [1, 0])
    assert members(s, 50) == set(range(2, 51, 2))
    assert s == EVENS
    assert str(s) == "tail(1;period=2,bits=01)"


def test_pattern_read_relative_to_threshold():
    s = canonicalize({2}, 4, [0, 1])
    assert members(s, 12) == {2, 5, 7, 9, 11}


def test_all_zero_pattern_has_period_one():
    s = canonicalize({1}, 3, [0, 0, 0])
    assert s.tail_pattern == (False,) and s.threshold == 2


def test_tail_meets_singleton_empty():
    assert (VertexSet.tail(2) & VertexSet.finite([1])).is_empty()


def test_idempotence():
    a = parse_vertexset("{1,3} + tail(7;period=3,bits=101)")
    assert a & a == a and a | a == a


def test_all_minus_odds_is_evens():
    assert VertexSet.tail(1) - ODDS == EVENS
    assert members(VertexSet.tail(1) - ODDS, 50) == set(range(2, 51, 2))


def test_membership_and_enumeration():
    assert 1 not in VertexSet.tail(2)
    assert VertexSet.finite([1, 2]).is_finite()
    assert EVENS.enumerate_up_to(7) == [2, 4, 6]
    assert 0 not in EVENS and -3 not in VertexSet.tail(1)


def test_shift_and_min():
    assert VertexSet.tail(3).shift(-2) == VertexSet.tail(1)
    assert VertexSet.finite([1, 4]).shift(-1) == VertexSet.finite([3])
    assert EVENS.min() == 2 and VertexSet.empty().min() is None


@pytest.mark.parametrize("text", [
    "{}", "{1,2}", "tail(2)", "tail(1;period=2,bits=10)", "{1} + tail(5)",
    "primed({1,4})", "{2} + tail(6;period=3,bits=110)",
])
def test_notation_round_trip(text):
    s = parse_vertexset(text)
    assert parse_vertexset(str(s)) == s


def test_parse_accepts_v_prefix_and_unions():
    assert parse_vertexset("{v1, v2}") == VertexSet.finite([1, 2])
    assert parse_vertexset("{1} + {3} + tail(9)") == VertexSet.finite([1, 3]) | VertexSet.tail(9)


@pytest.mark.parametrize("bad", ["", "{0}", "{1,,2}", "tail(0)", "tail(2;period=2,bits=1)", "odd", "{1} +"])
def test_parse_rejects(bad):
    with pytest.raises(VertexSetError):
        parse_vertexset(bad)


def test_mixed_primed_operands_rejected():
    with pytest.raises(VertexSetError):
        VertexSet.finite([1]) | VertexSet.finite([1], primed=True)


def test_exset_parse_and_ops():
    z = parse_exset("{1} + primed({1})")
    assert z.unprimed == VertexSet.finite([1])
    assert z.primed == VertexSet.finite([1], primed=True)
    w = parse_exset("tail(2)")
    assert z.union(w).unprimed == VertexSet.tail(1)
    assert z.intersect(w).is_empty()
    assert z.difference(z).is_empty()


def test_union_all():
    assert union_all([VertexSet.finite([1]), VertexSet.tail(3)]) == parse_vertexset("{1} + tail(3)")


# -- property suites --------------------------------------------------------

@st.composite
def vertexsets(draw, primed=False):
    threshold = draw(st.integers(1, 9))
    explicit = draw(st.frozensets(st.integers(1, max(1, threshold - 1)), max_size=5))
    explicit = frozenset(j for j in explicit if j < threshold)
    period = draw(st.integers(1, 4))
    pattern = tuple(draw(st.lists(st.booleans(), min_size=period, max_size=period)))
    return explicit, threshold, pattern


def bound_for(*specs) -> int:
    lcm = 12  # every period is at most 4
    return max(t for _, t, _ in specs) + 2 * lcm + 5


@settings(max_examples=1000, deadline=None)
@given(vertexsets(), vertexsets(), vertexsets())
def test_boolean_laws_by_enumeration(sa, sb, sc):
    n = bound_for(sa, sb, sc)
    a, b, c = (canonicalize(*x) for x in (sa, sb, sc))
    ma, mb, mc = (vertexset_members(*x, n) for x in (sa, sb, sc))
    assert members(a, n) == ma and members(b, n) == mb
    assert members(a | b, n) == ma | mb
    assert members(a & b, n) == ma & mb
    assert members(a - b, n) == ma - mb
    assert (a | b) | c == a | (b | c) and (a & b) & c == a & (b & c)
    assert a | b == b | a and a & b == b & a
    assert a & (b | c) == (a & b) | (a & c)
    assert a | (b & c) == (a | b) & (a | c)
    assert a | (a & b) == a and a & (a | b) == a
    assert (a - b) | (a & b) == a
    assert (a == b) == (ma == mb)


@settings(max_examples=300, deadline=None)
@given(vertexsets())
def test_canonical_form_is_idempotent_and_minimal(data):
    s = canonicalize(*data)
    again = canonicalize(s.explicit_part, s.threshold, s.tail_pattern)
    assert again == s and again.threshold == s.threshold
    assert all(j < s.threshold for j in s.explicit_part)
    assert s.is_finite() == (not any(s.tail_pattern))
    if s.threshold > 1:
        # lowering the threshold by one would change the set
        p = s.period
        assert ((s.threshold - 1) in s.explicit_part) != s.tail_pattern[p - 1]
    assert parse_vertexset(str(s)) == s


@settings(max_examples=200, deadline=None)
@given(vertexsets(), vertexsets())
def test_exset_notation_round_trip(sa, sb):
    z = EXSet(canonicalize(*sa), canonicalize(*sb).as_primed())
    assert parse_exset(str(z)) == z
