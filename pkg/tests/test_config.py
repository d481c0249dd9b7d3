from fractions import Fraction as F

import pytest

from conftest import FIXTURES, fixture_text
from ultramarkov.cli import load_fixture, main
from ultramarkov.config import ConfigError, emit_config, parse_config
from ultramarkov.vertexset import VertexSet

GRAPH = """\
[ultragraph]
edge e1: v1 -> {1,2}
family n>=2: e_n: v_n -> offsets{-1}

[run]
X = tail(2)
"""


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip(name):
    ws = load_fixture(name)
    text = emit_config(ws)
    again = parse_config(text, name)
    assert again == ws
    assert emit_config(again) == text


def test_graph_round_trip():
    ws = parse_config(GRAPH)
    assert ws.graph.edge("e5").range == VertexSet.finite([4])
    assert parse_config(emit_config(ws)) == ws


def test_run_defaults_and_values():
    ws = load_fixture("example2")
    assert ws.point == F(17, 8) and ws.X == VertexSet.tail(2)
    assert ws.depth == 6 and ws.horizon == 32
    assert ws.with_scope(depth=3).depth == 3


def test_decimal_rejected_with_position():
    text = GRAPH.replace("X = tail(2)", "X = tail(2)\npoint = 0.5")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == 7 and exc.value.column == 9
    assert "0.5" in str(exc.value)


def test_colliding_edge_ids():
    text = GRAPH.replace("family", "edge e1: v2 -> {1}\nfamily")
    with pytest.raises(ConfigError, match="duplicate edge id"):
        parse_config(text)
    text = GRAPH.replace("edge e1: v1", "edge e3: v3")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_unknown_section_and_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("[maps]\n")
    assert (exc.value.line, exc.value.column) == (1, 1)
    with pytest.raises(ConfigError) as exc:
        parse_config(GRAPH + "colour = blue\n")
    assert exc.value.line == 7 and "colour" in str(exc.value)


def test_map_and_graph_exclusive():
    text = fixture_text("example1") + GRAPH.split("[run]")[0]
    with pytest.raises(ConfigError):
        parse_config(text)


def test_constant_branch_rejected():
    with pytest.raises(ConfigError, match="constant"):
        parse_config("[map]\nambient = [0, 2)\nI_1 = [0, 1]: 1\n")


def test_ambient_must_be_half_open():
    with pytest.raises(ConfigError):
        parse_config("[map]\nambient = [0, 2]\nI_1 = [0, 1]: 2x\n")


def test_x_outside_reg_is_input_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(GRAPH.replace("family n>=2: e_n: v_n -> offsets{-1}\n", "").replace("tail(2)", "{2}"))
    assert main(["validate", "--config", str(cfg)]) == 3
    assert "X" in capsys.readouterr().err

