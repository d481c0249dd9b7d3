"""The configuration language: parsing into a :class:`Workspace` and emitting it back.

Grammar (one statement per line, ``#`` starts a comment)::

    [map]
    ambient = [a, b)                 # b may be ``inf``
    I_1 = [0, 1]                     # explicit interval, branches follow indented
      on [0, 1]: 3x                  # affine branch on a sub-interval; ( ) for open ends
      at 0 -> 2                      # point override, takes precedence over branches
    I_2 = [2, 5/2]: 2x-4             # single branch on the whole closed interval
    for n>=3: I_n = [2n-2, 2n-1], g = x-2
    for n>=4: I_n = [n+1, n+2]       # family with indented branches
      on (n+4/3, n+5/3) if n odd: 3x-3n-3

    [ultragraph]
    vertices = tail(1)               # optional; defaults to sources and ranges
    edge e1: v1 -> {1,2}
    family n>=2: e_n: v_n -> offsets{-1}
    family n>=3, n odd: e_n: v_n -> offsets{-1,1} + {1}

    [run]
    X = tail(2)
    point = 1/2
    depth = 6
    horizon = 32
    maxlen = 4
    cycles = 4
    periods = 4
    bound = 64

Numbers are exact: integers and fractions ``p/q``; decimal literals are
rejected.  Vertex sets use the notation of :mod:`ultramarkov.vertexset`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

import sympy

from .markov.expr import ExprError, affine_parts, expr_text, fraction_text, parse
from .markov.model import FamilyRule, IntervalData, MarkovError, MarkovMap, Piece, PieceRule, evaluate
from .ultragraph import Edge, EdgeFamily, Ultragraph, UltragraphError
from .vertexset import VertexSet, VertexSetError, parse_vertexset


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line, self.column = line, column


RUN_DEFAULTS = {"depth": 6, "horizon": 32, "maxlen": 4, "cycles": 4, "periods": 4, "bound": 64}


@dataclass
class Workspace:
    markov: MarkovMap | None = None
    graph: Ultragraph | None = None
    X: VertexSet | None = None
    point: Fraction | None = None
    depth: int = RUN_DEFAULTS["depth"]
    horizon: int = RUN_DEFAULTS["horizon"]
    maxlen: int = RUN_DEFAULTS["maxlen"]
    cycles: int = RUN_DEFAULTS["cycles"]
    periods: int = RUN_DEFAULTS["periods"]
    bound: int = RUN_DEFAULTS["bound"]
    name: str = field(default="workspace", compare=False)

    def with_scope(self, **overrides) -> "Workspace":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


# -- lexical helpers -------------------------------------------------------

def _number(text: str, line: int, col: int) -> Fraction:
    text = text.strip()
    if re.search(r"\d*\.\d|\d\.", text):
        raise ConfigError(f"decimal literal {text!r} is not allowed; write a fraction p/q", line, col)
    m = re.fullmatch(r"([+-]?\d+)(?:\s*/\s*(\d+))?", text)
    if not m:
        raise ConfigError(f"expected an exact rational, got {text!r}", line, col)
    den = int(m.group(2) or 1)
    if den == 0:
        raise ConfigError("zero denominator", line, col)
    return Fraction(int(m.group(1)), den)


def _expr(text: str, line: int, col: int, allow: str) -> sympy.Expr:
    try:
        return parse(text, allow)
    except ExprError as exc:
        offset = exc.column if exc.column is not None else 0
        raise ConfigError(str(exc), line, col + offset) from None


def _split_bracket(text: str, line: int, col: int):
    text = text.strip()
    if not text or text[0] not in "[(" or text[-1] not in "])":
        raise ConfigError(f"expected an interval like [a, b], got {text!r}", line, col)
    body = text[1:-1]
    depth = 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            return text[0] == "[", body[:i].strip(), body[i + 1:].strip(), text[-1] == "]"
    raise ConfigError(f"expected an interval like [a, b], got {text!r}", line, col)


def _vertexset(text: str, line: int, col: int) -> VertexSet:
    try:
        return parse_vertexset(text)
    except VertexSetError as exc:
        raise ConfigError(str(exc), line, col) from None


# -- parsing ---------------------------------------------------------------


@dataclass
class _PendingInterval:
    line: int
    index: int | None  # None for the family header
    lo: object
    hi: object
    n0: int | None = None
    pieces: list = field(default_factory=list)
    overrides: list = field(default_factory=list)


def parse_config(text: str, name: str = "workspace") -> Workspace:
    section = None
    seen_sections: set[str] = set()
    ambient = None
    pending: list[_PendingInterval] = []
    explicit_edges: list[Edge] = []
    families: list[EdgeFamily] = []
    vertices = None
    run: dict = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].rstrip()
        if not content.strip():
            continue
        indented = content[0] in " \t"
        stripped = content.strip()
        col = len(content) - len(content.lstrip()) + 1
        m = re.fullmatch(r"\[(\w+)\]", stripped)
        if m:
            section = m.group(1)
            if section not in ("map", "ultragraph", "run"):
                raise ConfigError(f"unknown section [{section}]", lineno, col)
            if section in seen_sections:
                raise ConfigError(f"section [{section}] appears twice", lineno, col)
            seen_sections.add(section)
            continue
        if section is None:
            raise ConfigError("statement outside of a section", lineno, col)
        if section == "map":
            if indented:
                if not pending:
                    raise ConfigError("branch line without an interval", lineno, col)
                _parse_branch_line(pending[-1], stripped, lineno, col)
                continue
            ambient = _parse_map_line(stripped, lineno, col, pending, ambient)
        elif section == "ultragraph":
            vertices = _parse_graph_line(stripped, lineno, col, explicit_edges, families, vertices)
        else:
            _parse_run_line(stripped, lineno, col, run)

    if "map" in seen_sections and "ultragraph" in seen_sections:
        raise ConfigError("a configuration describes either a [map] or an [ultragraph], not both")
    ws = Workspace(name=name, **run)
    if "map" in seen_sections:
        ws.markov = _build_map(ambient, pending)
    if "ultragraph" in seen_sections:
        try:
            ws.graph = Ultragraph(tuple(explicit_edges), tuple(families),
                                  vertices if vertices is not None else VertexSet())
        except UltragraphError as exc:
            raise ConfigError(f"invalid ultragraph: {exc}") from None
    return ws


def _parse_map_line(s: str, line: int, col: int, pending: list, ambient):
    m = re.fullmatch(r"ambient\s*=\s*(.+)", s)
    if m:
        lo_closed, a, b, hi_closed = _split_bracket(m.group(1), line, col)
        if not lo_closed or hi_closed:
            raise ConfigError("the ambient interval must be written [a, b)", line, col)
        hi = None if b in ("inf", "+inf", "oo") else _number(b, line, col)
        return (_number(a, line, col), hi)
    m = re.fullmatch(r"I_(\d+)\s*=\s*(\[[^\]]*\])\s*(?::\s*(.+))?", s)
    if m:
        lo_closed, a, b, hi_closed = _split_bracket(m.group(2), line, col)
        if not (lo_closed and hi_closed):
            raise ConfigError("partition intervals are closed: write [a, b]", line, col)
        iv = _PendingInterval(line, int(m.group(1)), _number(a, line, col), _number(b, line, col))
        if m.group(3):
            expr = _expr(m.group(3), line, col + m.start(3), "x")
            iv.pieces.append((True, iv.lo, iv.hi, True, expr, None, line))
        pending.append(iv)
        return ambient
    m = re.fullmatch(r"for\s+n\s*>=\s*(\d+)\s*:\s*I_n\s*=\s*(\[[^\]]*\])\s*(?:,\s*g\s*=\s*(.+))?", s)
    if m:
        lo_closed, a, b, hi_closed = _split_bracket(m.group(2), line, col)
        if not (lo_closed and hi_closed):
            raise ConfigError("partition intervals are closed: write [a, b]", line, col)
        iv = _PendingInterval(line, None, _expr(a, line, col, "n"), _expr(b, line, col, "n"), n0=int(m.group(1)))
        if m.group(3):
            expr = _expr(m.group(3), line, col + m.start(3), "nx")
            iv.pieces.append((True, iv.lo, iv.hi, True, expr, None, line))
        pending.append(iv)
        return ambient
    key = s.split("=", 1)[0].strip() if "=" in s else s
    raise ConfigError(f"unknown map statement {key!r}", line, col)


def _parse_branch_line(iv: _PendingInterval, s: str, line: int, col: int) -> None:
    allow = "x" if iv.index is not None else "nx"
    bound_allow = "" if iv.index is not None else "n"
    m = re.fullmatch(r"on\s+([\[(].*?[\])])\s*(?:if\s+n\s+(odd|even)\s*)?:\s*(.+)", s)
    if m:
        lo_closed, a, b, hi_closed = _split_bracket(m.group(1), line, col)
        if m.group(2) and iv.index is not None:
            raise ConfigError("parity conditions are only allowed in families", line, col)
        if iv.index is not None:
            lo, hi = _number(a, line, col), _number(b, line, col)
        else:
            lo, hi = _expr(a, line, col, bound_allow), _expr(b, line, col, bound_allow)
        expr = _expr(m.group(3), line, col + m.start(3), allow)
        iv.pieces.append((lo_closed, lo, hi, hi_closed, expr, m.group(2), line))
        return
    m = re.fullmatch(r"at\s+(.+?)\s*->\s*(.+)", s)
    if m:
        if iv.index is not None:
            iv.overrides.append((_number(m.group(1), line, col), _number(m.group(2), line, col)))
        else:
            iv.overrides.append((_expr(m.group(1), line, col, "n"), _expr(m.group(2), line, col, "n")))
        return
    raise ConfigError(f"unknown branch statement {s.split()[0]!r}", line, col)


def _build_map(ambient, pending: list[_PendingInterval]) -> MarkovMap:
    if ambient is None:
        raise ConfigError("[map] needs an 'ambient = [a, b)' line")
    explicit = []
    family = None
    for iv in pending:
        if family is not None:
            raise ConfigError("the family must be the last interval statement", iv.line)
        if iv.index is None:
            try:
                rules = tuple(PieceRule(lo, hi, lc, hc, expr, parity)
                              for lc, lo, hi, hc, expr, parity, _ in iv.pieces)
            except MarkovError as exc:
                raise ConfigError(str(exc), iv.line) from None
            if not rules:
                raise ConfigError("family has no branches", iv.line)
            family = FamilyRule(iv.n0, iv.lo, iv.hi, rules, tuple(iv.overrides))
            continue
        pieces = []
        for lc, lo, hi, hc, expr, _, pline in iv.pieces:
            slope, intercept = affine_parts(expr)
            if slope == 0:
                raise ConfigError(f"branch {expr_text(expr)} is constant", pline)
            pieces.append(Piece(lo, hi, lc, hc, evaluate(slope), evaluate(intercept)))
        if not pieces:
            raise ConfigError(f"I_{iv.index} has no branches", iv.line)
        explicit.append(IntervalData(iv.index, iv.lo, iv.hi, tuple(pieces), tuple(iv.overrides)))
    try:
        return MarkovMap(ambient[0], ambient[1], tuple(explicit), family)
    except MarkovError as exc:
        raise ConfigError(str(exc)) from None


def _parse_graph_line(s: str, line: int, col: int, edges: list, families: list, vertices):
    m = re.fullmatch(r"vertices\s*=\s*(.+)", s)
    if m:
        return _vertexset(m.group(1), line, col)
    m = re.fullmatch(r"edge\s+([A-Za-z]\w*'?)\s*:\s*v?(\d+)\s*->\s*(.+)", s)
    if m:
        rng = _vertexset(m.group(3), line, col + m.start(3))
        if any(e.id == m.group(1) for e in edges):
            raise ConfigError(f"duplicate edge id {m.group(1)}", line, col)
        edges.append(Edge(m.group(1), int(m.group(2)), rng))
        return vertices
    m = re.fullmatch(
        r"family\s+n\s*>=\s*(\d+)\s*(?:,\s*n\s*=\s*(\d+)\s*mod\s*(\d+)|,\s*n\s+(odd|even))?\s*:\s*"
        r"([A-Za-z]+)_n\s*:\s*v_n\s*->\s*(?:offsets\{([^}]*)\})?\s*(?:\+?\s*(.+))?", s)
    if m:
        n0 = int(m.group(1))
        modulus, residue = 1, 0
        if m.group(3):
            modulus, residue = int(m.group(3)), int(m.group(2))
        elif m.group(4):
            modulus, residue = 2, 1 if m.group(4) == "odd" else 0
        offsets = ()
        if m.group(6) is not None and m.group(6).strip():
            try:
                offsets = tuple(int(t) for t in m.group(6).split(","))
            except ValueError:
                raise ConfigError(f"bad offsets {m.group(6)!r}", line, col) from None
        const = _vertexset(m.group(7), line, col) if m.group(7) else VertexSet()
        try:
            families.append(EdgeFamily(n0, offsets, const, modulus, residue, m.group(5)))
        except UltragraphError as exc:
            raise ConfigError(str(exc), line, col) from None
        return vertices
    key = s.split()[0]
    raise ConfigError(f"unknown ultragraph statement {key!r}", line, col)


def _parse_run_line(s: str, line: int, col: int, run: dict) -> None:
    m = re.fullmatch(r"(\w+)\s*=\s*(.+)", s)
    if not m:
        raise ConfigError(f"expected key = value, got {s!r}", line, col)
    key, value = m.group(1), m.group(2).strip()
    vcol = col + m.start(2)
    if key == "X":
        run["X"] = _vertexset(value, line, vcol)
    elif key == "point":
        run["point"] = _number(value, line, vcol)
    elif key in RUN_DEFAULTS:
        if not re.fullmatch(r"\d+", value) or int(value) < 1:
            raise ConfigError(f"{key} must be a positive integer", line, vcol)
        run[key] = int(value)
    else:
        raise ConfigError(f"unknown key {key!r}", line, col)


# -- emitting --------------------------------------------------------------


def _bracket(lo, hi, lo_closed, hi_closed) -> str:
    def t(v):
        return fraction_text(v) if isinstance(v, Fraction) else expr_text(v)

    return ("[" if lo_closed else "(") + f"{t(lo)}, {t(hi)}" + ("]" if hi_closed else ")")


def emit_config(ws: Workspace) -> str:
    out = []
    if ws.markov is not None:
        m = ws.markov
        hi = "inf" if m.ambient_hi is None else fraction_text(m.ambient_hi)
        out += ["[map]", f"ambient = [{fraction_text(m.ambient_lo)}, {hi})"]
        for iv in m.explicit:
            out.append(f"I_{iv.index} = [{fraction_text(iv.lo)}, {fraction_text(iv.hi)}]")
            for p in iv.pieces:
                affine = expr_text(sympy.Rational(p.slope.numerator, p.slope.denominator) * sympy.Symbol("x")
                                   + sympy.Rational(p.intercept.numerator, p.intercept.denominator))
                out.append(f"  on {_bracket(p.lo, p.hi, p.lo_closed, p.hi_closed)}: {affine}")
            for a, b in iv.overrides:
                out.append(f"  at {fraction_text(a)} -> {fraction_text(b)}")
        if m.family is not None:
            f = m.family
            out.append(f"for n>={f.n0}: I_n = [{expr_text(f.lo)}, {expr_text(f.hi)}]")
            for r in f.pieces:
                out.append("  " + r.text())
            for a, b in f.overrides:
                out.append(f"  at {expr_text(a)} -> {expr_text(b)}")
        out.append("")
    if ws.graph is not None:
        g = ws.graph
        out.append("[ultragraph]")
        if not g.extra_vertices.is_empty():
            out.append(f"vertices = {g.extra_vertices}")
        for e in g.explicit_edges:
            out.append(f"edge {e.id}: v{e.source} -> {e.range}")
        for f in g.edge_families:
            cls = "" if f.modulus == 1 else f", n={f.residue} mod {f.modulus}"
            offs = ",".join(str(d) for d in f.offsets)
            const = "" if f.constant.is_empty() else f" + {f.constant}"
            out.append(f"family n>={f.n0}{cls}: {f.prefix}_n: v_n -> offsets{{{offs}}}{const}")
        out.append("")
    out.append("[run]")
    if ws.X is not None:
        out.append(f"X = {ws.X}")
    if ws.point is not None:
        out.append(f"point = {fraction_text(ws.point)}")
    for key in RUN_DEFAULTS:
        out.append(f"{key} = {getattr(ws, key)}")
    return "\n".join(out) + "\n"
