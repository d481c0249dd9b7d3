"""Command-line entry point: load a workspace, run checks, emit reports."""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, Workspace, parse_config
from .markov import (
    EscapeData,
    MarkovError,
    NotEscaping,
    escape_data,
    induced_ultragraph,
    transition_matrix,
    validate_markov,
    x_hypothesis_check,
)
from .relations import RelationError, RelationScope, psi_phi_identity_check, relation_suite, scope_generators
from .report import CheckResult, Report, Verdict
from .rep import (
    branching_from_markov,
    build_markov_rep,
    check_diagram,
    check_nu_equals_pi,
    export_matrices,
    injectivity_counting,
    injectivity_markov,
    lift_branching,
    markov_setup,
)
from .ultragraph import (
    RelativeUltragraph,
    UltragraphError,
    lift_condition_L_equivalence_check,
    range_Y_finiteness,
)
from .vertexset import VertexSetError

COMMANDS = ("validate", "ultragraph", "lift", "relations", "markov-rep", "diagram", "injectivity", "all")
SCOPE_INDEX = 6  # generators with source index up to this bound are checked


class InputError(Exception):
    """Anything that maps to exit code 3."""


def fixture_names() -> list[str]:
    root = resources.files("ultramarkov") / "fixtures"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_fixture(name: str) -> Workspace:
    path = resources.files("ultramarkov") / "fixtures" / f"{name}.cfg"
    if not path.is_file():
        raise InputError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return parse_config(path.read_text(), name)


class Session:
    """Shared state for one workspace; expensive objects are built once."""

    def __init__(self, ws: Workspace, export_dir: str | None = None):
        self.ws = ws
        self.export_dir = export_dir
        self._setup = None
        self._ed = None
        self._validation = None

    def validation(self) -> Report:
        if self._validation is None:
            self._validation = validate_markov(self.ws.markov, self.N)
        return self._validation

    def invalid_map(self) -> Report | None:
        """The validation failures, when the map is not in the Markov class."""
        if self.ws.markov is None or not self.validation().failures:
            return None
        return Report(self.validation().failures)

    @property
    def D(self) -> int:
        return self.ws.depth

    @property
    def N(self) -> int:
        return self.ws.horizon

    def graph(self):
        if self.ws.graph is not None:
            return self.ws.graph
        if self.ws.markov is not None:
            return induced_ultragraph(self.ws.markov, self.N)
        raise InputError("the workspace has neither a [map] nor an [ultragraph] block")

    def rg(self) -> RelativeUltragraph:
        if self.ws.X is None:
            raise InputError("run key X is required")
        try:
            return RelativeUltragraph(self.graph(), self.ws.X)
        except UltragraphError as exc:
            raise InputError(f"X ⊆ Reg(G) violated: {exc}") from None

    def require_map(self, command: str):
        if self.ws.markov is None:
            raise InputError(f"command {command!r} needs a [map] block")
        if self.ws.point is None:
            raise InputError("run key point is required")
        if self.ws.X is None:
            raise InputError("run key X is required")
        return self.ws.markov

    def escape(self, report: Report) -> EscapeData | None:
        if self._ed is None:
            ed = escape_data(self.ws.markov, self.ws.point, self.ws.bound)
            if isinstance(ed, NotEscaping):
                report.add(CheckResult("escape", "the orbit of x escapes", str(self.ws.point), Verdict.UNDETERMINED,
                                       {"bound": ed.bound}, [], "no escape within the iteration bound"))
                return None
            self._ed = ed
        return self._ed

    def setup(self, report: Report):
        if self._setup is None:
            ed = self.escape(report)
            if ed is None:
                return None
            self._setup = markov_setup(self.ws.markov, ed, self.ws.X, self.D, self.N, check_hypothesis=False)
        return self._setup


def _escape_record(ed: EscapeData) -> CheckResult:
    return CheckResult("escape", "the orbit of x escapes", str(ed.x), Verdict.HOLDS, {},
                       [ed.tau, ed.J, ed.target], f"tau = {ed.tau}, J = {ed.J}, g^tau(x) = {ed.target}")


def run_validate(s: Session) -> Report:
    report = Report()
    if s.ws.markov is not None:
        report.extend(s.validation())
        if report.failures:
            return report
    else:
        s.graph()
        report.add(CheckResult("graph.well-formed", "ultragraph data", "G", Verdict.HOLDS, {}, [],
                               "edge ids unique, families disjoint"))
    if s.ws.X is not None:
        report.extend(range_Y_finiteness(s.rg()))
    return report


def run_ultragraph(s: Session) -> Report:
    report = Report()
    g = s.graph()
    if s.ws.markov is not None:
        tm = transition_matrix(s.ws.markov, s.N)
        rows = [f"r(e{n})={row}" for n, row in sorted(tm.rows.items())[:SCOPE_INDEX]]
        report.add(CheckResult("graph.transition-rows", "induced ultragraph", "G", Verdict.HOLDS,
                               {"horizon": s.N}, rows, f"{len(tm.rows)} rows consistent with the family rule"))
    report.add(CheckResult("graph.sets", "vertex classes", "G", Verdict.HOLDS, {},
                           [f"sources={g.sources}", f"sinks={g.sinks}"], ""))
    report.extend(range_Y_finiteness(s.rg()))
    report.extend(lift_condition_L_equivalence_check(s.rg(), s.ws.maxlen, min(s.N, 10)))
    return report


def run_lift(s: Session) -> Report:
    report = Report()
    report.extend(lift_condition_L_equivalence_check(s.rg(), s.ws.maxlen, min(s.N, 10)))
    if s.ws.markov is not None:
        s.require_map("lift")
        su = s.setup(report)
        if su is not None:
            bs = branching_from_markov(s.ws.markov, su.ed, s.D, s.N, s.ws.X, setup=su)
            report.extend(lift_branching(bs).check(RelationScope.up_to(su.graph, min(SCOPE_INDEX, s.N)).sets))
    return report


def _hypothesis(s: Session, report: Report, ed: EscapeData) -> bool:
    hyp = x_hypothesis_check(s.ws.markov, ed.J, s.ws.X, s.N)
    report.extend(hyp)
    return not hyp.failures


def run_relations(s: Session) -> Report:
    s.require_map("relations")
    report = Report()
    su = s.setup(report)
    if su is None or not _hypothesis(s, report, su.ed):
        return report
    nu = build_markov_rep(s.ws.markov, su.ed, s.ws.X, s.D, s.N, setup=su)
    scope = RelationScope.up_to(su.graph, min(SCOPE_INDEX, s.N))
    report.extend(relation_suite(nu, su.rg, scope, "nu"))
    report.extend(psi_phi_identity_check(nu, su.rg, RelationScope.up_to(su.graph, min(5, s.N)), "nu"))
    return report


def run_markov_rep(s: Session) -> Report:
    m = s.require_map("markov-rep")
    report = Report()
    su = s.setup(report)
    if su is None:
        return report
    report.add(_escape_record(su.ed))
    if not _hypothesis(s, report, su.ed):
        return report
    report.add(CheckResult("orbit.tree", "backward orbit of the target", "R_g(x)", Verdict.HOLDS,
                           {"depth": s.D, "horizon": s.N}, [su.tree.level(d)[:3] for d in range(1, min(s.D, 3) + 1)],
                           f"{len(su.tree)} points, {len(su.tree.excluded)} beyond the horizon"))
    report.extend(check_nu_equals_pi(m, su.ed, s.ws.X, s.D, s.N, SCOPE_INDEX))
    bs = branching_from_markov(m, su.ed, s.D, s.N, s.ws.X, setup=su)
    report.extend(bs.check_axioms())
    if s.export_dir:
        nu = build_markov_rep(m, su.ed, s.ws.X, s.D, s.N, setup=su)
        export_matrices(nu, scope_generators(RelationScope.up_to(su.graph, min(SCOPE_INDEX, s.N))), s.export_dir)
    return report


def run_diagram(s: Session) -> Report:
    s.require_map("diagram")
    report = Report()
    su = s.setup(report)
    if su is None or not _hypothesis(s, report, su.ed):
        return report
    bs = branching_from_markov(s.ws.markov, su.ed, s.D, s.N, s.ws.X, setup=su)
    report.extend(check_diagram(bs, RelationScope.up_to(su.graph, min(5, s.N)), "pi_lift"))
    return report


def run_injectivity(s: Session) -> Report:
    m = s.require_map("injectivity")
    report = Report()
    su = s.setup(report)
    if su is None:
        return report
    report.extend(range_Y_finiteness(su.rg))
    if not _hypothesis(s, report, su.ed):
        return report
    report.extend(injectivity_markov(m, su.ed, s.ws.X, s.D, s.N, s.ws.cycles, s.ws.periods, setup=su))
    bs = branching_from_markov(m, su.ed, s.D, s.N, s.ws.X, setup=su)
    report.extend(injectivity_counting(bs, s.ws.cycles, s.ws.periods, vertex_horizon=s.D))
    return report


RUNNERS = {
    "validate": run_validate,
    "ultragraph": run_ultragraph,
    "lift": run_lift,
    "relations": run_relations,
    "markov-rep": run_markov_rep,
    "diagram": run_diagram,
    "injectivity": run_injectivity,
}


def run(ws: Workspace, command: str, export_dir: str | None = None) -> Report:
    s = Session(ws, export_dir)
    if command != "validate":
        bad = s.invalid_map()
        if bad is not None:
            return bad
    if command != "all":
        return RUNNERS[command](s)
    report = Report()
    names = list(RUNNERS) if ws.markov is not None else ["validate", "ultragraph", "lift"]
    for name in names:
        report.extend(RUNNERS[name](s))
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ultramarkov", description=__doc__)
    ap.add_argument("command", choices=COMMANDS + ("fixtures",))
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="workspace configuration file")
    src.add_argument("--fixture", metavar="NAME", help="bundled fixture (see the 'fixtures' command)")
    ap.add_argument("--depth", type=int, metavar="D", help="orbit tree depth")
    ap.add_argument("--horizon", type=int, metavar="N", help="highest interval / vertex index")
    ap.add_argument("--cycles", type=int, metavar="LEN", help="cycle length bound")
    ap.add_argument("--format", choices=("text", "records"), default="text")
    ap.add_argument("--export-matrices", metavar="DIR", help="write coordinate-list matrices (markov-rep)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fixtures":
        print("\n".join(fixture_names()))
        return 0
    try:
        if args.config:
            path = Path(args.config)
            try:
                ws = parse_config(path.read_text(encoding="utf-8"), path.stem)
            except OSError as exc:
                raise InputError(str(exc)) from None
        elif args.fixture:
            ws = load_fixture(args.fixture)
        else:
            raise InputError("one of --config or --fixture is required")
        for key in ("depth", "horizon", "cycles"):
            val = getattr(args, key)
            if val is not None and val <= 0:
                raise InputError(f"--{key} must be positive")
        ws = ws.with_scope(depth=args.depth, horizon=args.horizon, cycles=args.cycles)
        report = run(ws, args.command, args.export_matrices)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, UltragraphError, VertexSetError, RelationError, MarkovError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(report.to_records() if args.format == "records" else report.to_text())
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
