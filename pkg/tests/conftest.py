import sys
from importlib import resources
from pathlib import Path

import pytest

from ultramarkov.cli import load_fixture
from ultramarkov.markov import escape_data

FIXTURES = ["example1", "example2", "example2_negative", "example3", "broken_map"]


@pytest.fixture(scope="session")
def ws():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_fixture(name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def ed(ws):
    def get(name):
        w = ws(name)
        return escape_data(w.markov, w.point)

    return get


@pytest.fixture
def golden_dir() -> Path:
    return Path(__file__).parent / "golden"


def fixture_text(name: str) -> str:
    return (resources.files("ultramarkov") / "fixtures" / f"{name}.cfg").read_text()


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
