import json
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "ctxlab" / "fixtures"


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / name


@pytest.fixture
def load_fixture():
    return lambda name: json.loads((FIXTURES / name).read_text())


ACCEPTANCE_RESULTS = []


class _Criterion:
    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.notes = []

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        import time

        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time

        elapsed = time.perf_counter() - self._t0
        passed = exc_type is None and (self.budget is None or elapsed <= self.budget)
        budget = "no time limit" if self.budget is None else f"limit {self.budget:g} s"
        line = f"criterion {self.number:>2}: {'PASS' if passed else 'FAIL'}  {elapsed:7.2f} s ({budget})  {self.title}"
        if self.notes:
            line += "  [" + "; ".join(self.notes) + "]"
        ACCEPTANCE_RESULTS.append((self.number, line))
        if exc_type is None and not passed:
            raise AssertionError(f"criterion {self.number} took {elapsed:.2f} s, over its {self.budget} s budget")
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
