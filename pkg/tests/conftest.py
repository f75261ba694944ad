import math

import numpy as np
import pytest

from dp_lab import BaseMeasure, ContinuousSpec, DirichletParams, Location


def uniform_base():
    return BaseMeasure.uniform()


def mixed_base():
    """0.5 * uniform(0, 1) + 0.5 * delta_0.2"""
    return BaseMeasure(0.5, ContinuousSpec(), ((Location(0.2, 0), 0.5),))


def atomic_base():
    return BaseMeasure.point(0.2)


BASES = {"uniform": uniform_base, "mixed": mixed_base, "atomic": atomic_base}
K_GRID = (0.5, 1.0, 5.0)


def within(mean, target, se, nsig=3.0, slack=0.0):
    return abs(mean - target) <= nsig * se + slack


def mc(values):
    v = np.asarray(values, dtype=float)
    return v.mean(), v.std(ddof=1) / math.sqrt(v.size)


@pytest.fixture(params=list(BASES))
def base_name(request):
    return request.param


@pytest.fixture
def params_uniform():
    return DirichletParams(1.0, uniform_base())


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record one acceptance line; it is printed now and again in the summary."""
    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {label}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
