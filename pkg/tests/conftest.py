import numpy as np
import pytest

from minimax_seq import (
    SequenceProblem,
    make_exponential_class,
    make_exponential_spectrum,
    make_power_class,
    make_power_spectrum,
)

# 3 parameter cells per regime; N = 64 keeps every optimizer far from the
# end of the range while Monte Carlo stays fast.
REGIME_CELLS = [(1.0, 2.0, 1e-2), (0.5, 1.0, 3e-2), (2.0, 1.5, 1e-3)]
REGIME_TAGS = ("pp", "pe", "ep", "ee")
GRID_N = 64

_SPEC = {"p": make_power_spectrum, "e": make_exponential_spectrum}
_CLS = {"p": make_power_class, "e": make_exponential_class}


def build_regime_problem(tag: str, p: float, kappa: float, sigma: float,
                         n: int = GRID_N) -> SequenceProblem:
    spectrum = _SPEC[tag[0]](p, n)
    ellipsoid = _CLS[tag[1]](kappa, n)
    return SequenceProblem(spectrum, ellipsoid, sigma, n)


def regime_grid() -> list:
    """The canonical 12-problem grid: (tag, p, kappa, sigma, problem)."""
    out = []
    for tag in REGIME_TAGS:
        for p, kappa, sigma in REGIME_CELLS:
            out.append((tag, p, kappa, sigma,
                        build_regime_problem(tag, p, kappa, sigma)))
    return out


@pytest.fixture(scope="session")
def grid_problems():
    return regime_grid()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


# one line per acceptance criterion, echoed uncaptured after the test run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
