import numpy as np
import pytest

from cpmarg.dp import ChangepointWeights
from cpmarg.models import GaussianParams, GaussianSegmentModel

_ACCEPTANCE_LINES: list[str] = []


def random_instance(rng, n, m, weighted=True):
    """Gaussian data with a few level shifts, random segment params and weights."""
    shifts = np.repeat(rng.normal(0.0, 3.0, 3), int(np.ceil(n / 3)))[:n]
    x = shifts + rng.normal(0.0, 1.0, n)
    params = GaussianParams(rng.normal(0.0, 3.0, m), rng.uniform(0.5, 3.0, m))
    if weighted:
        w = rng.uniform(0.2, 3.0, n)
        w[-1] = 1.0
        weights = ChangepointWeights.from_weights(w, m)
    else:
        weights = ChangepointWeights.uniform(n, m)
    return x, params, weights


@pytest.fixture
def model():
    return GaussianSegmentModel()


@pytest.fixture(scope="session")
def acceptance_report():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
