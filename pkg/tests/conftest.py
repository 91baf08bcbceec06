import numpy as np
import pytest

from hdsurvey import _core
from hdsurvey.dataset import Dataset, generic_schema, normalize, synthesize

_ACCEPTANCE_LINES = []

BACKENDS = ["python"] + (["compiled"] if _core.BACKEND == "compiled" else [])


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def planted3():
    """3 signal features (0, 1, 2) at full strength, already normalized."""
    return normalize(synthesize(1000, 1000, [0, 1, 2], 1.0, seed=11))


@pytest.fixture(scope="session")
def planted1():
    return normalize(synthesize(1000, 1000, [0], 1.0, seed=12))


def make_dataset(matrix, labels, normalized=True):
    matrix = np.asarray(matrix, dtype=float)
    return Dataset(matrix, labels, generic_schema(matrix.shape[1]), normalized)
