import numpy as np
import pytest

from superensemble.data import Dataset, Feature, Schema


def make_dataset(X, y, categorical=(), values=None, name="fixture"):
    """Build a Dataset from arrays; ``categorical`` lists categorical column indices."""
    X = np.array(X, dtype=np.float64)
    feats = []
    for j in range(X.shape[1]):
        if j in categorical:
            size = values[j] if values and j in values else int(X[:, j].max()) + 1
            feats.append(Feature(f"c{j}", "categorical", tuple(f"v{i}" for i in range(size))))
        else:
            feats.append(Feature(f"x{j}", "numeric"))
    y = None if y is None else np.array(y, dtype=np.int8)
    return Dataset(Schema(tuple(feats), "label"), X, y, ("pos", "neg"), name)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
