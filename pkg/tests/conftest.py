import numpy as np
import pytest

from slce.data import build_centroid_target
from slce.synthetic import make_planted

# scale at which lambda values in 0.04..0.5 sparsify the planted corpus
PLANTED = dict(n_samples=100, n_features=100, n_informative=10, separation=0.6, noise=0.3)

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def planted():
    ds, informative = make_planted(seed=0, **PLANTED)
    return ds, informative, build_centroid_target(ds)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def write_csv(path, ds):
    """Samples as rows, named feature columns, label last."""
    with open(path, "w") as fh:
        names = ds.feature_names or [f"g{i}" for i in range(ds.n_features)]
        fh.write(",".join(list(names) + ["label"]) + "\n")
        for j in range(ds.n_samples):
            cells = [repr(float(v)) for v in ds.features[:, j]]
            fh.write(",".join(cells + [f"class{ds.labels[j]}"]) + "\n")
    return path


@pytest.fixture(scope="session")
def small_csv(tmp_path_factory):
    ds, _ = make_planted(seed=2, **{**PLANTED, "n_samples": 40, "n_features": 20, "n_informative": 4})
    return write_csv(tmp_path_factory.mktemp("data") / "small.csv", ds)
