from pathlib import Path

import numpy as np
import pytest

from srnbrf.dataset import LabeledDataset

KEEL_DIR = Path(__file__).resolve().parents[1] / "data" / "keel"


def make_data(X, y, name="synthetic"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return LabeledDataset(X, np.asarray(y), [f"x{i}" for i in range(X.shape[1])], name=name)


def blobs(n_pos, n_neg, d=2, sep=2.0, seed=0, name="blobs"):
    """Two Gaussian clouds, positives centered at +sep/2 on every axis."""
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(sep / 2, 1.0, (n_pos, d)), rng.normal(-sep / 2, 1.0, (n_neg, d))])
    y = np.r_[np.ones(n_pos, int), np.zeros(n_neg, int)]
    return make_data(X, y, name)


def random_data(rng, n=None, d=None, grid=False):
    """Random labeled data; ``grid`` snaps features to a coarse lattice to force distance ties."""
    n = n or int(rng.integers(8, 200))
    d = d or int(rng.integers(1, 11))
    X = rng.integers(0, 4, (n, d)).astype(float) if grid else rng.normal(size=(n, d))
    y = (rng.random(n) < rng.uniform(0.1, 0.5)).astype(int)
    y[0], y[1] = 1, 0
    return make_data(X, y)


@pytest.fixture(scope="session")
def keel_dir():
    return KEEL_DIR


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
