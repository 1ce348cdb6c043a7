import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from muygps_ecg.data import EcgDataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_beats(n_per_class, n_features=80, seed=0, noise=0.08):
    """ECG-shaped toy beats: one smooth template per class plus noise, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 1, n_features)
    X, y = [], []
    for c, n in enumerate(n_per_class):
        center = 0.2 + 0.15 * c
        template = 0.2 + 0.7 * np.exp(-((t - center) / 0.04) ** 2) + 0.1 * np.sin(6 * t + c)
        X.append(np.clip(template + noise * rng.standard_normal((n, n_features)), 0, 1))
        y.append(np.full(n, c))
    return EcgDataset(np.vstack(X), np.concatenate(y))


@pytest.fixture
def beats():
    return make_beats((120, 300), seed=3)


def write_csv(path, X, y, header=None, fmt="%.18e"):
    with open(path, "w") as fh:
        if header:
            fh.write(header + "\n")
        for row, label in zip(X, y):
            fh.write(",".join(fmt % float(v) for v in row) + "," + (fmt % float(label)) + "\n")
    return path


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
