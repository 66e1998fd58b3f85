from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from etsc.synthetic import make_onset_dataset

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def onset_data():
    X, y = make_onset_dataset(seed=7).to_arrays()
    return X[:, 0, :], y


@pytest.fixture(scope="session")
def gunpoint_path():
    return DATA / "GunPoint.ts"


@pytest.fixture(scope="session")
def basicmotions_path():
    return DATA / "BasicMotions.ts"


def pytest_terminal_summary(terminalreporter):
    for name, module in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and getattr(module, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for n in sorted(module.RESULTS):
                terminalreporter.write_line(module.RESULTS[n])
