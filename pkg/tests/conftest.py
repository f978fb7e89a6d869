from pathlib import Path

import numpy as np
import pytest

from rominvert.forward import ForwardParams, generate_dataset
from rominvert.rom import TrainConfig, train

FIXTURES = Path(__file__).parent / "fixtures"
RATES = (100.0, 200.0, 300.0, 400.0)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def dataset():
    return generate_dataset(RATES, ForwardParams(), n_points=115)


@pytest.fixture(scope="session")
def times(dataset):
    return next(iter(dataset.values())).times


@pytest.fixture(scope="session")
def models(dataset):
    """Both surrogates trained with default settings (10 epochs, seed 0)."""
    return {
        "nonoverlapping": train(dataset, TrainConfig.nonoverlapping()),
        "sliding": train(dataset, TrainConfig.sliding()),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
