import os

import hypothesis
import numpy as np
import pytest

from iokoopman.embedding import normalize_dataset
from iokoopman.plant import ExcitationConfig, generate_dataset

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def plant_raw():
    return generate_dataset(ExcitationConfig(seed=7, length=600))


@pytest.fixture(scope="session")
def plant_data(plant_raw):
    return normalize_dataset(plant_raw)


@pytest.fixture(scope="session")
def reference_experiment():
    """The full seeded ordering experiment, run once per session (a few minutes)."""
    from iokoopman.experiment import run_reference_experiment
    return run_reference_experiment()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
