import sys

import numpy as np
import pytest

from bearing_ssd import kernels
from bearing_ssd.features import FeatureId, extract_features
from bearing_ssd.signals import generate_population


@pytest.fixture(scope="session")
def population():
    return generate_population()


@pytest.fixture(scope="session")
def feature_table(population):
    return extract_features(population)


@pytest.fixture(scope="session")
def kurtosis_table(feature_table):
    return feature_table.select([FeatureId.KURTOSIS])


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    """Run the test once per available kernel backend."""
    previous = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
