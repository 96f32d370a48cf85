import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("flushlab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("flushlab")


@pytest.fixture(scope="session")
def profile3():
    from flushlab.flush_profile import build_flush_profile

    return build_flush_profile(1.0, 1.0, 3)


@pytest.fixture(scope="session")
def data():
    from flushlab.band_field import make_analytic_data

    return make_analytic_data(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_data():
    from flushlab.band_field import make_analytic_data

    return make_analytic_data(seed=0, nx=32, ny=257)


@pytest.fixture(scope="session")
def small_bundle(profile3, small_data):
    from flushlab.ansatz import build_bundle

    return build_bundle(profile3, small_data, 0.1, t_end=1.0, dt=2e-3, growth=1.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
