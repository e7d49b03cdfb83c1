import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lagdmd.errors import ExtrapolationWarning
from lagdmd.solvers import (AdvDiff2dConfig, Advection1dConfig, solve_advdiff_2d,
                            solve_advection_1d)

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def adv1d():
    cfg = Advection1dConfig()
    return cfg, solve_advection_1d(cfg)


@pytest.fixture(scope="session")
def adv2d():
    cfg = AdvDiff2dConfig()
    return cfg, solve_advdiff_2d(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quiet_extrapolation():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    import sys
    mods = [m for name, m in sys.modules.items() if name.endswith("test_acceptance")]
    RESULTS = getattr(mods[0], "RESULTS", {}) if mods else {}
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
