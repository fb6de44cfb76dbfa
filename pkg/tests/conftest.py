import os
import sys
import math

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from Physics.Dynamics import SystemParams
from Physics.Drive import CombSpec

np.seterr(all="warn")

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def paper_params():
    return SystemParams.from_preset("paper")


@pytest.fixture(scope="session")
def fast_params():
    return SystemParams.from_preset("fast")


@pytest.fixture
def half_kick_comb(fast_params):
    # theta = pi/2, five comb periods
    return CombSpec.from_kick_angle(0.5 * math.pi, fast_params, n_periods=5)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs a full experiment through the command line")
