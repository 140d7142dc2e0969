import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bictx.behavior import Behavior

settings.register_profile(
    "default", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SQ = 1 / math.sqrt(2)

unit = st.floats(-1.0, 1.0, allow_nan=False)
angles_theta = st.floats(0.0, math.pi / 2, allow_nan=False)
angles_phi = st.floats(0.0, 2 * math.pi, allow_nan=False)


@st.composite
def behaviors(draw):
    return Behavior(*(draw(unit) for _ in range(5)))


@pytest.fixture
def optimal():
    return Behavior(SQ, SQ, SQ, SQ, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
