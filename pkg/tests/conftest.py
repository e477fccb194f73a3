import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from singkam.series import Series

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PHI = (1 + math.sqrt(5)) / 2
ALPHA = (1.0, PHI)


@pytest.fixture
def S2():
    return Series(2, deg_cap=16, t_cap=2)


@pytest.fixture
def S1():
    return Series(1, deg_cap=12, t_cap=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def vars2(S):
    L = S.layout
    return {name: S.var(idx) for name, idx in [
        ("t1", L.t(0)), ("t2", L.t(1)), ("l1", L.lam(0)), ("l2", L.lam(1)),
        ("q1", L.q(0)), ("q2", L.q(1)), ("p1", L.p(0)), ("p2", L.p(1))]}
