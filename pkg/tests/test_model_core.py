import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from exchange_mcmc.gaussian import GaussianPrecisionModel
from exchange_mcmc.model import (BridgeSchedule, DomainError, bridge_log_f, default_beta_schedule,
                                 log_bridge_ratio, log_z_ratio_estimate)


@pytest.mark.parametrize("K, expected", [
    (0, [1.0, 0.0]),
    (1, [1.0, 0.5, 0.0]),
    (3, [1.0, 0.75, 0.5, 0.25, 0.0]),
])
def test_schedule_values(K, expected):
    s = default_beta_schedule(K)
    assert list(s.betas) == expected
    assert s.K == K and len(s) == K + 2


@given(st.integers(min_value=0, max_value=500))
def test_schedule_strictly_decreasing_with_exact_endpoints(K):
    b = default_beta_schedule(K).betas
    assert b[0] == 1.0 and b[-1] == 0.0
    assert all(x > y for x, y in zip(b, b[1:]))


@pytest.mark.parametrize("bad", [-1, 1.5])
def test_schedule_rejects_bad_K(bad):
    with pytest.raises(DomainError):
        default_beta_schedule(bad)


@pytest.mark.parametrize("betas", [(1.0, 0.5), (0.9, 0.0), (1.0, 0.5, 0.5, 0.0), (1.0,)])
def test_custom_schedule_validation(betas):
    with pytest.raises(DomainError):
        BridgeSchedule(betas)


def test_bridge_log_f_example():
    m = GaussianPrecisionModel()
    x = np.array([1.0])
    # 0.5 * (-1.0) + 0.5 * (-0.5), evaluated by hand
    assert bridge_log_f(m, x, [2.0], [1.0], 0.5) == pytest.approx(-0.75, abs=1e-15)


@given(st.floats(0.01, 10), st.floats(0.01, 10),
       st.lists(st.floats(-5, 5), min_size=1, max_size=5))
def test_bridge_log_f_endpoints_bitwise(ta, tb, xs):
    m = GaussianPrecisionModel()
    x = np.array(xs)
    assert bridge_log_f(m, x, [ta], [tb], 1.0) == m.log_f(x, [ta])
    assert bridge_log_f(m, x, [ta], [tb], 0.0) == m.log_f(x, [tb])


def test_bridge_log_f_domain():
    m = GaussianPrecisionModel()
    with pytest.raises(DomainError):
        bridge_log_f(m, np.array([1.0]), [1.0], [2.0], 1.5)


def test_log_bridge_ratio_vanishes_for_equal_endpoints():
    assert log_bridge_ratio(-3.7, -3.7, 0.8, 0.3) == 0.0


def test_log_z_ratio_examples():
    m = GaussianPrecisionModel()
    x = np.array([1.0])
    assert log_z_ratio_estimate(m, x, [1.0], [2.0]) == pytest.approx(0.5, abs=1e-15)
    assert log_z_ratio_estimate(m, x, [1.7], [1.7]) == 0.0


def test_log_z_ratio_unbiased():
    m = GaussianPrecisionModel()
    rng = np.random.default_rng(2)
    vals = np.array([math.exp(log_z_ratio_estimate(m, m.exact_sample([2.0], rng), [1.0], [2.0]))
                     for _ in range(100_000)])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - math.sqrt(2.0)) < 4 * se
