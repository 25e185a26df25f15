import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from exchange_mcmc.diagnostics import (KS_CRIT_01, acceptance_rate, effective_sample_size,
                                       efficiency, ks_statistic, ks_test, min_ess, thin)
from exchange_mcmc.model import DomainError, WorkCounters


def _trace(theta, updates):
    return SimpleNamespace(theta=np.asarray(theta, dtype=float).reshape(-1, 1),
                           counters=WorkCounters(gibbs_updates=updates))


def test_acceptance_rate_examples():
    assert acceptance_rate(np.ones(7, dtype=bool)) == 1.0
    assert acceptance_rate(np.arange(10) % 2 == 0) == 0.5
    with pytest.raises(DomainError):
        acceptance_rate(np.array([], dtype=bool))


@given(st.lists(st.booleans(), min_size=1, max_size=50), st.lists(st.booleans(), min_size=1, max_size=50))
def test_acceptance_rate_concatenation(a, b):
    whole = acceptance_rate(np.array(a + b))
    parts = (len(a) * acceptance_rate(np.array(a)) + len(b) * acceptance_rate(np.array(b))) / (len(a) + len(b))
    assert whole == pytest.approx(parts, abs=1e-12)


def test_ess_iid():
    est = effective_sample_size(np.random.default_rng(0).standard_normal(10_000))
    assert 8_000 <= est.ess <= 12_000
    assert est.autocorrelation_time >= 1.0 and est.ess <= 10_000
    assert est.method == "initial-positive-sequence"


def test_ess_constant_is_degenerate():
    est = effective_sample_size(np.full(100, 3.0))
    assert est.degenerate and est.ess == 0.0


def test_ess_ar1():
    rng = np.random.default_rng(1)
    n, phi = 100_000, 0.9
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / math.sqrt(1 - phi ** 2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    target = n * (1 - phi) / (1 + phi)
    assert abs(effective_sample_size(x).ess - target) <= 0.25 * target


@settings(max_examples=25)
@given(st.floats(-100, 100).filter(lambda v: abs(v) > 1e-3), st.floats(-100, 100))
def test_ess_affine_invariance(a, b):
    x = np.random.default_rng(3).standard_normal(500).cumsum()
    assert effective_sample_size(a * x + b).ess == pytest.approx(effective_sample_size(x).ess, rel=1e-8)


def test_ess_domain():
    with pytest.raises(DomainError):
        effective_sample_size(np.arange(5.0))


def test_min_ess_picks_worst_component():
    rng = np.random.default_rng(2)
    theta = np.column_stack([rng.standard_normal(2000), rng.standard_normal(2000).cumsum()])
    assert min_ess(theta).ess == effective_sample_size(theta[:, 1]).ess


def test_efficiency_examples():
    x = np.random.default_rng(4).standard_normal(1000)
    a, b = _trace(x, 100), _trace(x, 200)
    assert efficiency(b) == pytest.approx(efficiency(a) / 2)
    assert efficiency(a) / efficiency(a) == 1.0
    assert efficiency(_trace(np.ones(50), 10)) == 0.0
    with pytest.raises(DomainError):
        efficiency(_trace(x, 0))


def test_efficiency_homogeneous(monkeypatch):
    from exchange_mcmc import diagnostics
    x = np.zeros(20)
    for ess, updates in ((40.0, 1000), (80.0, 2000)):
        monkeypatch.setattr(diagnostics, "min_ess", lambda _, e=ess: diagnostics.EssEstimate(e, 1.0))
        assert efficiency(_trace(x, updates)) == 0.04


def test_thin_default_stride():
    x = np.random.default_rng(6).standard_normal(5000).cumsum()
    tau = effective_sample_size(x[100:]).autocorrelation_time
    assert len(thin(x, burn_in=100)) == len(x[100:][::math.ceil(tau)])
    assert len(thin(x, burn_in=0, stride=10)) == 500


def test_ks_reference_level():
    rng = np.random.default_rng(7)
    passes = sum(ks_test(rng.standard_normal(10_000), stats.norm.cdf)[1] for _ in range(100))
    assert passes >= 95


def test_ks_shift_and_quantiles():
    rng = np.random.default_rng(8)
    assert not ks_test(rng.standard_normal(1000) + 1.0, stats.norm.cdf)[1]
    n = 500
    q = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_statistic(q, stats.norm.cdf) <= 1.0 / n
    with pytest.raises(DomainError):
        ks_test(np.zeros(29), stats.norm.cdf)
    assert KS_CRIT_01 == 1.628
