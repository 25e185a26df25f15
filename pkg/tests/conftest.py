import numpy as np
import pytest

from exchange_mcmc.model import Model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class FixedProposal:
    """Always proposes the same point; the proposal term is whatever the test says."""

    kind = "fixed"

    def __init__(self, theta, log_ratio=0.0):
        self.theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        self._log_ratio = log_ratio

    def sample(self, theta, rng):
        return self.theta.copy()

    def log_ratio(self, theta, theta_prop):
        return self._log_ratio


class ScriptedModel(Model):
    """Wraps a model so exact and bridge draws come from a script, in order."""

    def __init__(self, base, exact=(), bridge=()):
        self.base = base
        self.param_dim = base.param_dim
        self.data = base.data
        self._exact = list(exact)
        self._bridge = list(bridge)

    def log_f(self, x, theta):
        return self.base.log_f(x, theta)

    def log_prior(self, theta):
        return self.base.log_prior(theta)

    def exact_sample(self, theta, rng, counters=None):
        return np.asarray(self._exact.pop(0), dtype=np.float64)

    def bridge_transition(self, x, theta_a, theta_b, beta, rng, counters=None):
        return np.asarray(self._bridge.pop(0), dtype=np.float64)
