"""Zero-mean Gaussian likelihood with unknown precision and a conjugate Gamma prior.

The likelihood normalizer ``Z(theta) = (2 pi / theta)^(N/2)`` is known in
closed form, which makes this the ground-truth model for every sampler. The
samplers never see it: only :func:`true_log_z` and the exact-Z baseline do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, Model, as_param


@dataclass(frozen=True)
class GammaParams:
    """Gamma distribution in shape/rate form (mean ``shape / rate``)."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise DomainError(f"Gamma shape and rate must be positive, got {self}")

    @property
    def log_norm(self) -> float:
        return self.shape * math.log(self.rate) - math.lgamma(self.shape)

    def logpdf(self, t: float) -> float:
        return gamma_logpdf(t, self.shape, self.rate, self.log_norm)

    def cdf(self, t):
        from scipy.special import gammainc
        return gammainc(self.shape, self.rate * np.maximum(t, 0.0))

    def sample(self, rng) -> float:
        return rng.standard_gamma(self.shape) / self.rate


def gamma_logpdf(t, shape, rate, log_norm) -> float:
    # expression order mirrors the compiled kernel
    if t <= 0.0:
        return -math.inf
    return (shape - 1.0) * math.log(t) - rate * t + log_norm


def sum_of_squares(x) -> float:
    """Left-to-right sum of squares, matching the compiled kernel bit for bit."""
    s = 0.0
    for v in np.asarray(x, dtype=np.float64).ravel().tolist():
        s += v * v
    return s


def _precision(theta) -> float:
    t = float(np.asarray(theta, dtype=np.float64).ravel()[0])
    if not t > 0.0:
        raise DomainError(f"precision must be positive, got {t}")
    return t


def log_f(x, theta) -> float:
    """Unnormalized log likelihood ``-(theta / 2) * sum(x**2)``."""
    return -0.5 * _precision(theta) * sum_of_squares(x)


def true_log_z(theta, n: int) -> float:
    """``(n / 2) * log(2 pi / theta)``; the quantity the samplers must not use."""
    return 0.5 * n * math.log(2.0 * math.pi / _precision(theta))


def exact_sample(theta, n: int, rng) -> np.ndarray:
    """``n`` independent draws from ``N(0, 1/theta)``."""
    return rng.standard_normal(n) / math.sqrt(_precision(theta))


class GaussianPrecisionModel(Model):
    """Observations ``y_n ~ N(0, 1/theta)`` with prior ``theta ~ Gamma(alpha, beta_prior)``."""

    param_dim = 1

    def __init__(self, alpha: float = 1.0, beta_prior: float = 1.0, data=(1.0,)):
        self.prior = GammaParams(float(alpha), float(beta_prior))
        self.data = np.atleast_1d(np.asarray(data, dtype=np.float64)).copy()
        if self.data.ndim != 1:
            raise DomainError("data must be a vector")
        if not np.all(np.isfinite(self.data)):
            raise DomainError("data must be finite")
        self.data.setflags(write=False)
        self.n = self.data.shape[0]
        self.ss_data = sum_of_squares(self.data)

    @property
    def alpha(self):
        return self.prior.shape

    @property
    def beta_prior(self):
        return self.prior.rate

    def __repr__(self):
        return f"GaussianPrecisionModel(alpha={self.alpha}, beta_prior={self.beta_prior}, N={self.n})"

    def log_f(self, x, theta) -> float:
        return log_f(x, theta)

    def log_prior(self, theta) -> float:
        return self.prior.logpdf(float(np.asarray(theta).ravel()[0]))

    def exact_sample(self, theta, rng, counters=None):
        return exact_sample(theta, self.n, rng)

    def bridge_transition(self, x, theta_a, theta_b, beta, rng, counters=None):
        # independence resampler: draws p_beta directly, ignoring x
        if not 0.0 <= beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {beta}")
        eff = beta * _precision(theta_a) + (1.0 - beta) * _precision(theta_b)
        return exact_sample(eff, self.n, rng)

    def true_log_z(self, theta) -> float:
        return true_log_z(theta, self.n)

    def posterior(self) -> GammaParams:
        return posterior_params(self)

    def initial_theta(self):
        return as_param(self.prior.shape / self.prior.rate, 1)


def posterior_params(model: GaussianPrecisionModel) -> GammaParams:
    """Conjugate update ``Gamma(alpha + N/2, beta + sum(y**2)/2)``."""
    y = model.data
    return GammaParams(model.alpha + 0.5 * y.shape[0], model.beta_prior + 0.5 * float(np.dot(y, y)))
