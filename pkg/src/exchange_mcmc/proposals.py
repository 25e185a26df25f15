"""Parameter proposals ``q(theta'; theta)``."""
from __future__ import annotations

import math

import numpy as np

from .gaussian import GammaParams
from .model import DomainError


class RandomWalk:
    """Isotropic Gaussian step of standard deviation ``width`` around the current point."""

    kind = "random-walk"
    symmetric = True

    def __init__(self, width: float):
        if not width > 0:
            raise DomainError(f"random-walk width must be positive, got {width}")
        self.width = float(width)

    def sample(self, theta, rng):
        return theta + self.width * rng.standard_normal(theta.shape[0])

    def log_density(self, theta_to, theta_from) -> float:
        d = np.asarray(theta_to, dtype=np.float64) - np.asarray(theta_from, dtype=np.float64)
        k = d.shape[0]
        return float(-0.5 * (d @ d) / self.width ** 2 - k * math.log(self.width)
                     - 0.5 * k * math.log(2.0 * math.pi))

    def log_ratio(self, theta, theta_prop) -> float:
        """``log q(theta; theta') - log q(theta'; theta)``: zero for a symmetric walk."""
        return 0.0

    def __repr__(self):
        return f"RandomWalk(width={self.width})"


class IndependentGamma:
    """Independent proposals from a fixed Gamma, e.g. the exact posterior of the Gaussian model."""

    kind = "posterior"
    symmetric = False

    def __init__(self, gamma: GammaParams):
        self.gamma = gamma
        self._log_norm = gamma.log_norm

    def sample(self, theta, rng):
        return np.array([self.gamma.sample(rng)])

    def log_density(self, theta_to, theta_from=None) -> float:
        return self.gamma.logpdf(float(np.asarray(theta_to).ravel()[0]))

    def log_ratio(self, theta, theta_prop) -> float:
        return self.log_density(theta) - self.log_density(theta_prop)

    def __repr__(self):
        return f"IndependentGamma({self.gamma.shape}, {self.gamma.rate})"


def posterior_proposal(model) -> IndependentGamma:
    """Proposals drawn from the exact conjugate posterior (Gaussian model only)."""
    if not hasattr(model, "posterior"):
        raise DomainError("independent-posterior proposals need a model with a tractable posterior")
    return IndependentGamma(model.posterior())


class UniformGrid:
    """Uniform independent proposal over a finite list of parameter points."""

    kind = "grid"
    symmetric = True

    def __init__(self, grid):
        self.grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))

    def sample(self, theta, rng):
        return self.grid[rng.integers(len(self.grid))].copy()

    def log_density(self, theta_to, theta_from=None) -> float:
        return -math.log(len(self.grid))

    def log_ratio(self, theta, theta_prop) -> float:
        return 0.0
