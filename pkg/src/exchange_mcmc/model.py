"""Model contract and the bridging-distribution machinery shared by the samplers.

A model owns an unnormalized density ``f(x; theta)`` whose normalizer
``Z(theta)`` is treated as unknown. Samplers only ever touch the four
capabilities of :class:`Model`; any partition-function oracle a model may
carry is deliberately outside the contract.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


@dataclass
class WorkCounters:
    """Work done by a chain; all counters only ever increase."""

    exact_samples_drawn: int = 0
    gibbs_updates: int = 0
    bridge_steps: int = 0
    short_circuits: int = 0
    setup_exact_samples: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def as_param(theta, dim):
    """Coerce ``theta`` to a finite float64 vector of length ``dim``."""
    arr = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if arr.shape != (dim,):
        raise DomainError(f"parameter must have dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"parameter components must be finite, got {arr}")
    return arr


class Model(abc.ABC):
    """Unnormalized model consumed by every sampler.

    Implementations are immutable after construction and may be shared
    between chains; all randomness comes through the ``rng`` argument.
    ``counters`` (optional) receives the Gibbs-update cost of a call.
    """

    #: number of components of a parameter point
    param_dim: int = 1
    #: the observed configuration ``y``
    data = None

    @abc.abstractmethod
    def log_f(self, x, theta) -> float:
        """Unnormalized log density ``log f(x; theta)``."""

    @abc.abstractmethod
    def log_prior(self, theta) -> float:
        """Prior log density; ``-inf`` outside the prior support."""

    @abc.abstractmethod
    def exact_sample(self, theta, rng, counters=None):
        """An exact draw from ``f(.; theta) / Z(theta)``."""

    @abc.abstractmethod
    def bridge_transition(self, x, theta_a, theta_b, beta, rng, counters=None):
        """One reversible step leaving ``f(.; theta_a)^beta f(.; theta_b)^(1-beta)`` invariant."""


@dataclass(frozen=True)
class BridgeSchedule:
    """Inverse temperatures ``betas[0] = 1 > betas[1] > ... > betas[K+1] = 0``."""

    betas: tuple = field(default=(1.0, 0.0))

    def __post_init__(self):
        b = tuple(float(v) for v in self.betas)
        object.__setattr__(self, "betas", b)
        if len(b) < 2 or b[0] != 1.0 or b[-1] != 0.0:
            raise DomainError(f"schedule must run from 1 to 0, got {b}")
        if any(hi <= lo for hi, lo in zip(b, b[1:])):
            raise DomainError(f"schedule must be strictly decreasing, got {b}")

    @property
    def K(self) -> int:
        return len(self.betas) - 2

    def __len__(self):
        return len(self.betas)

    def __getitem__(self, k):
        return self.betas[k]


def default_beta_schedule(K: int) -> BridgeSchedule:
    """Linear schedule ``beta_k = (K - k + 1) / (K + 1)`` for ``k = 0..K+1``."""
    if int(K) != K or K < 0:
        raise DomainError(f"K must be a non-negative integer, got {K!r}")
    K = int(K)
    betas = [1.0] + [(K - k + 1) / (K + 1) for k in range(1, K + 1)] + [0.0]
    return BridgeSchedule(tuple(betas))


def bridge_log_f(model, x, theta_a, theta_b, beta) -> float:
    """``beta * log f(x; theta_a) + (1 - beta) * log f(x; theta_b)``.

    Endpoints return the corresponding ``log_f`` unchanged, which keeps
    ``-inf`` from turning into ``nan`` through a zero weight.
    """
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    if beta == 1.0:
        return model.log_f(x, theta_a)
    if beta == 0.0:
        return model.log_f(x, theta_b)
    lf_a = model.log_f(x, theta_a)
    if np.array_equal(theta_a, theta_b):
        return lf_a
    return beta * lf_a + (1.0 - beta) * model.log_f(x, theta_b)


def log_bridge_ratio(lf_a, lf_b, beta_hi, beta_lo) -> float:
    """``log f_lo(x) - log f_hi(x)`` for two levels of the same bridge.

    ``lf_a`` and ``lf_b`` are ``log f(x; theta_a)`` and ``log f(x; theta_b)``.
    The factored form is exactly zero when the endpoints coincide.
    """
    return (beta_hi - beta_lo) * (lf_b - lf_a)


def log_z_ratio_estimate(model, x, theta_num, theta_den) -> float:
    """One-sample importance estimate of ``log Z(theta_num) / Z(theta_den)``.

    ``x`` must be an exact draw at ``theta_den``; the exponential of the
    return value is then unbiased for the ratio.
    """
    return model.log_f(x, theta_num) - model.log_f(x, theta_den)
