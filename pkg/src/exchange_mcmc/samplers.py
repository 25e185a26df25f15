"""Metropolis-Hastings samplers for doubly-intractable parameter posteriors.

Five update rules share one skeleton: propose ``theta'``, short-circuit to
rejection outside the prior support, build the log acceptance ratio from a
target term, a proposal term and an auxiliary term, then accept on
``log(u) < log a`` (no uniform is drawn when ``log a >= 0``).

* ``exact-z-mh``: plain M-H using the true partition function (oracle only).
* ``savm``: single auxiliary variable with a fixed point estimate ``theta_hat``.
* ``mavm``: SAVM with ``K`` tempered bridging levels; the ensemble is chain state.
* ``exchange``: one exact draw at ``theta'`` swapped against the data.
* ``exchange-bridged``: exchange with ``K`` bridging steps from ``theta'`` toward ``theta``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .gaussian import GaussianPrecisionModel
from .model import (BridgeSchedule, DomainError, WorkCounters, as_param,
                    default_beta_schedule, log_bridge_ratio)
from .proposals import IndependentGamma, RandomWalk

ALGORITHMS = ("exact-z-mh", "savm", "mavm", "exchange", "exchange-bridged")
NEEDS_THETA_HAT = frozenset({"savm", "mavm"})
USES_K = frozenset({"mavm", "exchange-bridged"})


class UnsupportedModelError(DomainError):
    """The chosen algorithm needs a capability the model does not provide."""


class ChainError(RuntimeError):
    """A step failed; ``iteration`` is the 0-based index of the failing step."""

    def __init__(self, iteration, cause):
        super().__init__(f"iteration {iteration}: {type(cause).__name__}: {cause}")
        self.iteration = iteration


@dataclass
class AcceptanceRecord:
    log_accept_ratio: float
    accepted: bool
    log_target: float
    log_proposal: float
    log_auxiliary: float
    theta_proposed: np.ndarray
    log_u: float = math.nan
    auxiliary: list = field(default_factory=list, repr=False)


def _rejected(prop):
    return AcceptanceRecord(-math.inf, False, -math.inf, 0.0, 0.0, prop)


def _target_terms(model, theta, prop, lp_prop, proposal):
    y = model.data
    target = (model.log_f(y, prop) + lp_prop) - (model.log_f(y, theta) + model.log_prior(theta))
    return target, proposal.log_ratio(theta, prop)


def _decide(target, qterm, aux, prop, rng, auxiliary=()):
    log_a = (target + qterm) + aux
    rec = AcceptanceRecord(log_a, True, target, qterm, aux, prop, auxiliary=list(auxiliary))
    if log_a < 0.0:
        rec.log_u = math.log(1.0 - rng.random())
        rec.accepted = rec.log_u < log_a
    return rec


def _count(counters, name, n=1):
    if counters is not None:
        setattr(counters, name, getattr(counters, name) + n)


def exact_z_mh_step(model, log_z, theta, proposal, rng, counters=None):
    """Standard M-H with ``Z(theta) / Z(theta')`` supplied by the oracle ``log_z``."""
    if log_z is None:
        raise UnsupportedModelError(f"{model!r} exposes no partition-function oracle")
    prop = proposal.sample(theta, rng)
    lp_prop = model.log_prior(prop)
    if lp_prop == -math.inf:
        _count(counters, "short_circuits")
        return theta, _rejected(prop)
    target, qterm = _target_terms(model, theta, prop, lp_prop, proposal)
    rec = _decide(target, qterm, log_z(theta) - log_z(prop), prop, rng)
    return (prop if rec.accepted else theta), rec


def savm_initial_state(model, theta_hat, rng, counters=None):
    """Auxiliary variable drawn from its conditional ``f(x; theta_hat) / Z(theta_hat)``."""
    _count(counters, "setup_exact_samples")
    return model.exact_sample(theta_hat, rng, counters)


def savm_step(model, theta, x, theta_hat, proposal, rng, counters=None):
    """One SAVM update of the pair ``(theta, x)``; returns ``(theta, x, record)``."""
    prop = proposal.sample(theta, rng)
    lp_prop = model.log_prior(prop)
    if lp_prop == -math.inf:
        _count(counters, "short_circuits")
        return theta, x, _rejected(prop)
    target, qterm = _target_terms(model, theta, prop, lp_prop, proposal)
    x_new = model.exact_sample(prop, rng, counters)
    _count(counters, "exact_samples_drawn")
    aux = ((model.log_f(x_new, theta_hat) - model.log_f(x_new, prop))
           - (model.log_f(x, theta_hat) - model.log_f(x, theta)))
    rec = _decide(target, qterm, aux, prop, rng, [x_new])
    if rec.accepted:
        return prop, x_new, rec
    return theta, x, rec


def mavm_initial_ensemble(model, theta, theta_hat, schedule, rng, counters=None):
    """``[x_1, ..., x_{K+1}]``: ``x_1`` exact at ``theta_hat``, then bridging toward ``theta``."""
    ens = [model.exact_sample(theta_hat, rng, counters)]
    _count(counters, "setup_exact_samples")
    for k in range(1, schedule.K + 1):
        ens.append(model.bridge_transition(ens[-1], theta_hat, theta, schedule[k], rng, counters))
        _count(counters, "bridge_steps")
    return ens


def mavm_step(model, theta, ensemble, theta_hat, proposal, schedule, rng, counters=None):
    """One MAVM update of ``(theta, [x_1 .. x_{K+1}])``; returns ``(theta, ensemble, record)``.

    The proposed ensemble is generated in reverse: ``x'_{K+1}`` exactly at
    ``theta'``, then ``x'_K .. x'_1`` by bridging steps toward ``theta_hat``.
    Level ``k`` contributes ``f_k(x'_{k+1}) / f_{k+1}(x'_{k+1})`` and
    ``f_{k+1}(x_{k+1}) / f_k(x_{k+1})``, accumulated as the states appear.
    """
    K = schedule.K
    if len(ensemble) != K + 1:
        raise DomainError(f"ensemble must hold K+1={K + 1} states, got {len(ensemble)}")
    prop = proposal.sample(theta, rng)
    lp_prop = model.log_prior(prop)
    if lp_prop == -math.inf:
        _count(counters, "short_circuits")
        return theta, ensemble, _rejected(prop)
    target, qterm = _target_terms(model, theta, prop, lp_prop, proposal)
    new = [None] * (K + 1)
    new[K] = model.exact_sample(prop, rng, counters)
    _count(counters, "exact_samples_drawn")
    aux = 0.0
    for k in range(K, -1, -1):
        if k < K:
            new[k] = model.bridge_transition(new[k + 1], theta_hat, prop, schedule[k + 1], rng, counters)
            _count(counters, "bridge_steps")
        hi, lo = schedule[k], schedule[k + 1]
        aux += -log_bridge_ratio(model.log_f(new[k], theta_hat), model.log_f(new[k], prop), hi, lo)
        aux += log_bridge_ratio(model.log_f(ensemble[k], theta_hat), model.log_f(ensemble[k], theta), hi, lo)
    rec = _decide(target, qterm, aux, prop, rng, new)
    if rec.accepted:
        return prop, new, rec
    return theta, ensemble, rec


def exchange_step(model, theta, proposal, rng, counters=None):
    """Single-variable exchange update; returns ``(theta, record)``."""
    prop = proposal.sample(theta, rng)
    lp_prop = model.log_prior(prop)
    if lp_prop == -math.inf:
        _count(counters, "short_circuits")
        return theta, _rejected(prop)
    target, qterm = _target_terms(model, theta, prop, lp_prop, proposal)
    w = model.exact_sample(prop, rng, counters)
    _count(counters, "exact_samples_drawn")
    aux = model.log_f(w, theta) - model.log_f(w, prop)
    rec = _decide(target, qterm, aux, prop, rng, [w])
    if np.array_equal(prop, theta):
        assert rec.log_accept_ratio == 0.0, rec
    return (prop if rec.accepted else theta), rec


def exchange_bridged_step(model, theta, proposal, schedule, rng, counters=None):
    """Exchange with ``K`` bridging steps; ``K = 0`` is exactly :func:`exchange_step`.

    ``x_0`` is exact at ``theta'``; ``x_k`` follows from a step leaving
    ``f(.; theta')^beta_k f(.; theta)^(1 - beta_k)`` invariant, and each
    ``x_k`` contributes ``f_{k+1}(x_k) / f_k(x_k)`` to the ratio.
    """
    prop = proposal.sample(theta, rng)
    lp_prop = model.log_prior(prop)
    if lp_prop == -math.inf:
        _count(counters, "short_circuits")
        return theta, _rejected(prop)
    target, qterm = _target_terms(model, theta, prop, lp_prop, proposal)
    x = model.exact_sample(prop, rng, counters)
    _count(counters, "exact_samples_drawn")
    states = [x]
    aux = 0.0
    for k in range(schedule.K + 1):
        if k > 0:
            x = model.bridge_transition(x, prop, theta, schedule[k], rng, counters)
            _count(counters, "bridge_steps")
            states.append(x)
        aux += log_bridge_ratio(model.log_f(x, prop), model.log_f(x, theta), schedule[k], schedule[k + 1])
    rec = _decide(target, qterm, aux, prop, rng, states)
    if np.array_equal(prop, theta):
        assert rec.log_accept_ratio == 0.0, rec
    return (prop if rec.accepted else theta), rec


# ---------------------------------------------------------------------------
# chains

@dataclass
class SamplerConfig:
    algorithm: str
    proposal: object
    iterations: int
    K: int = 0
    theta_hat: object = None
    theta0: object = None
    seed: object = 0
    schedule: BridgeSchedule | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DomainError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise DomainError(f"iterations must be a positive integer, got {self.iterations}")
        if int(self.K) != self.K or self.K < 0:
            raise DomainError(f"K must be a non-negative integer, got {self.K}")
        if self.schedule is None:
            self.schedule = default_beta_schedule(self.K)
        elif self.schedule.K != self.K:
            raise DomainError("schedule length disagrees with K")


@dataclass
class ChainTrace:
    algorithm: str
    theta: np.ndarray          # (T, d) state after each step
    accepted: np.ndarray       # (T,) bool
    log_terms: np.ndarray      # (T, 3): target, proposal, auxiliary
    counters: WorkCounters
    wall_time: float = 0.0

    def __len__(self):
        return len(self.accepted)

    @property
    def log_accept_ratio(self):
        t = self.log_terms
        return (t[:, 0] + t[:, 1]) + t[:, 2]


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _resolve(config, model):
    d = model.param_dim
    theta_hat = config.theta_hat
    if config.algorithm in NEEDS_THETA_HAT:
        if theta_hat is None:
            if not hasattr(model, "point_estimate"):
                raise DomainError(f"{config.algorithm} needs theta_hat")
            theta_hat = model.point_estimate()
        theta_hat = as_param(theta_hat, d)
    else:
        theta_hat = None
    theta0 = config.theta0
    if theta0 is None:
        if theta_hat is not None and model.log_prior(theta_hat) > -math.inf:
            theta0 = theta_hat
        elif hasattr(model, "initial_theta"):
            theta0 = model.initial_theta()
        else:
            theta0 = model.point_estimate()
    theta0 = as_param(theta0, d)
    if model.log_prior(theta0) == -math.inf:
        raise DomainError(f"initial theta {theta0} lies outside the prior support")
    return theta_hat, theta0


_ALG_CODES = {"exact-z-mh": 0, "savm": 1, "mavm": 2, "exchange": 3, "exchange-bridged": 4}


def _fast_path_ok(config, model):
    return (type(model) is GaussianPrecisionModel
            and isinstance(config.proposal, (RandomWalk, IndependentGamma)))


def _run_gaussian_kernel(config, model, theta_hat, theta0, rng, backend):
    prop = config.proposal
    if isinstance(prop, IndependentGamma):
        pcode, width, g = 0, 0.0, prop.gamma
    else:
        pcode, width, g = 1, prop.width, model.prior
    schedule = config.schedule if config.algorithm in USES_K else default_beta_schedule(0)
    th = float(theta_hat[0]) if theta_hat is not None else 1.0
    thetas, acc, terms, c = backend.gaussian_chain(
        rng.bit_generator, _ALG_CODES[config.algorithm], pcode,
        model.alpha, model.beta_prior, model.prior.log_norm, model.ss_data, model.n,
        g.shape, g.rate, g.log_norm, width, th, np.array(schedule.betas, dtype=np.float64),
        float(theta0[0]), int(config.iterations), 2.0 * math.pi)
    return thetas.reshape(-1, 1), acc, terms, WorkCounters(**c)


def run_chain(config: SamplerConfig, model, engine="auto") -> ChainTrace:
    """Run ``config.iterations`` steps of the configured sampler.

    ``engine='auto'`` routes Gaussian-model chains through the whole-chain
    kernel (bit-identical to the generic step functions); ``'generic'``
    forces the step-by-step path.
    """
    start = time.perf_counter()
    alg = config.algorithm
    log_z = getattr(model, "true_log_z", None)
    if alg == "exact-z-mh" and log_z is None:
        raise UnsupportedModelError(f"exact-z-mh needs a partition-function oracle; {model!r} has none")
    rng = make_rng(config.seed)
    theta_hat, theta0 = _resolve(config, model)

    if engine == "auto" and _fast_path_ok(config, model):
        thetas, acc, terms, counters = _run_gaussian_kernel(
            config, model, theta_hat, theta0, rng, kernels.backend)
        return ChainTrace(alg, thetas, acc, terms, counters, time.perf_counter() - start)
    if engine not in ("auto", "generic"):
        raise ValueError(f"unknown engine {engine!r}")

    T = int(config.iterations)
    counters = WorkCounters()
    thetas = np.empty((T, model.param_dim))
    accepted = np.zeros(T, dtype=bool)
    terms = np.empty((T, 3))
    theta = theta0
    proposal, schedule = config.proposal, config.schedule
    aux_state = None
    if alg == "savm":
        aux_state = savm_initial_state(model, theta_hat, rng, counters)
    elif alg == "mavm":
        aux_state = mavm_initial_ensemble(model, theta, theta_hat, schedule, rng, counters)

    for t in range(T):
        try:
            if alg == "exchange":
                theta, rec = exchange_step(model, theta, proposal, rng, counters)
            elif alg == "exchange-bridged":
                theta, rec = exchange_bridged_step(model, theta, proposal, schedule, rng, counters)
            elif alg == "savm":
                theta, aux_state, rec = savm_step(model, theta, aux_state, theta_hat, proposal, rng, counters)
            elif alg == "mavm":
                theta, aux_state, rec = mavm_step(model, theta, aux_state, theta_hat, proposal,
                                                  schedule, rng, counters)
            else:
                theta, rec = exact_z_mh_step(model, log_z, theta, proposal, rng, counters)
        except (AssertionError, DomainError, RuntimeError) as exc:
            raise ChainError(t, exc) from exc
        thetas[t] = theta
        accepted[t] = rec.accepted
        terms[t] = (rec.log_target, rec.log_proposal, rec.log_auxiliary)
    return ChainTrace(alg, thetas, accepted, terms, counters, time.perf_counter() - start)
