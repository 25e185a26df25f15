import math

import numpy as np
import pytest
from scipy import stats

from exchange_mcmc import kernels
from exchange_mcmc.diagnostics import ks_test, thin
from exchange_mcmc.gaussian import GammaParams, GaussianPrecisionModel
from exchange_mcmc.ising import IsingModel, cftp_exact_sample
from exchange_mcmc.model import DomainError, WorkCounters, default_beta_schedule
from exchange_mcmc.proposals import RandomWalk, posterior_proposal
from exchange_mcmc.samplers import (ALGORITHMS, ChainError, SamplerConfig, UnsupportedModelError,
                                    exact_z_mh_step, exchange_bridged_step, exchange_step,
                                    mavm_initial_ensemble, mavm_step, run_chain, savm_step)

from conftest import FixedProposal, ScriptedModel

GAUSS = GaussianPrecisionModel(1.0, 1.0, [1.0])
POST = GammaParams(1.5, 1.5)
LOG_SQRT2 = 0.5 * math.log(2.0)


def _gamma_logpdf(t, a, b):
    return a * math.log(b) - math.lgamma(a) + (a - 1) * math.log(t) - b * t


# --- factor oracles (hand-evaluated) -----------------------------------------

def test_exact_z_hand_step():
    rec = exact_z_mh_step(GAUSS, GAUSS.true_log_z, np.array([1.0]), FixedProposal([2.0]),
                          np.random.default_rng(0))[1]
    expected = _gamma_logpdf(2.0, 1.5, 1.5) - _gamma_logpdf(1.0, 1.5, 1.5)
    assert expected == pytest.approx(LOG_SQRT2 - 1.5, abs=1e-15)
    assert rec.log_accept_ratio == pytest.approx(expected, abs=1e-12)


def test_exact_z_degenerate_and_posterior_proposal():
    rec = exact_z_mh_step(GAUSS, GAUSS.true_log_z, np.array([1.3]), FixedProposal([1.3]),
                          np.random.default_rng(0))[1]
    assert rec.log_accept_ratio == 0.0 and rec.accepted
    prop = posterior_proposal(GAUSS)
    rng = np.random.default_rng(1)
    theta = np.array([1.0])
    for _ in range(1000):
        theta, rec = exact_z_mh_step(GAUSS, GAUSS.true_log_z, theta, prop, rng)
        assert rec.accepted and abs(rec.log_accept_ratio) < 1e-12


def test_savm_factor_oracle():
    # theta=1, theta'=2, theta_hat=1, x=[0.5], x'=[0.2], posterior proposal
    model = ScriptedModel(GAUSS, exact=[[0.2]])
    prop = FixedProposal([2.0], log_ratio=_gamma_logpdf(1.0, 1.5, 1.5) - _gamma_logpdf(2.0, 1.5, 1.5))
    _, _, rec = savm_step(model, np.array([1.0]), np.array([0.5]), np.array([1.0]), prop,
                          np.random.default_rng(0))
    target = (-1.0 - 2.0) - (-0.5 - 1.0)              # log f(y;t) + log p(t)
    qterm = 1.5 - LOG_SQRT2
    aux = (-0.5 * 0.04 + 1.0 * 0.04) - (-0.5 * 0.25 + 0.5 * 0.25)
    assert rec.log_target == pytest.approx(target, abs=1e-14)
    assert rec.log_proposal == pytest.approx(qterm, abs=1e-14)
    assert rec.log_auxiliary == pytest.approx(aux, abs=1e-14)
    assert rec.log_accept_ratio == pytest.approx(target + qterm + aux, abs=1e-14)


def test_savm_rejections_at_same_theta_and_unity_at_same_state():
    model = ScriptedModel(GAUSS, exact=[[2.0], [0.5]])
    th, hat = np.array([1.0]), np.array([0.4])
    _, _, rec = savm_step(model, th, np.array([0.5]), hat, FixedProposal([1.0]), np.random.default_rng(0))
    assert rec.log_accept_ratio != 0.0
    _, _, rec = savm_step(model, th, np.array([0.5]), hat, FixedProposal([1.0]), np.random.default_rng(0))
    assert rec.log_accept_ratio == 0.0 and rec.accepted


def test_exchange_factor_oracle():
    model = ScriptedModel(GAUSS, exact=[[0.5]])
    _, rec = exchange_step(model, np.array([1.0]), FixedProposal([2.0]), np.random.default_rng(0))
    assert rec.log_auxiliary == pytest.approx(0.125, abs=1e-15)
    assert rec.log_accept_ratio == pytest.approx(-1.5 + 0.125, abs=1e-14)


def _mavm_oracle(model, theta, prop, hat, betas, x_cur, x_new):
    """Product over levels of f_k/f_{k+1} at x'_{k+1} and f_{k+1}/f_k at x_{k+1}, in direct form."""
    def lfk(x, t, k):
        return betas[k] * model.log_f(x, hat) + (1 - betas[k]) * model.log_f(x, t)
    total = 0.0
    for k in range(len(betas) - 1):
        total += lfk(x_new[k], prop, k) - lfk(x_new[k], prop, k + 1)
        total += lfk(x_cur[k], theta, k + 1) - lfk(x_cur[k], theta, k)
    return total


def test_mavm_term_by_term_gaussian_k2():
    sched = default_beta_schedule(2)
    rng = np.random.default_rng(17)
    theta, hat = np.array([0.8]), np.array([1.4])
    ens = mavm_initial_ensemble(GAUSS, theta, hat, sched, rng)
    _, new_ens, rec = mavm_step(GAUSS, theta, ens, hat, FixedProposal([2.1]), sched, rng)
    x_new = rec.auxiliary
    assert len(x_new) == 3
    expected = _mavm_oracle(GAUSS, theta, np.array([2.1]), hat, sched.betas, ens, x_new)
    assert rec.log_auxiliary == pytest.approx(expected, abs=1e-12)


def test_mavm_unity_when_all_parameters_coincide():
    sched = default_beta_schedule(3)
    rng = np.random.default_rng(2)
    t = np.array([1.2])
    ens = mavm_initial_ensemble(GAUSS, t, t, sched, rng)
    for _ in range(20):
        _, ens, rec = mavm_step(GAUSS, t, ens, t, FixedProposal([1.2]), sched, rng)
        assert rec.log_accept_ratio == 0.0 and rec.accepted


def test_mavm_ensemble_size_checked():
    with pytest.raises(DomainError):
        mavm_step(GAUSS, np.array([1.0]), [np.zeros(1)], np.array([1.0]), FixedProposal([1.0]),
                  default_beta_schedule(2), np.random.default_rng(0))


def test_bridged_exchange_term_by_term_ising_k4():
    data = cftp_exact_sample((0.3, 0.0), np.random.default_rng(1), (4, 4))
    model = IsingModel(data)
    sched = default_beta_schedule(4)
    theta, prop = np.array([0.3, 0.05]), np.array([0.45, -0.1])
    _, rec = exchange_bridged_step(model, theta, FixedProposal(prop), sched, np.random.default_rng(3))
    xs = rec.auxiliary
    assert len(xs) == 5

    def lpk(x, k):
        b = sched.betas[k]
        return b * model.log_f(x, prop) + (1 - b) * model.log_f(x, theta)
    expected = sum(lpk(xs[k], k + 1) - lpk(xs[k], k) for k in range(5))
    assert rec.log_auxiliary == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("K", [0, 1, 5])
def test_exchange_self_transition_is_exactly_one(K):
    data = cftp_exact_sample((0.3, 0.0), np.random.default_rng(4), (4, 4))
    model = IsingModel(data)
    t = np.array([0.3, 0.1])
    rng = np.random.default_rng(5)
    for _ in range(10):
        if K == 0:
            _, rec = exchange_step(model, t, FixedProposal(t), rng)
        else:
            _, rec = exchange_bridged_step(model, t, FixedProposal(t), default_beta_schedule(K), rng)
        assert rec.log_accept_ratio == 0.0 and rec.accepted and math.isnan(rec.log_u)


# --- reductions, determinism, chain plumbing ---------------------------------

@pytest.mark.parametrize("proposal", [RandomWalk(0.5), posterior_proposal(GAUSS)])
@pytest.mark.parametrize("engine", ["auto", "generic"])
def test_k0_reductions_bitwise(proposal, engine):
    def run(alg):
        return run_chain(SamplerConfig(alg, proposal, 1000, K=0, theta_hat=[1.0], seed=42), GAUSS, engine)
    for a, b in (("mavm", "savm"), ("exchange-bridged", "exchange")):
        ta, tb = run(a), run(b)
        np.testing.assert_array_equal(ta.theta, tb.theta)
        np.testing.assert_array_equal(ta.log_accept_ratio, tb.log_accept_ratio)
        np.testing.assert_array_equal(ta.accepted, tb.accepted)


def test_k0_reductions_bitwise_ising():
    data = cftp_exact_sample((0.3, 0.0), np.random.default_rng(6), (4, 4))
    model = IsingModel(data)
    for a, b in (("mavm", "savm"), ("exchange-bridged", "exchange")):
        cfg = dict(proposal=RandomWalk(0.05), iterations=100, K=0, seed=8)
        ta = run_chain(SamplerConfig(a, **cfg), model)
        tb = run_chain(SamplerConfig(b, **cfg), model)
        np.testing.assert_array_equal(ta.theta, tb.theta)
        np.testing.assert_array_equal(ta.log_accept_ratio, tb.log_accept_ratio)


@pytest.mark.parametrize("alg", ALGORITHMS)
@pytest.mark.parametrize("proposal", [RandomWalk(0.5), posterior_proposal(GAUSS)])
def test_kernel_engine_matches_generic_steps(alg, proposal):
    for model in (GAUSS, GaussianPrecisionModel(2.0, 0.5, [0.3, -1.2, 2.0])):
        cfg = SamplerConfig(alg, proposal, 300, K=3, theta_hat=[0.7], seed=123)
        a, b = run_chain(cfg, model, "auto"), run_chain(cfg, model, "generic")
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.accepted, b.accepted)
        np.testing.assert_array_equal(a.log_terms, b.log_terms)
        assert a.counters == b.counters


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_determinism(alg):
    cfg = SamplerConfig(alg, RandomWalk(0.5), 500, K=2, theta_hat=[1.0], seed=9)
    a, b = run_chain(cfg, GAUSS), run_chain(cfg, GAUSS)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.log_terms, b.log_terms)


def test_single_step_fixed_point():
    tr = run_chain(SamplerConfig("exchange", FixedProposal([1.0]), 1, theta0=[1.0], seed=0), GAUSS)
    assert len(tr) == 1 and tr.accepted[0]


def test_exchange_posterior_proposal_counts():
    tr = run_chain(SamplerConfig("exchange", posterior_proposal(GAUSS), 10_000, seed=1), GAUSS)
    assert 0.0 < tr.accepted.mean() < 1.0
    assert tr.counters.exact_samples_drawn == 10_000


def test_prior_short_circuit_skips_exact_sampling():
    for engine in ("auto", "generic"):
        tr = run_chain(SamplerConfig("exchange", RandomWalk(2.0), 2000, theta0=[0.5], seed=3), GAUSS, engine)
        c = tr.counters
        assert c.short_circuits > 0
        assert c.exact_samples_drawn + c.short_circuits == 2000
        assert np.all(np.isneginf(tr.log_accept_ratio[~tr.accepted & np.isneginf(tr.log_terms[:, 0])]))


def test_counters_for_bridged_algorithms():
    tr = run_chain(SamplerConfig("mavm", RandomWalk(0.2), 100, K=4, theta_hat=[1.0], seed=2), GAUSS)
    c = tr.counters
    assert c.setup_exact_samples == 1
    assert c.bridge_steps == 4 + 4 * (100 - c.short_circuits)


def test_config_validation():
    with pytest.raises(DomainError):
        SamplerConfig("gibbs", RandomWalk(1.0), 10)
    with pytest.raises(DomainError):
        SamplerConfig("exchange", RandomWalk(1.0), 0)
    with pytest.raises(DomainError):
        SamplerConfig("mavm", RandomWalk(1.0), 10, K=-1)
    with pytest.raises(DomainError):
        RandomWalk(0.0)
    with pytest.raises(DomainError):
        run_chain(SamplerConfig("savm", RandomWalk(1.0), 10), GAUSS)        # no theta_hat
    with pytest.raises(DomainError):
        run_chain(SamplerConfig("exchange", RandomWalk(1.0), 10, theta0=[-1.0]), GAUSS)


def test_exact_z_needs_oracle():
    data = cftp_exact_sample((0.3, 0.0), np.random.default_rng(0), (3, 3))
    with pytest.raises(UnsupportedModelError):
        run_chain(SamplerConfig("exact-z-mh", RandomWalk(0.1), 10), IsingModel(data))


def test_step_errors_carry_iteration():
    data = cftp_exact_sample((0.3, 0.0), np.random.default_rng(0), (12, 12))
    model = IsingModel(data, max_cftp_sweeps=1)
    with pytest.raises(ChainError) as err:
        run_chain(SamplerConfig("exchange", RandomWalk(0.01), 50, theta0=[0.9, 0.0], seed=1), model)
    assert err.value.iteration >= 0 and "CFTPBudgetError" in str(err.value)


def test_ising_theta_hat_defaults_to_pseudolikelihood():
    data = cftp_exact_sample((0.3, 0.0), np.random.default_rng(0), (5, 5))
    model = IsingModel(data)
    a = run_chain(SamplerConfig("savm", RandomWalk(0.02), 20, seed=1), model)
    b = run_chain(SamplerConfig("savm", RandomWalk(0.02), 20, theta_hat=model.point_estimate(), seed=1), model)
    np.testing.assert_array_equal(a.theta, b.theta)


def test_boundary_estimate_still_gives_valid_start():
    model = IsingModel(-np.ones((3, 3), dtype=np.int8))      # estimate pinned at theta_h = -1
    assert model.log_prior(model.point_estimate()) == -math.inf
    assert model.log_prior(model.initial_theta()) > -math.inf
    tr = run_chain(SamplerConfig("exchange", RandomWalk(0.05), 10, seed=0), model)
    assert len(tr) == 10


@pytest.mark.parametrize("alg, K", [("exact-z-mh", 0), ("savm", 0), ("mavm", 10),
                                    ("exchange", 0), ("exchange-bridged", 10)])
def test_single_chain_matches_posterior(alg, K):
    tr = run_chain(SamplerConfig(alg, RandomWalk(0.5), 100_000, K=K, theta_hat=[1.0], seed=[7, 1]), GAUSS)
    d, ok = ks_test(thin(tr.theta[:, 0], burn_in=1000), POST.cdf)
    assert ok, d


def test_backend_matches_reference_for_current_selection():
    assert kernels.BACKEND in ("compiled", "python")
    ref = stats.gamma(1.5, scale=1 / 1.5)
    assert POST.cdf(1.0) == pytest.approx(ref.cdf(1.0), rel=1e-12)
    assert isinstance(WorkCounters().as_dict(), dict)
