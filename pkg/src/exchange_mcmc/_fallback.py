"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same random-number consumption, same floating-point
expression order. Used when the extension is unavailable or when
``EXCHANGE_MCMC_BACKEND=python`` is set.
"""
import math

import numpy as np

BACKEND = "python"

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

ALG_EXACT_Z, ALG_SAVM, ALG_MAVM, ALG_EXCHANGE, ALG_BRIDGED = range(5)
PROP_POSTERIOR, PROP_RANDOM_WALK = range(2)


def counter_uniforms(seed, start, n):
    idx = np.arange(n, dtype=np.uint64) + np.uint64(start) + np.uint64(1)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + idx * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def heat_bath_sweep(spins, ptr, idx, table, u):
    s_list = spins.tolist()
    ptr = ptr.tolist()
    idx = idx.tolist()
    table = table.tolist()
    u = u.tolist()
    for i in range(len(s_list)):
        s = 0
        for j in range(ptr[i], ptr[i + 1]):
            s += s_list[idx[j]]
        s_list[i] = 1 if u[i] < table[s + 4] else -1
    spins[:] = s_list


def ising_stats(spins, ei, ej):
    s = spins.astype(np.int64)
    return int(np.dot(s[ei], s[ej])), int(s.sum())


def cftp(ptr, idx, table, seed, max_sweeps):
    n = len(ptr) - 1
    ptr = ptr.tolist()
    idx = idx.tolist()
    table = table.tolist()
    T = 1
    updates = 0
    while True:
        up = [1] * n
        lo = [-1] * n
        coupled = False
        for t in range(T, 0, -1):
            u = counter_uniforms(seed, t * n, n).tolist()
            for i in range(n):
                su = 0
                for j in range(ptr[i], ptr[i + 1]):
                    su += up[idx[j]]
                up[i] = 1 if u[i] < table[su + 4] else -1
                if coupled:
                    lo[i] = up[i]
                    updates += 1
                    continue
                sl = 0
                for j in range(ptr[i], ptr[i + 1]):
                    sl += lo[idx[j]]
                lo[i] = 1 if u[i] < table[sl + 4] else -1
                updates += 2
                if lo[i] > up[i]:
                    raise AssertionError("monotone coupling violated: lower chain above upper chain")
            if not coupled:
                coupled = up == lo
        if coupled:
            return np.array(up, dtype=np.int8), T, updates
        if T >= max_sweeps:
            return np.array(up, dtype=np.int8), -1, updates
        T *= 2


def _gauss_sample_ss(rng, n, prec):
    s = 0.0
    for v in (rng.standard_normal(n) / math.sqrt(prec)).tolist():
        s += v * v
    return s


def _gamma_logpdf(t, shape, rate, const):
    if t <= 0.0:
        return -math.inf
    return (shape - 1.0) * math.log(t) - rate * t + const


def gaussian_chain(bit_generator, algorithm, proposal, alpha, beta_prior, prior_const,
                   ss_data, n_data, post_shape, post_rate, post_const, width, theta_hat,
                   betas, theta0, n_steps, two_pi):
    rng = np.random.Generator(bit_generator)
    betas = [float(b) for b in betas]
    K = len(betas) - 2
    thetas = np.empty(n_steps)
    accepted = np.zeros(n_steps, dtype=bool)
    terms = np.empty((n_steps, 3))
    cur = [0.0] * (K + 1)
    new = [0.0] * (K + 1)
    n_exact = n_bridge = n_short = n_setup = 0
    theta = theta0

    if algorithm in (ALG_SAVM, ALG_MAVM):
        cur[0] = _gauss_sample_ss(rng, n_data, theta_hat)
        n_setup += 1
        for k in range(1, K + 1):
            eff = betas[k] * theta_hat + (1.0 - betas[k]) * theta
            cur[k] = _gauss_sample_ss(rng, n_data, eff)
            n_bridge += 1

    for t in range(n_steps):
        if proposal == PROP_POSTERIOR:
            prop = rng.standard_gamma(post_shape) / post_rate
        else:
            prop = theta + width * rng.standard_normal()
        lp_prop = _gamma_logpdf(prop, alpha, beta_prior, prior_const)
        if lp_prop == -math.inf:
            n_short += 1
            thetas[t] = theta
            terms[t] = (-math.inf, 0.0, 0.0)
            continue
        lp_cur = _gamma_logpdf(theta, alpha, beta_prior, prior_const)
        target = (-0.5 * prop * ss_data + lp_prop) - (-0.5 * theta * ss_data + lp_cur)
        if proposal == PROP_POSTERIOR:
            qterm = (_gamma_logpdf(theta, post_shape, post_rate, post_const)
                     - _gamma_logpdf(prop, post_shape, post_rate, post_const))
        else:
            qterm = 0.0
        aux = 0.0
        if algorithm == ALG_EXACT_Z:
            aux = (0.5 * n_data * math.log(two_pi / theta)) - (0.5 * n_data * math.log(two_pi / prop))
        elif algorithm == ALG_SAVM:
            s = _gauss_sample_ss(rng, n_data, prop)
            n_exact += 1
            new[0] = s
            aux = ((-0.5 * theta_hat * s) - (-0.5 * prop * s)) \
                - ((-0.5 * theta_hat * cur[0]) - (-0.5 * theta * cur[0]))
        elif algorithm == ALG_MAVM:
            new[K] = _gauss_sample_ss(rng, n_data, prop)
            n_exact += 1
            for k in range(K, -1, -1):
                if k < K:
                    eff = betas[k + 1] * theta_hat + (1.0 - betas[k + 1]) * prop
                    new[k] = _gauss_sample_ss(rng, n_data, eff)
                    n_bridge += 1
                lf_a = -0.5 * theta_hat * new[k]
                lf_b = -0.5 * prop * new[k]
                aux += (betas[k] - betas[k + 1]) * (lf_a - lf_b)
                lf_a = -0.5 * theta_hat * cur[k]
                lf_b = -0.5 * theta * cur[k]
                aux += (betas[k] - betas[k + 1]) * (lf_b - lf_a)
        else:
            s = _gauss_sample_ss(rng, n_data, prop)
            n_exact += 1
            for k in range(K + 1):
                if k > 0:
                    eff = betas[k] * prop + (1.0 - betas[k]) * theta
                    s = _gauss_sample_ss(rng, n_data, eff)
                    n_bridge += 1
                lf_a = -0.5 * prop * s
                lf_b = -0.5 * theta * s
                aux += (betas[k] - betas[k + 1]) * (lf_b - lf_a)
        log_a = (target + qterm) + aux
        if log_a >= 0.0:
            acc = True
        else:
            acc = math.log(1.0 - rng.random()) < log_a
        if acc:
            theta = prop
            if algorithm in (ALG_SAVM, ALG_MAVM):
                cur[:] = new
        thetas[t] = theta
        accepted[t] = acc
        terms[t] = (target, qterm, aux)

    counters = dict(exact_samples_drawn=n_exact, bridge_steps=n_bridge,
                    short_circuits=n_short, setup_exact_samples=n_setup)
    return thetas, accepted, terms, counters
