# cython: language_level=3
"""Compiled inner loops.

Every function here has a line-for-line twin in ``_fallback.py``; both must
consume random numbers in the same order and produce the same floats.
"""
import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log, sqrt
from libc.stdint cimport int8_t, int64_t, uint64_t
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_gamma, random_standard_normal

cnp.import_array()

BACKEND = "compiled"

cdef double NEG_INF = -np.inf


cdef inline double splitmix_uniform(uint64_t seed, uint64_t index) nogil:
    cdef uint64_t z = seed + (index + 1) * <uint64_t>0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    z = z ^ (z >> 31)
    return <double>(z >> 11) * (1.0 / 9007199254740992.0)


def counter_uniforms(uint64_t seed, uint64_t start, Py_ssize_t n):
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = splitmix_uniform(seed, start + i)
    return out


def heat_bath_sweep(int8_t[::1] spins, const int64_t[::1] ptr, const int64_t[::1] idx,
                    const double[::1] table, const double[::1] u):
    cdef Py_ssize_t i, j, n = spins.shape[0]
    cdef int s
    with nogil:
        for i in range(n):
            s = 0
            for j in range(ptr[i], ptr[i + 1]):
                s += spins[idx[j]]
            spins[i] = 1 if u[i] < table[s + 4] else -1


def ising_stats(const int8_t[::1] spins, const int64_t[::1] ei, const int64_t[::1] ej):
    cdef Py_ssize_t k
    cdef int64_t e = 0, m = 0
    with nogil:
        for k in range(ei.shape[0]):
            e += spins[ei[k]] * spins[ej[k]]
        for k in range(spins.shape[0]):
            m += spins[k]
    return e, m


def cftp(const int64_t[::1] ptr, const int64_t[::1] idx, const double[::1] table,
         uint64_t seed, int64_t max_sweeps):
    """Monotone coupling from the past; returns (state, epoch length, site updates).

    Epoch length -1 signals that ``max_sweeps`` was exhausted.
    """
    cdef Py_ssize_t n = ptr.shape[0] - 1
    up_arr = np.empty(n, dtype=np.int8)
    lo_arr = np.empty(n, dtype=np.int8)
    cdef int8_t[::1] up = up_arr
    cdef int8_t[::1] lo = lo_arr
    cdef int64_t T = 1, t, updates = 0
    cdef Py_ssize_t i, j
    cdef int su, sl
    cdef double u, p
    cdef bint coupled, crossed = False
    while True:
        for i in range(n):
            up[i] = 1
            lo[i] = -1
        coupled = False
        with nogil:
            for t in range(T, 0, -1):
                for i in range(n):
                    u = splitmix_uniform(seed, <uint64_t>(t * n + i))
                    su = 0
                    for j in range(ptr[i], ptr[i + 1]):
                        su += up[idx[j]]
                    up[i] = 1 if u < table[su + 4] else -1
                    if coupled:
                        lo[i] = up[i]
                        updates += 1
                        continue
                    sl = 0
                    for j in range(ptr[i], ptr[i + 1]):
                        sl += lo[idx[j]]
                    lo[i] = 1 if u < table[sl + 4] else -1
                    updates += 2
                    if lo[i] > up[i]:
                        crossed = True
                if crossed:
                    break
                if not coupled:
                    coupled = True
                    for i in range(n):
                        if up[i] != lo[i]:
                            coupled = False
                            break
        if crossed:
            raise AssertionError("monotone coupling violated: lower chain above upper chain")
        if coupled:
            return up_arr, T, updates
        if T >= max_sweeps:
            return up_arr, -1, updates
        T *= 2


# ---------------------------------------------------------------------------
# Gaussian precision model: whole chains.

cdef enum:
    ALG_EXACT_Z = 0
    ALG_SAVM = 1
    ALG_MAVM = 2
    ALG_EXCHANGE = 3
    ALG_BRIDGED = 4

cdef enum:
    PROP_POSTERIOR = 0
    PROP_RANDOM_WALK = 1


cdef inline double gauss_sample_ss(bitgen_t *bg, Py_ssize_t n, double prec) nogil:
    # sum of squares of n draws from N(0, 1/prec)
    cdef double sd = sqrt(prec), s = 0.0, v
    cdef Py_ssize_t i
    for i in range(n):
        v = random_standard_normal(bg) / sd
        s += v * v
    return s


cdef inline double gamma_logpdf(double t, double shape, double rate, double const) nogil:
    if t <= 0.0:
        return NEG_INF
    return (shape - 1.0) * log(t) - rate * t + const


def gaussian_chain(object bit_generator, int algorithm, int proposal,
                   double alpha, double beta_prior, double prior_const,
                   double ss_data, Py_ssize_t n_data,
                   double post_shape, double post_rate, double post_const,
                   double width, double theta_hat, const double[::1] betas,
                   double theta0, Py_ssize_t n_steps, double two_pi):
    cdef bitgen_t *bg
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator")
    bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef Py_ssize_t K = betas.shape[0] - 2
    thetas_arr = np.empty(n_steps, dtype=np.float64)
    accepted_arr = np.zeros(n_steps, dtype=np.bool_)
    terms_arr = np.empty((n_steps, 3), dtype=np.float64)
    cdef double[::1] thetas = thetas_arr
    cdef cnp.npy_bool[::1] accepted = accepted_arr
    cdef double[:, ::1] terms = terms_arr
    # auxiliary ensemble (sums of squares) for savm / mavm: cur[k] holds x_{k+1}
    cur_arr = np.zeros(K + 1, dtype=np.float64)
    new_arr = np.zeros(K + 1, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef double[::1] new = new_arr
    cdef int64_t n_exact = 0, n_bridge = 0, n_short = 0, n_setup = 0
    cdef double theta = theta0, prop, lp_cur, lp_prop, target, qterm, aux
    cdef double lf_a, lf_b, s, u, log_a, eff
    cdef Py_ssize_t t, k
    cdef bint acc

    with bit_generator.lock:
      with nogil:
        if algorithm == ALG_SAVM or algorithm == ALG_MAVM:
            cur[0] = gauss_sample_ss(bg, n_data, theta_hat)
            n_setup += 1
            for k in range(1, K + 1):
                eff = betas[k] * theta_hat + (1.0 - betas[k]) * theta
                cur[k] = gauss_sample_ss(bg, n_data, eff)
                n_bridge += 1
        for t in range(n_steps):
            if proposal == PROP_POSTERIOR:
                prop = random_standard_gamma(bg, post_shape) / post_rate
            else:
                prop = theta + width * random_standard_normal(bg)
            lp_prop = gamma_logpdf(prop, alpha, beta_prior, prior_const)
            if lp_prop == NEG_INF:
                n_short += 1
                thetas[t] = theta
                terms[t, 0] = NEG_INF
                terms[t, 1] = 0.0
                terms[t, 2] = 0.0
                continue
            lp_cur = gamma_logpdf(theta, alpha, beta_prior, prior_const)
            target = (-0.5 * prop * ss_data + lp_prop) - (-0.5 * theta * ss_data + lp_cur)
            if proposal == PROP_POSTERIOR:
                qterm = (gamma_logpdf(theta, post_shape, post_rate, post_const)
                         - gamma_logpdf(prop, post_shape, post_rate, post_const))
            else:
                qterm = 0.0
            aux = 0.0
            if algorithm == ALG_EXACT_Z:
                aux = (0.5 * n_data * log(two_pi / theta)) - (0.5 * n_data * log(two_pi / prop))
            elif algorithm == ALG_SAVM:
                s = gauss_sample_ss(bg, n_data, prop)
                n_exact += 1
                new[0] = s
                aux = ((-0.5 * theta_hat * s) - (-0.5 * prop * s)) \
                    - ((-0.5 * theta_hat * cur[0]) - (-0.5 * theta * cur[0]))
            elif algorithm == ALG_MAVM:
                new[K] = gauss_sample_ss(bg, n_data, prop)
                n_exact += 1
                for k in range(K, -1, -1):
                    if k < K:
                        eff = betas[k + 1] * theta_hat + (1.0 - betas[k + 1]) * prop
                        new[k] = gauss_sample_ss(bg, n_data, eff)
                        n_bridge += 1
                    lf_a = -0.5 * theta_hat * new[k]
                    lf_b = -0.5 * prop * new[k]
                    aux += (betas[k] - betas[k + 1]) * (lf_a - lf_b)
                    lf_a = -0.5 * theta_hat * cur[k]
                    lf_b = -0.5 * theta * cur[k]
                    aux += (betas[k] - betas[k + 1]) * (lf_b - lf_a)
            else:
                s = gauss_sample_ss(bg, n_data, prop)
                n_exact += 1
                for k in range(0, K + 1):
                    if k > 0:
                        eff = betas[k] * prop + (1.0 - betas[k]) * theta
                        s = gauss_sample_ss(bg, n_data, eff)
                        n_bridge += 1
                    lf_a = -0.5 * prop * s
                    lf_b = -0.5 * theta * s
                    aux += (betas[k] - betas[k + 1]) * (lf_b - lf_a)
            log_a = (target + qterm) + aux
            if log_a >= 0.0:
                acc = True
            else:
                u = 1.0 - bg.next_double(bg.state)
                acc = log(u) < log_a
            if acc:
                theta = prop
                if algorithm == ALG_SAVM or algorithm == ALG_MAVM:
                    for k in range(K + 1):
                        cur[k] = new[k]
            thetas[t] = theta
            accepted[t] = acc
            terms[t, 0] = target
            terms[t, 1] = qterm
            terms[t, 2] = aux

    counters = dict(exact_samples_drawn=n_exact, bridge_steps=n_bridge,
                    short_circuits=n_short, setup_exact_samples=n_setup)
    return thetas_arr, accepted_arr, terms_arr, counters
