"""Chain quality metrics: acceptance, effective sample size, KS against an oracle CDF."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError

KS_CRIT_01 = 1.628  # asymptotic sqrt(n) * D critical value at significance 0.01


@dataclass(frozen=True)
class EssEstimate:
    ess: float
    autocorrelation_time: float
    method: str = "initial-positive-sequence"
    degenerate: bool = False


def acceptance_rate(trace) -> float:
    flags = np.asarray(getattr(trace, "accepted", trace), dtype=bool)
    if flags.size == 0:
        raise DomainError("acceptance rate of an empty trace is undefined")
    return float(flags.mean())


def autocovariance(x):
    """Biased autocovariance at lags ``0 .. n-1`` via zero-padded FFT."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    d = x - x.mean()
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, m)
    return np.fft.irfft(f * np.conj(f), m)[:n] / n


def effective_sample_size(series) -> EssEstimate:
    """ESS with Geyer's initial positive sequence.

    Lag pairs ``gamma_{2m} + gamma_{2m+1}`` are summed while positive; the
    integrated autocorrelation time is floored at 1 so ESS never exceeds n.
    """
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n < 10:
        raise DomainError(f"ESS needs at least 10 samples, got {n}")
    if np.ptp(x) == 0.0:
        return EssEstimate(0.0, math.inf, degenerate=True)
    acov = autocovariance(x)
    if not acov[0] > 0.0:
        return EssEstimate(0.0, math.inf, degenerate=True)
    rho = acov / acov[0]
    npairs = n // 2
    pairs = rho[0:2 * npairs:2] + rho[1:2 * npairs:2]
    nonpos = np.flatnonzero(pairs <= 0.0)
    stop = nonpos[0] if len(nonpos) else npairs
    tau = -1.0 + 2.0 * float(pairs[:stop].sum())
    tau = max(tau, 1.0)
    return EssEstimate(n / tau, tau)


def min_ess(theta) -> EssEstimate:
    """Smallest per-component ESS of a ``(T, d)`` sample array."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim == 1:
        theta = theta[:, None]
    return min((effective_sample_size(theta[:, j]) for j in range(theta.shape[1])),
               key=lambda e: e.ess)


def efficiency(trace, series=None) -> float:
    """ESS per Gibbs update; normalizing against a baseline is the caller's division."""
    updates = trace.counters.gibbs_updates
    if updates <= 0:
        raise DomainError("efficiency needs a positive Gibbs-update count")
    est = min_ess(trace.theta if series is None else series)
    return est.ess / updates


def thin(series, burn_in=0, stride=None):
    """Drop ``burn_in`` samples, then keep every ``stride``-th (default: ceil of the autocorrelation time)."""
    x = np.asarray(series, dtype=np.float64)[burn_in:]
    if stride is None:
        est = effective_sample_size(x)
        stride = 1 if est.degenerate else int(math.ceil(est.autocorrelation_time))
    return x[::max(int(stride), 1)]


def ks_statistic(samples, cdf) -> float:
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    F = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_test(samples, cdf):
    """One-sample Kolmogorov-Smirnov; returns ``(D, passes at 0.01)``."""
    n = len(samples)
    if n < 30:
        raise DomainError(f"KS test needs at least 30 samples, got {n}")
    d = ks_statistic(samples, cdf)
    return d, bool(d <= KS_CRIT_01 / math.sqrt(n))
