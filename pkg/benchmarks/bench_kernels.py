"""Compare the compiled kernels against the pure-Python fallback.

Each workload runs through the public API once per backend with the same
seed; outputs must match exactly, and the table reports best-of-N wall time.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""
import argparse
import contextlib
import time

import numpy as np

from exchange_mcmc import kernels
from exchange_mcmc.gaussian import GaussianPrecisionModel
from exchange_mcmc.ising import cftp_exact_sample, gibbs_sweep
from exchange_mcmc.proposals import RandomWalk
from exchange_mcmc.samplers import SamplerConfig, run_chain


@contextlib.contextmanager
def use_backend(name):
    saved = kernels.backend
    kernels.backend = kernels.get_backend(name)
    try:
        yield
    finally:
        kernels.backend = saved


def sweeps(n):
    def work():
        rng = np.random.default_rng(1)
        x = np.ones((30, 10), dtype=np.int8)
        for _ in range(n):
            x = gibbs_sweep(x, (0.3, 0.0), rng)
        return x
    return work


def cftp(n, J):
    def work():
        rng = np.random.default_rng(2)
        return np.stack([cftp_exact_sample((J, 0.0), rng, (8, 8)) for _ in range(n)])
    return work


def gaussian_chain(algorithm, T, K=0):
    model = GaussianPrecisionModel(alpha=1.0, beta_prior=1.0, data=[1.0])

    def work():
        cfg = SamplerConfig(algorithm, RandomWalk(0.1), T, K=K, theta_hat=1.0, seed=3)
        return run_chain(cfg, model).theta
    return work


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; nothing to compare")

    s = 10 if args.quick else 1
    n_sw, n_c3, n_c4, T = 2000 // s, 200 // s, 50 // s, 20_000 // s
    workloads = [
        (f"gibbs sweep 10x30 x{n_sw}", sweeps(n_sw)),
        (f"cftp 8x8 J=0.3 x{n_c3}", cftp(n_c3, 0.3)),
        (f"cftp 8x8 J=0.4 x{n_c4}", cftp(n_c4, 0.4)),
        (f"gaussian exchange T={T}", gaussian_chain("exchange", T)),
        (f"gaussian mavm K=5 T={T}", gaussian_chain("mavm", T, K=5)),
        (f"gaussian bridged K=5 T={T}", gaussian_chain("exchange-bridged", T, K=5)),
    ]
    print(f"{'workload':<28} {'compiled s':>11} {'python s':>10} {'speedup':>8}  same")
    for name, fn in workloads:
        with use_backend("compiled"):
            tc, oc = best_time(fn, args.repeat)
        with use_backend("python"):
            tp, op = best_time(fn, args.repeat)
        same = np.array_equal(oc, op)
        print(f"{name:<28} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.1f}x  {'yes' if same else 'NO'}")
        if not same:
            raise SystemExit(f"backends disagree on {name}")


if __name__ == "__main__":
    main()
