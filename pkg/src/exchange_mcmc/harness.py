"""Experiment runner: expand a config into sweep points, run replicates, emit CSV."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import ising
from .config import ExperimentConfig, GaussianSpec
from .diagnostics import acceptance_rate, min_ess
from .gaussian import GaussianPrecisionModel
from .model import DomainError
from .proposals import RandomWalk, posterior_proposal
from .samplers import NEEDS_THETA_HAT, USES_K, SamplerConfig, run_chain

CSV_COLUMNS = ("algorithm", "K", "theta_hat", "proposal_width", "replicate", "acceptance_rate",
               "ess", "gibbs_updates", "exact_samples", "wall_time_seconds", "seed", "error")


@dataclass(frozen=True)
class SweepPoint:
    algorithm: str
    K: int
    theta_hat: tuple | None
    width: float | None


@dataclass
class SweepResult:
    algorithm: str
    K: int
    theta_hat: tuple | None
    proposal_width: float | None
    replicate: int
    acceptance_rate: float = math.nan
    ess: float = math.nan
    gibbs_updates: int = 0
    exact_samples: int = 0
    wall_time_seconds: float = 0.0
    seed: int = 0
    error: str = ""


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Seed for replicate ``r``; independent of the sweep point so that every
    point sees common random numbers."""
    ss = np.random.SeedSequence([int(master_seed), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


def sweep_points(cfg: ExperimentConfig):
    """Algorithm x K x theta_hat x width, collapsing axes an algorithm ignores."""
    out = []
    for alg in cfg.algorithms:
        for K in (cfg.Ks if alg in USES_K else (0,)):
            for th in (cfg.theta_hats if alg in NEEDS_THETA_HAT else (None,)):
                for w in cfg.widths:
                    out.append(SweepPoint(alg, K, th, w))
    return out


def generate_ising_data(width, height, theta_J, theta_h, seed):
    """Exact draw from the Ising model by CFTP; used as synthetic observed data."""
    rng = np.random.default_rng(seed)
    return ising.cftp_exact_sample((theta_J, theta_h), rng, (height, width))


def build_model(spec):
    if isinstance(spec, GaussianSpec):
        return GaussianPrecisionModel(spec.alpha, spec.beta, spec.data)
    if spec.data_file is not None:
        data = ising.read_lattice(spec.data_file)
        if data.shape != (spec.height, spec.width):
            raise DomainError(
                f"{spec.data_file}: lattice is {data.shape[1]}x{data.shape[0]}, "
                f"config says {spec.width}x{spec.height}")
    else:
        data = generate_ising_data(spec.width, spec.height, *spec.generate)
    return ising.IsingModel(data)


def _run_one(cfg: ExperimentConfig, model, point: SweepPoint, replicate: int, default_hat):
    seed = replicate_seed(cfg.master_seed, replicate)
    row = SweepResult(point.algorithm, point.K, point.theta_hat, point.width, replicate, seed=seed)
    start = time.perf_counter()
    trace = None
    try:
        proposal = posterior_proposal(model) if point.width is None else RandomWalk(point.width)
        th = point.theta_hat if point.theta_hat is not None else (
            default_hat if point.algorithm in NEEDS_THETA_HAT else None)
        sc = SamplerConfig(point.algorithm, proposal, cfg.T, K=point.K, theta_hat=th,
                           theta0=cfg.theta0, seed=seed)
        trace = run_chain(sc, model)
        row.acceptance_rate = acceptance_rate(trace)
        post = trace.theta[cfg.burn_in:]
        row.ess = min_ess(post).ess if len(post) >= 10 else math.nan
        row.gibbs_updates = trace.counters.gibbs_updates
        row.exact_samples = trace.counters.exact_samples_drawn
    except Exception as exc:  # recorded per row; the sweep carries on
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time_seconds = time.perf_counter() - start
    return row, trace


def _task(args):
    cfg, point, r, hat = args
    row, trace = _run_one(cfg, build_model(cfg.model), point, r, hat)
    return row, (trace.theta if (cfg.detail and trace is not None) else None)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, model=None):
    """Run every sweep point for every replicate; returns ``(rows, traces)``.

    ``traces`` maps row index to the ``(T, d)`` chain when ``cfg.detail`` is
    set and is empty otherwise. Row order is deterministic regardless of
    ``jobs``.
    """
    model = build_model(cfg.model) if model is None else model
    hat = None
    if isinstance(model, ising.IsingModel) and any(
            a in NEEDS_THETA_HAT for a in cfg.algorithms) and cfg.theta_hats == (None,):
        hat = tuple(model.point_estimate())
    tasks = [(cfg, p, r, hat) for p in sweep_points(cfg) for r in range(cfg.n_replicates)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_task, tasks))
    else:
        results = []
        for c, p, r, h in tasks:
            row, trace = _run_one(c, model, p, r, h)
            results.append((row, trace.theta if (cfg.detail and trace is not None) else None))
    rows = [r for r, _ in results]
    traces = {i: t for i, (_, t) in enumerate(results) if t is not None}
    return rows, traces


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ";".join(_fmt(v) for v in value)
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def emit_csv(rows, out=None) -> str:
    """Write rows with a fixed header; floats use ``%.17g`` so values round-trip."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    names = [f.name for f in fields(SweepResult)]
    for row in rows:
        d = asdict(row)
        w.writerow([_fmt(d[n]) for n in names])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    return text


def read_csv(path_or_text):
    """Parse a results CSV back into a list of dicts of strings."""
    if "\n" in str(path_or_text):
        return list(csv.DictReader(io.StringIO(path_or_text)))
    with open(path_or_text, newline="") as fh:
        return list(csv.DictReader(fh))
