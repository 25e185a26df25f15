"""Toroidal square-lattice Ising model.

Lattices are ``int8`` arrays of shape ``(height, width)`` holding -1/+1,
flattened row-major when handed to the kernels. Parameters are
``(theta_J, theta_h)``: coupling and external field.
"""
from __future__ import annotations

import functools
import io
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import kernels
from .model import DomainError, Model, as_param

MAX_CFTP_SWEEPS = 2 ** 20
MAX_ENUMERATION_SITES = 16


class CFTPBudgetError(RuntimeError):
    """Coupling from the past did not coalesce within the sweep budget."""


class UnsupportedRegimeError(DomainError):
    """Monotone CFTP requires a non-negative coupling."""


@dataclass(frozen=True)
class IsingParams:
    theta_J: float
    theta_h: float

    def as_array(self):
        return np.array([self.theta_J, self.theta_h], dtype=np.float64)


def _params(params):
    if isinstance(params, IsingParams):
        return params.theta_J, params.theta_h
    arr = as_param(params, 2)
    return float(arr[0]), float(arr[1])


class Torus:
    """Edge set and neighbour lists of a ``width x height`` torus.

    Each undirected edge ``{i, j}`` with ``i != j`` appears once, so narrow
    tori (width or height below 3) get no self-edges and no doubled edges.
    """

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise DomainError(f"lattice dimensions must be positive, got {width}x{height}")
        self.width, self.height = int(width), int(height)
        self.n = self.width * self.height
        edges = set()
        for r in range(self.height):
            for c in range(self.width):
                i = r * self.width + c
                for j in (r * self.width + (c + 1) % self.width,
                          ((r + 1) % self.height) * self.width + c):
                    if i != j:
                        edges.add((min(i, j), max(i, j)))
        e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
        self.edge_i = np.ascontiguousarray(e[:, 0])
        self.edge_j = np.ascontiguousarray(e[:, 1])
        nbrs = [[] for _ in range(self.n)]
        for i, j in e.tolist():
            nbrs[i].append(j)
            nbrs[j].append(i)
        self.ptr = np.zeros(self.n + 1, dtype=np.int64)
        self.ptr[1:] = np.cumsum([len(v) for v in nbrs])
        self.idx = np.array([j for v in nbrs for j in v], dtype=np.int64)
        for arr in (self.edge_i, self.edge_j, self.ptr, self.idx):
            arr.setflags(write=False)

    @property
    def n_edges(self):
        return len(self.edge_i)

    def neighbour_sums(self, flat):
        """Sum of neighbouring spins for every site of a flat lattice (or batch of them)."""
        flat = np.asarray(flat, dtype=np.int64)
        out = np.zeros(flat.shape, dtype=np.int64)
        np.add.at(out, (..., self.edge_i), flat[..., self.edge_j])
        np.add.at(out, (..., self.edge_j), flat[..., self.edge_i])
        return out


@functools.lru_cache(maxsize=64)
def torus(width: int, height: int) -> Torus:
    return Torus(width, height)


def _geometry(lattice):
    lattice = np.asarray(lattice)
    if lattice.ndim != 2:
        raise DomainError(f"lattice must be 2-D, got shape {lattice.shape}")
    return torus(lattice.shape[1], lattice.shape[0])


def check_lattice(lattice):
    arr = np.asarray(lattice)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError(f"lattice must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.abs(arr) == 1):
        raise DomainError("every spin must be -1 or +1")
    return np.ascontiguousarray(arr, dtype=np.int8)


def sufficient_stats(lattice):
    """``(sum over edges of y_i y_j, sum of y_i)`` as exact integers."""
    lattice = np.ascontiguousarray(lattice, dtype=np.int8)
    geo = _geometry(lattice)
    return kernels.backend.ising_stats(lattice.ravel(), geo.edge_i, geo.edge_j)


def log_f(lattice, params) -> float:
    J, h = _params(params)
    e, m = sufficient_stats(lattice)
    return J * e + h * m


def conditional_table(theta_J, theta_h):
    """``P(y_i = +1 | neighbour sum s)`` indexed by ``s + 4``."""
    s = np.arange(-4, 5, dtype=np.float64)
    return np.ascontiguousarray(expit(2.0 * (theta_J * s + theta_h)))


def _sweep_in_place(flat, geo, J, h, rng):
    u = rng.random(geo.n)
    kernels.backend.heat_bath_sweep(flat, geo.ptr, geo.idx, conditional_table(J, h), u)


def gibbs_sweep(lattice, params, rng, counters=None):
    """One raster-order heat-bath sweep; returns a new lattice."""
    J, h = _params(params)
    out = np.array(lattice, dtype=np.int8, order="C")
    geo = _geometry(out)
    _sweep_in_place(out.ravel(), geo, J, h, rng)
    if counters is not None:
        counters.gibbs_updates += geo.n
    return out


def effective_params(theta_a, theta_b, beta):
    """Parameters of ``f(.; a)^beta f(.; b)^(1-beta)``, exact since log f is linear in theta."""
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    Ja, ha = _params(theta_a)
    Jb, hb = _params(theta_b)
    if beta == 1.0:
        return Ja, ha
    if beta == 0.0:
        return Jb, hb
    return beta * Ja + (1.0 - beta) * Jb, beta * ha + (1.0 - beta) * hb


def bridged_gibbs_sweep(lattice, theta_a, theta_b, beta, rng, counters=None):
    return gibbs_sweep(lattice, effective_params(theta_a, theta_b, beta), rng, counters)


def cftp_exact_sample(params, rng, shape, counters=None, max_sweeps=MAX_CFTP_SWEEPS):
    """Exact draw by monotone coupling from the past.

    One 64-bit seed is taken from ``rng``; the uniform used at sweep ``t``
    before time zero and site ``i`` is a fixed hash of ``(seed, t, i)``, so
    doubling the epoch replays identical randomness for the recent sweeps.
    ``shape`` is ``(height, width)``.
    """
    J, h = _params(params)
    if J < 0:
        raise UnsupportedRegimeError(f"monotone CFTP needs theta_J >= 0, got {J}")
    height, width = shape
    geo = torus(width, height)
    seed = int(rng.integers(0, 2 ** 64, dtype=np.uint64))
    state, T, updates = kernels.backend.cftp(geo.ptr, geo.idx, conditional_table(J, h),
                                             seed, max_sweeps)
    if counters is not None:
        counters.gibbs_updates += updates
    if T < 0:
        raise CFTPBudgetError(f"no coalescence within {max_sweeps} sweeps at theta=({J}, {h})")
    return state.reshape(height, width)


# ---------------------------------------------------------------------------
# pseudo-likelihood

def _pl_parts(theta, y, s):
    # a_i = J s_i + h ; log p(y_i | rest) = log sigmoid(2 y_i a_i)
    a = theta[0] * s + theta[1]
    z = 2.0 * y * a
    value = float(-np.logaddexp(0.0, -z).sum())
    r = expit(-z)  # 1 - sigmoid(z)
    feats = np.stack([s, np.ones_like(s)])
    grad = feats @ (2.0 * y * r)
    w = 4.0 * r * (1.0 - r)
    hess = -(feats * w) @ feats.T
    return value, grad, hess


def pseudo_log_likelihood(data, params) -> float:
    data = check_lattice(data)
    flat = data.ravel().astype(np.float64)
    s = _geometry(data).neighbour_sums(data.ravel()).astype(np.float64)
    return _pl_parts(np.array(_params(params)), flat, s)[0]


def pseudolikelihood_estimate(data, bounds=((0.0, 1.0), (-1.0, 1.0)), tol=1e-8, max_iter=200):
    """Box-constrained maximum pseudo-likelihood estimate of ``(theta_J, theta_h)``.

    Projected damped Newton: coordinates pinned at a bound with the gradient
    pointing outward are frozen, the rest take a Levenberg-damped Newton step
    with backtracking. Stops when the projected gradient norm drops below ``tol``.
    """
    data = check_lattice(data)
    y = data.ravel().astype(np.float64)
    s = _geometry(data).neighbour_sums(data.ravel()).astype(np.float64)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    theta = np.clip(np.zeros(2), lo, hi)
    value, grad, hess = _pl_parts(theta, y, s)
    for _ in range(max_iter):
        pinned = ((theta <= lo) & (grad < 0)) | ((theta >= hi) & (grad > 0))
        free = ~pinned
        if np.linalg.norm(np.where(free, grad, 0.0)) < tol:
            break
        H = -hess[np.ix_(free, free)]
        g = grad[free]
        damping = 1e-10 * max(1.0, np.trace(H))
        improved = False
        while damping < 1e12:
            step = np.zeros(2)
            step[free] = np.linalg.solve(H + damping * np.eye(len(g)), g)
            t = 1.0
            while t > 1e-12:
                cand = np.clip(theta + t * step, lo, hi)
                cv, cg, ch = _pl_parts(cand, y, s)
                if cv >= value + 1e-4 * t * float(g @ step[free]) or np.allclose(cand, theta, rtol=0, atol=1e-15):
                    improved = True
                    break
                t *= 0.5
            if improved:
                break
            damping *= 10.0
        if not improved or np.array_equal(cand, theta):
            theta = cand
            value, grad, hess = cv, cg, ch
            break
        theta, value, grad, hess = cand, cv, cg, ch
    return IsingParams(float(theta[0]), float(theta[1]))


# ---------------------------------------------------------------------------
# enumeration oracle

def all_configurations(n):
    """All ``2**n`` spin vectors; row ``k`` has site ``i`` up iff bit ``n-1-i`` of ``k`` is set."""
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return (2 * bits - 1).astype(np.int8)


@dataclass(frozen=True)
class Enumeration:
    states: np.ndarray      # (2**n, n) flat configurations
    probs: np.ndarray       # normalized probabilities
    log_z: float

    def index_of(self, lattice):
        flat = np.asarray(lattice).ravel()
        return int(((flat > 0).astype(np.int64) << np.arange(len(flat) - 1, -1, -1)).sum())


def enumerate_boltzmann(width, height, params) -> Enumeration:
    n = width * height
    if n > MAX_ENUMERATION_SITES:
        raise DomainError(f"enumeration limited to {MAX_ENUMERATION_SITES} sites, got {n}")
    J, h = _params(params)
    geo = torus(width, height)
    states = all_configurations(n)
    s64 = states.astype(np.int64)
    e = (s64[:, geo.edge_i] * s64[:, geo.edge_j]).sum(axis=1)
    m = s64.sum(axis=1)
    logw = J * e + h * m
    top = float(logw.max())
    w = np.exp(logw - top)
    total = float(w.sum())
    return Enumeration(states, w / total, top + math.log(total))


# ---------------------------------------------------------------------------
# text format: "width height" then one row of +-1 integers per line

def format_lattice(lattice) -> str:
    lattice = check_lattice(lattice)
    h, w = lattice.shape
    rows = [" ".join(f"{v:d}" for v in row) for row in lattice.tolist()]
    return f"{w} {h}\n" + "\n".join(rows) + "\n"


def parse_lattice(text: str):
    tokens = text.split()
    if len(tokens) < 2:
        raise DomainError("lattice text must start with width and height")
    try:
        w, h = int(tokens[0]), int(tokens[1])
        vals = [int(v) for v in tokens[2:]]
    except ValueError as exc:
        raise DomainError(f"lattice text must hold integers: {exc}") from exc
    if w < 1 or h < 1:
        raise DomainError(f"lattice dimensions must be positive, got {w}x{h}")
    if len(vals) != w * h:
        raise DomainError(f"expected {w * h} spins for a {w}x{h} lattice, found {len(vals)}")
    return check_lattice(np.array(vals, dtype=np.int64).reshape(h, w))


def write_lattice(lattice, path):
    with open(path, "w") as fh:
        fh.write(format_lattice(lattice))


def read_lattice(path):
    with open(os.fspath(path)) as fh:
        return parse_lattice(fh.read())


class IsingModel(Model):
    """Ising posterior target with uniform prior on ``0 < theta_J < 1, |theta_h| < 1``."""

    param_dim = 2

    def __init__(self, data, j_bounds=(0.0, 1.0), h_bounds=(-1.0, 1.0),
                 max_cftp_sweeps=MAX_CFTP_SWEEPS):
        self.data = check_lattice(data).copy()
        self.data.setflags(write=False)
        self.shape = self.data.shape
        self.j_bounds = tuple(float(v) for v in j_bounds)
        self.h_bounds = tuple(float(v) for v in h_bounds)
        if self.j_bounds[0] < 0:
            raise UnsupportedRegimeError("prior support must keep theta_J >= 0 for monotone CFTP")
        self.max_cftp_sweeps = max_cftp_sweeps
        self._log_prior = -math.log((self.j_bounds[1] - self.j_bounds[0])
                                    * (self.h_bounds[1] - self.h_bounds[0]))

    def __repr__(self):
        h, w = self.shape
        return f"IsingModel({w}x{h})"

    def log_f(self, x, theta) -> float:
        return log_f(x, theta)

    def log_prior(self, theta) -> float:
        J, h = _params(theta)
        if self.j_bounds[0] < J < self.j_bounds[1] and self.h_bounds[0] < h < self.h_bounds[1]:
            return self._log_prior
        return -math.inf

    def exact_sample(self, theta, rng, counters=None):
        return cftp_exact_sample(theta, rng, self.shape, counters, self.max_cftp_sweeps)

    def bridge_transition(self, x, theta_a, theta_b, beta, rng, counters=None):
        return bridged_gibbs_sweep(x, theta_a, theta_b, beta, rng, counters)

    def point_estimate(self):
        est = pseudolikelihood_estimate(self.data, bounds=(self.j_bounds, self.h_bounds))
        return est.as_array()

    def initial_theta(self):
        """Pseudo-likelihood estimate pulled just inside the open prior box."""
        lo = np.array([self.j_bounds[0], self.h_bounds[0]])
        hi = np.array([self.j_bounds[1], self.h_bounds[1]])
        margin = 1e-3 * (hi - lo)
        return np.clip(self.point_estimate(), lo + margin, hi - margin)


class GridIsingModel(IsingModel):
    """Ising model whose parameter is restricted to a finite grid with a uniform prior.

    Used by the discrete detailed-balance check; proposals must land on grid points.
    """

    def __init__(self, data, grid, **kwargs):
        super().__init__(data, **kwargs)
        self.grid = np.array([_params(g) for g in grid], dtype=np.float64)
        self._grid_log_prior = -math.log(len(self.grid))

    def grid_index(self, theta):
        hits = np.flatnonzero(np.all(self.grid == np.asarray(theta, dtype=np.float64), axis=1))
        return int(hits[0]) if len(hits) else -1

    def log_prior(self, theta) -> float:
        return self._grid_log_prior if self.grid_index(theta) >= 0 else -math.inf
