"""Experiment configuration: a YAML document with a fixed schema.

Unknown keys are rejected, and every error names the dotted path of the
offending field. See ``configs/SCHEMA.md`` for the full layout.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

from .samplers import ALGORITHMS


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# Spelling variants accepted for a few keys; normalized before validation.
_ALIASES = {"data-file": "data_file", "algorithm": "algorithms", "burn-in": "burn_in",
            "n-replicates": "n_replicates", "master-seed": "master_seed"}

_SCHEMA = {
    "master_seed": None,
    "model": {
        "gaussian": {"alpha": None, "beta": None, "data": None},
        "ising": {"width": None, "height": None, "data_file": None,
                  "generate": {"theta_J": None, "theta_h": None, "seed": None}},
    },
    "sampler": {
        "algorithms": None, "K": None, "theta_hat": None, "theta0": None,
        "proposal": {"kind": None, "width": None},
        "T": None, "burn_in": None, "n_replicates": None,
    },
    "output": {"csv": None, "detail": None},
}


def _normalize(doc, path=""):
    if not isinstance(doc, dict):
        return doc
    out = {}
    for key, value in doc.items():
        name = _ALIASES.get(key, key)
        sub = f"{path}.{name}" if path else str(name)
        if name in out:
            raise ConfigError(sub, f"given twice (as {key!r} and an alias)")
        out[name] = _normalize(value, sub)
    return out


def _check_keys(doc, schema, path=""):
    if not isinstance(doc, dict):
        raise ConfigError(path, f"expected a mapping, got {type(doc).__name__}")
    for key, value in doc.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in schema:
            raise ConfigError(sub, "unknown key")
        if isinstance(schema[key], dict) and value is not None:
            _check_keys(value, schema[key], sub)


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _number(value, path, positive=False, integer=False, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(path, f"must be > 0, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value!r}")
    return int(value) if integer else float(value)


def _theta(value, path):
    if isinstance(value, (list, tuple)):
        return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))
    return (_number(value, path),)


@dataclass(frozen=True)
class GaussianSpec:
    alpha: float
    beta: float
    data: tuple


@dataclass(frozen=True)
class IsingSpec:
    width: int
    height: int
    data_file: str | None = None
    generate: tuple | None = None   # (theta_J, theta_h, seed)


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    model: object
    algorithms: tuple
    Ks: tuple
    theta_hats: tuple               # tuple of parameter tuples, or (None,)
    proposal_kind: str
    widths: tuple
    T: int
    burn_in: int
    n_replicates: int
    theta0: tuple | None = None
    csv: str | None = None
    detail: bool = False
    raw: dict = field(default=None, compare=False, repr=False)


def _parse_model(doc):
    if not isinstance(doc, dict) or len(doc) != 1:
        raise ConfigError("model", "exactly one of 'gaussian' or 'ising' is required")
    (kind, spec), = doc.items()
    if kind == "gaussian":
        p = "model.gaussian"
        for key in ("alpha", "beta", "data"):
            if spec.get(key) is None:
                raise ConfigError(f"{p}.{key}", "required")
        data = tuple(_number(v, f"{p}.data[{i}]") for i, v in enumerate(_as_list(spec["data"])))
        return GaussianSpec(_number(spec["alpha"], f"{p}.alpha", positive=True),
                            _number(spec["beta"], f"{p}.beta", positive=True), data)
    p = "model.ising"
    for key in ("width", "height"):
        if spec.get(key) is None:
            raise ConfigError(f"{p}.{key}", "required")
    w = _number(spec["width"], f"{p}.width", integer=True, minimum=1)
    h = _number(spec["height"], f"{p}.height", integer=True, minimum=1)
    has_file, has_gen = spec.get("data_file") is not None, spec.get("generate") is not None
    if has_file == has_gen:
        raise ConfigError(p, "give exactly one of 'data_file' or 'generate'")
    if has_file:
        return IsingSpec(w, h, data_file=str(spec["data_file"]))
    g = spec["generate"]
    gp = f"{p}.generate"
    for key in ("theta_J", "theta_h", "seed"):
        if g.get(key) is None:
            raise ConfigError(f"{gp}.{key}", "required")
    J = _number(g["theta_J"], f"{gp}.theta_J", minimum=0.0)
    return IsingSpec(w, h, generate=(J, _number(g["theta_h"], f"{gp}.theta_h"),
                                     _number(g["seed"], f"{gp}.seed", integer=True, minimum=0)))


def parse_config(doc) -> ExperimentConfig:
    """Validate a parsed YAML document and build an :class:`ExperimentConfig`."""
    doc = _normalize(copy.deepcopy(doc))
    _check_keys(doc, _SCHEMA)
    for key in ("master_seed", "model", "sampler"):
        if doc.get(key) is None:
            raise ConfigError(key, "required")
    seed = _number(doc["master_seed"], "master_seed", integer=True, minimum=0)
    model = _parse_model(doc["model"])

    s = doc["sampler"]
    algs = _as_list(s.get("algorithms"))
    if algs == [None]:
        raise ConfigError("sampler.algorithms", "required")
    for i, a in enumerate(algs):
        if a not in ALGORITHMS:
            raise ConfigError(f"sampler.algorithms[{i}]", f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
    if "exact-z-mh" in algs and isinstance(model, IsingSpec):
        raise ConfigError("sampler.algorithms", "exact-z-mh needs the Gaussian model")
    Ks = tuple(_number(k, f"sampler.K[{i}]", integer=True, minimum=0)
               for i, k in enumerate(_as_list(s.get("K", 0) if s.get("K") is not None else 0)))

    th = s.get("theta_hat")
    if th is None:
        if isinstance(model, GaussianSpec) and any(a in ("savm", "mavm") for a in algs):
            raise ConfigError("sampler.theta_hat", "required for savm/mavm on the Gaussian model")
        theta_hats = (None,)
    else:
        items = th if (isinstance(th, list) and th and isinstance(th[0], list)) or \
            (isinstance(th, list) and isinstance(model, GaussianSpec)) else [th]
        theta_hats = tuple(_theta(v, f"sampler.theta_hat[{i}]") for i, v in enumerate(items))
        dim = 1 if isinstance(model, GaussianSpec) else 2
        for i, t in enumerate(theta_hats):
            if len(t) != dim:
                raise ConfigError(f"sampler.theta_hat[{i}]", f"expected {dim} components")

    prop = s.get("proposal")
    if not isinstance(prop, dict) or prop.get("kind") is None:
        raise ConfigError("sampler.proposal.kind", "required")
    kind = prop["kind"]
    if kind == "posterior":
        if not isinstance(model, GaussianSpec):
            raise ConfigError("sampler.proposal.kind", "posterior proposals need the Gaussian model")
        if prop.get("width") is not None:
            raise ConfigError("sampler.proposal.width", "not used by posterior proposals")
        widths = (None,)
    elif kind == "random-walk":
        if prop.get("width") is None:
            raise ConfigError("sampler.proposal.width", "required for random-walk proposals")
        widths = tuple(_number(w, f"sampler.proposal.width[{i}]", positive=True)
                       for i, w in enumerate(_as_list(prop["width"])))
    else:
        raise ConfigError("sampler.proposal.kind", f"must be 'posterior' or 'random-walk', got {kind!r}")

    if s.get("T") is None:
        raise ConfigError("sampler.T", "required")
    T = _number(s["T"], "sampler.T", integer=True, minimum=1)
    burn = _number(s.get("burn_in", 0) or 0, "sampler.burn_in", integer=True, minimum=0)
    if burn >= T:
        raise ConfigError("sampler.burn_in", "must be smaller than T")
    reps = _number(s.get("n_replicates", 1) or 1, "sampler.n_replicates", integer=True, minimum=1)
    theta0 = None if s.get("theta0") is None else _theta(s["theta0"], "sampler.theta0")

    out = doc.get("output") or {}
    detail = out.get("detail", False)
    if not isinstance(detail, bool):
        raise ConfigError("output.detail", "must be true or false")
    csv = out.get("csv")
    return ExperimentConfig(seed, model, tuple(algs), Ks, theta_hats, kind, widths, T, burn, reps,
                            theta0, None if csv is None else str(csv), detail, raw=doc)


def apply_overrides(doc, overrides):
    """Apply ``a.b.c=value`` overrides (values parsed as YAML) to a config document."""
    doc = copy.deepcopy(doc) if doc is not None else {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like dotted.path=value")
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        node = doc
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(path, "cannot descend into a non-mapping")
        node[keys[-1]] = yaml.safe_load(raw)
    return doc


def load_config(path, overrides=()):
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
    return parse_config(apply_overrides(doc, overrides))
