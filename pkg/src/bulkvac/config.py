"""JSON run configuration.

A configuration is a JSON object::

    {
      "version": 1,
      "model": {
        "a": 3, "b": 8, "lambda": 0.5, "p": 0.5, "policy": "single",
        "group_size": {"type": "deterministic", "d": 1},
        "fes": {"3": <dist>, ..., "8": <dist>},
        "sos": <dist>,
        "vacation": {"type": "negative_binomial", "r": 2, "q": 0.7},
        "rate_multipliers": {"fes": 1.0, "sos": 1.0, "vacation": 1.0},
        "tol": 1e-12
      },
      "engine": "analytic",
      "truncation": {"n_max": null},
      "simulation": {"slots": 10000000, "warmup": 100000, "seed": 12345, "replications": 1}
    }

``fes``, ``sos`` and ``vacation`` take either one distribution (shared by
every index) or an object keyed by index.  Distribution descriptors are
tagged by ``type``:

* ``{"type": "dph", "beta": [...], "T": [[...]]}``
* ``{"type": "geometric", "q": q}``
* ``{"type": "negative_binomial", "r": r, "q": q}``
* ``{"type": "deterministic", "d": d}``
* ``{"type": "explicit", "offset": o, "mass": [...]}``

A rate multiplier ``m`` scales the success probability ``q`` of geometric
and negative-binomial durations (dividing their means by ``m``); other
types reject ``m != 1``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import dists
from .dists import DiscretePmf, DPHParams
from .errors import BulkVacError, ConfigError, ParameterError
from .model import ModelSpec, Policy, validate
from .simulator import SimConfig

SCHEMA_VERSION = 1
ENGINES = ("analytic", "truncated")
_TOP_KEYS = {"version", "model", "engine", "truncation", "simulation", "output", "description"}
_MODEL_KEYS = {"a", "b", "lambda", "p", "policy", "group_size", "fes", "sos", "vacation", "rate_multipliers", "tol"}
_DIST_FIELDS = {
    "dph": {"beta", "T"},
    "geometric": {"q"},
    "negative_binomial": {"r", "q"},
    "deterministic": {"d"},
    "explicit": {"offset", "mass"},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``raw`` keeps the source document for sweeps."""

    spec: ModelSpec
    engine: str = "analytic"
    n_max: int | None = None
    simulation: SimConfig = field(default_factory=SimConfig)
    raw: dict = field(default_factory=dict, repr=False)


def _ptr(*parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def _require(obj: dict, key: str, path: tuple):
    if key not in obj:
        raise ConfigError(f"missing required field '{key}'", _ptr(*path))
    return obj[key]


def _number(value, path: tuple, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", _ptr(*path))
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value}", _ptr(*path))
    return int(value) if integer else float(value)


def _unknown(obj: dict, allowed: set, path: tuple):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown field '{extra[0]}'", _ptr(*path, extra[0]))


def parse_distribution(desc: Any, path: tuple = (), multiplier: float = 1.0, tol: float = dists.DEFAULT_TOL) -> DiscretePmf:
    """Build a pmf from a tagged descriptor; errors carry the JSON pointer."""
    if not isinstance(desc, dict):
        raise ConfigError("distribution must be an object", _ptr(*path))
    kind = _require(desc, "type", path)
    if kind not in _DIST_FIELDS:
        raise ConfigError(f"unknown distribution type '{kind}'", _ptr(*path, "type"))
    _unknown(desc, _DIST_FIELDS[kind] | {"type"}, path)
    for key in _DIST_FIELDS[kind]:
        _require(desc, key, path)
    if kind not in ("geometric", "negative_binomial") and multiplier != 1.0:
        raise ConfigError(f"rate multiplier applies only to geometric and negative_binomial, not '{kind}'", _ptr(*path))
    try:
        if kind == "dph":
            beta = np.asarray(desc["beta"], dtype=float)
            T = np.asarray(desc["T"], dtype=float)
            return dists.pmf_from_dph(DPHParams(beta, T), tol)
        if kind == "geometric":
            return dists.build_geometric(_number(desc["q"], path + ("q",)) * multiplier, tol)
        if kind == "negative_binomial":
            r = _number(desc["r"], path + ("r",), integer=True)
            return dists.build_negative_binomial(r, _number(desc["q"], path + ("q",)) * multiplier, tol)
        if kind == "deterministic":
            return dists.point_mass(_number(desc["d"], path + ("d",), integer=True))
        offset = _number(desc["offset"], path + ("offset",), integer=True)
        return dists.explicit(offset, [float(x) for x in desc["mass"]])
    except ConfigError:
        raise
    except (ParameterError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), _ptr(*path)) from exc


def _indexed(desc: Any, lo: int, hi: int, path: tuple, multiplier: float, tol: float) -> dict:
    if isinstance(desc, dict) and "type" in desc:
        pmf = parse_distribution(desc, path, multiplier, tol)
        return {k: pmf for k in range(lo, hi + 1)}
    if not isinstance(desc, dict):
        raise ConfigError("expected a distribution or an object keyed by index", _ptr(*path))
    out = {}
    for key, sub in desc.items():
        if not key.lstrip("-").isdigit() or not lo <= int(key) <= hi:
            raise ConfigError(f"index '{key}' outside {lo}..{hi}", _ptr(*path, key))
        out[int(key)] = parse_distribution(sub, path + (key,), multiplier, tol)
    for k in range(lo, hi + 1):
        if k not in out:
            raise ConfigError(f"missing distribution for index {k}", _ptr(*path, str(k)))
    return out


def parse_model(model: Any, path: tuple = ("model",)) -> ModelSpec:
    if not isinstance(model, dict):
        raise ConfigError("model must be an object", _ptr(*path))
    _unknown(model, _MODEL_KEYS, path)
    a = _number(_require(model, "a", path), path + ("a",), integer=True)
    b = _number(_require(model, "b", path), path + ("b",), integer=True)
    if a < 1:
        raise ConfigError("a must be >= 1", _ptr(*path, "a"))
    if a > b:
        raise ConfigError("a exceeds b", _ptr(*path, "b"))
    lam = _number(_require(model, "lambda", path), path + ("lambda",))
    if not 0 < lam < 1:
        raise ConfigError("lambda must be in (0,1)", _ptr(*path, "lambda"))
    p = _number(_require(model, "p", path), path + ("p",))
    if not 0 <= p <= 1:
        raise ConfigError("p must be in [0,1]", _ptr(*path, "p"))
    policy_name = model.get("policy", "single")
    try:
        policy = Policy(policy_name)
    except ValueError:
        raise ConfigError(f"policy must be 'single' or 'multiple', got '{policy_name}'", _ptr(*path, "policy")) from None
    tol = _number(model.get("tol", dists.DEFAULT_TOL), path + ("tol",))
    mult = model.get("rate_multipliers", {})
    if not isinstance(mult, dict):
        raise ConfigError("rate_multipliers must be an object", _ptr(*path, "rate_multipliers"))
    _unknown(mult, {"fes", "sos", "vacation"}, path + ("rate_multipliers",))
    m = {k: _number(mult.get(k, 1.0), path + ("rate_multipliers", k)) for k in ("fes", "sos", "vacation")}
    for k, v in m.items():
        if v <= 0:
            raise ConfigError("rate multiplier must be positive", _ptr(*path, "rate_multipliers", k))
    g = parse_distribution(_require(model, "group_size", path), path + ("group_size",), 1.0, tol)
    spec = ModelSpec(
        a=a,
        b=b,
        lam=lam,
        g=g,
        p_sos=p,
        fes=_indexed(_require(model, "fes", path), a, b, path + ("fes",), m["fes"], tol),
        sos=_indexed(_require(model, "sos", path), 1, b, path + ("sos",), m["sos"], tol),
        vacation=_indexed(_require(model, "vacation", path), 0, a - 1, path + ("vacation",), m["vacation"], tol),
        policy=policy,
    )
    try:
        validate(spec, check_stability=False)
    except ParameterError as exc:
        raise ConfigError(str(exc), _ptr(*path)) from exc
    return spec


def parse_config(doc: Any) -> RunConfig:
    """Validate a configuration document; raises ``ConfigError`` with a JSON pointer."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", "")
    _unknown(doc, _TOP_KEYS, ())
    version = _require(doc, "version", ())
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version!r}; expected {SCHEMA_VERSION}", "/version")
    spec = parse_model(_require(doc, "model", ()))
    engine = doc.get("engine", "analytic")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}", "/engine")
    trunc = doc.get("truncation", {}) or {}
    if not isinstance(trunc, dict):
        raise ConfigError("truncation must be an object", "/truncation")
    _unknown(trunc, {"n_max"}, ("truncation",))
    n_max = trunc.get("n_max")
    if n_max is not None:
        n_max = _number(n_max, ("truncation", "n_max"), integer=True)
    sim = doc.get("simulation", {}) or {}
    if not isinstance(sim, dict):
        raise ConfigError("simulation must be an object", "/simulation")
    _unknown(sim, {"slots", "warmup", "seed", "replications", "queue_cap"}, ("simulation",))
    try:
        sim_cfg = SimConfig(**{k: _number(v, ("simulation", k), integer=True) for k, v in sim.items()})
    except ParameterError as exc:
        raise ConfigError(str(exc), "/simulation") from exc
    return RunConfig(spec=spec, engine=engine, n_max=n_max, simulation=sim_cfg, raw=copy.deepcopy(doc))


def resolve_path(path: str | Path) -> Path:
    """``path`` itself if it exists, else the shipped example of that name."""
    p = Path(path)
    if not p.exists() and p.name == str(path) and p.name in example_names():
        return example_path(p.name)
    return p


def load_config(path: str | Path) -> RunConfig:
    try:
        text = resolve_path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}", "") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "") from exc
    return parse_config(doc)


def set_pointer(doc: dict, pointer: str, value) -> dict:
    """Copy of ``doc`` with the scalar at JSON pointer ``pointer`` replaced.

    Entries under ``rate_multipliers`` may be absent and are created.
    """
    if not pointer.startswith("/"):
        raise ConfigError("parameter path must be a JSON pointer such as /model/lambda", pointer)
    out = copy.deepcopy(doc)
    parts = [p.replace("~1", "/").replace("~0", "~") for p in pointer[1:].split("/")]
    node = out
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, dict) and part == "rate_multipliers":
            node = node.setdefault(part, {})
            continue
        try:
            node = node[int(part)] if isinstance(node, list) else node[part]
        except (KeyError, IndexError, ValueError, TypeError):
            raise ConfigError("parameter path does not exist", _ptr(*parts[: i + 1])) from None
    last = parts[-1]
    creatable = len(parts) >= 2 and parts[-2] == "rate_multipliers"
    try:
        current = node[int(last)] if isinstance(node, list) else node[last]
    except (KeyError, IndexError, ValueError, TypeError):
        if not (creatable and isinstance(node, dict)):
            raise ConfigError("parameter path does not exist", pointer) from None
        current = None
    if isinstance(current, (dict, list)):
        raise ConfigError("parameter path must address a scalar", pointer)
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out


def example_path(name: str = "example_single.json") -> Path:
    """Path of a configuration shipped with the package."""
    return Path(str(resources.files("bulkvac") / "data" / name))


def example_names() -> list[str]:
    return sorted(p.name for p in resources.files("bulkvac").joinpath("data").iterdir() if p.name.endswith(".json"))


__all__ = [
    "RunConfig",
    "SCHEMA_VERSION",
    "parse_distribution",
    "parse_model",
    "parse_config",
    "load_config",
    "set_pointer",
    "example_path",
    "example_names",
    "BulkVacError",
]
