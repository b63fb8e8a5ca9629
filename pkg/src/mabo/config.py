"""Run-configuration files (YAML).

Example::

    schema: mabo-config/1
    n_agents: 7
    domain: [40, 90]
    rho: 10
    beta: 4
    xi: 0.01
    acquisition: [EI, EI, PI, PI, LCB, LCB, GreedyMean]
    inner_iters: 1
    n0: 3
    max_admm_iters: 30
    seed: 0
    noise_std: 0
    hyperparameters: refit
    oracle:
      platoon:
        nominal: {a: 178, b: 5800, c: -1.76, d: 0.0188}
        perturbation: 0.2

The ``oracle`` section holds exactly one of ``platoon`` (sampled fleet),
``functions`` (one named built-in per agent) or ``plugin`` (``"module:attr"``
naming a factory ``f(agent_id, n_agents) -> callable``). Plugins are black
boxes and cannot drive the full-model baseline.
"""

from __future__ import annotations

import importlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from mabo.acquisition import DEFAULT_BETA, DEFAULT_XI, AcquisitionKind, AcquisitionSpec
from mabo.box import Box
from mabo.gp import KernelParams
from mabo.platoon import DEFAULT_NOMINAL, FleetConfig, FuelModel, sample_fleet
from mabo.runtime import DEFAULT_MAX_ADMM_ITERS, DEFAULT_RHO, RunConfig

SCHEMA = "mabo-config/1"


class ConfigError(ValueError):
    """Schema violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Quadratic:
    center: tuple[float, ...]
    scale: float = 1.0

    def __call__(self, x) -> float:
        dx = np.atleast_1d(np.asarray(x, dtype=float)) - np.asarray(self.center)
        return float(self.scale * dx @ dx)

    def batch(self, X):
        dx = np.asarray(X, dtype=float) - np.asarray(self.center)
        return self.scale * np.einsum("ij,ij->i", dx, dx)


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, x) -> float:
        return float(self.value)

    def batch(self, X):
        return np.full(len(X), float(self.value))


@dataclass
class LoadedConfig:
    run: RunConfig
    oracles: list[Callable]
    models: list[Callable] | None
    fleet: list[FuelModel] | None


def _num(d: dict, key: str, path: str, default=None, *, positive=False, nonneg=False, integer=False):
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}{key}", "required field missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {v!r}")
    if integer and not float(v).is_integer():
        raise ConfigError(f"{path}{key}", f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{path}{key}", "must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{path}{key}", f"must be > 0, got {v!r}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{path}{key}", f"must be >= 0, got {v!r}")
    return int(v) if integer else float(v)


def _per_agent(raw: dict, key: str, n: int, default):
    v = raw.get(key, default)
    if isinstance(v, list):
        if len(v) != n:
            raise ConfigError(key, f"expected {n} entries, got {len(v)}")
        return v
    return [v] * n


def _domain(raw: dict) -> Box:
    if "domain" not in raw:
        raise ConfigError("domain", "required field missing")
    try:
        return Box.from_bounds(raw["domain"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("domain", str(exc)) from None


def _hyper(raw: dict):
    v = raw.get("hyperparameters", "refit")
    if v == "refit":
        return "refit"
    if not isinstance(v, dict):
        raise ConfigError("hyperparameters", "expected 'refit' or a mapping of fixed values")
    try:
        return KernelParams(_num(v, "signal_variance", "hyperparameters.", positive=True),
                            tuple(v.get("lengthscales", ())),
                            _num(v, "noise_variance", "hyperparameters.", 0.0, nonneg=True))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("hyperparameters.lengthscales", str(exc)) from None


def _builtin(spec: Any, path: str, domain: Box) -> Callable:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(path, "expected a mapping with a 'name'")
    name = spec["name"]
    if name == "quadratic":
        center = np.atleast_1d(np.asarray(spec.get("center", 0.0), dtype=float))
        if center.size == 1:
            center = np.repeat(center, domain.dim)
        if center.shape != (domain.dim,):
            raise ConfigError(f"{path}.center", "dimension does not match the domain")
        return Quadratic(tuple(center), _num(spec, "scale", f"{path}.", 1.0, positive=True))
    if name == "constant":
        return Constant(_num(spec, "value", f"{path}.", 0.0))
    if name == "fuel":
        if domain.dim != 1 or not domain.lo[0] > 0:
            raise ConfigError(f"{path}.name", "fuel models need a 1-D domain with positive speeds")
        return FuelModel(*(_num(spec, k, f"{path}.") for k in "abcd"))
    raise ConfigError(f"{path}.name", f"unknown built-in function {name!r}")


def build(raw: Any, seed_override: int | None = None) -> LoadedConfig:
    """Validate a parsed config mapping and build the run and its oracles."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    if raw.get("schema") != SCHEMA:
        raise ConfigError("schema", f"expected {SCHEMA!r}, got {raw.get('schema')!r}")
    n = _num(raw, "n_agents", "", integer=True, positive=True)
    domain = _domain(raw)
    rho = _num(raw, "rho", "", DEFAULT_RHO, positive=True)
    beta = _num(raw, "beta", "", DEFAULT_BETA, positive=True)
    xi = _num(raw, "xi", "", DEFAULT_XI, nonneg=True)
    seed = _num(raw, "seed", "", 0, integer=True, nonneg=True)
    if seed_override is not None:
        seed = int(seed_override)

    kinds = _per_agent(raw, "acquisition", n, "LCB")
    specs = []
    for i, kind in enumerate(kinds):
        try:
            specs.append(AcquisitionSpec(AcquisitionKind(kind), beta=beta, xi=xi))
        except ValueError:
            raise ConfigError(f"acquisition[{i}]", f"unknown acquisition {kind!r}") from None
    inner = _per_agent(raw, "inner_iters", n, 1)
    for i, j in enumerate(inner):
        if isinstance(j, bool) or not isinstance(j, int) or j < 1:
            raise ConfigError(f"inner_iters[{i}]", f"must be a positive integer, got {j!r}")

    run = RunConfig(
        n_agents=n, domain=domain, rho=rho,
        max_admm_iters=_num(raw, "max_admm_iters", "", DEFAULT_MAX_ADMM_ITERS, integer=True, positive=True),
        specs=specs, inner_iters=list(inner),
        n0=_num(raw, "n0", "", 3, integer=True, positive=True),
        seed=seed, noise_std=_num(raw, "noise_std", "", 0.0, nonneg=True),
        hyper_mode=_hyper(raw))

    oracle = raw.get("oracle")
    if not isinstance(oracle, dict) or len(oracle) != 1:
        raise ConfigError("oracle", "expected exactly one of 'platoon', 'functions', 'plugin'")
    (kind, body), = oracle.items()
    fleet = None
    if kind == "platoon":
        body = body or {}
        if not isinstance(body, dict):
            raise ConfigError("oracle.platoon", "expected a mapping")
        nominal = DEFAULT_NOMINAL
        if "nominal" in body:
            nom = body["nominal"]
            if not isinstance(nom, dict):
                raise ConfigError("oracle.platoon.nominal", "expected a mapping with a, b, c, d")
            nominal = FuelModel(*(_num(nom, k, "oracle.platoon.nominal.") for k in "abcd"))
        pert = _num(body, "perturbation", "oracle.platoon.", 0.2, nonneg=True)
        if pert >= 1:
            raise ConfigError("oracle.platoon.perturbation", "must be < 1")
        fleet_seed = _num(body, "seed", "oracle.platoon.", seed, integer=True, nonneg=True)
        try:
            fleet = sample_fleet(FleetConfig(nominal, n, pert, domain, fleet_seed))
        except ValueError as exc:
            raise ConfigError("oracle.platoon", str(exc)) from None
        oracles = models = list(fleet)
    elif kind == "functions":
        if not isinstance(body, list) or len(body) != n:
            raise ConfigError("oracle.functions", f"expected a list of {n} functions")
        oracles = models = [_builtin(s, f"oracle.functions[{i}]", domain) for i, s in enumerate(body)]
    elif kind == "plugin":
        if not isinstance(body, str) or ":" not in body:
            raise ConfigError("oracle.plugin", "expected 'module:attribute'")
        mod, attr = body.split(":", 1)
        try:
            factory = getattr(importlib.import_module(mod), attr)
        except (ImportError, AttributeError) as exc:
            raise ConfigError("oracle.plugin", str(exc)) from None
        oracles, models = [factory(i, n) for i in range(n)], None
    else:
        raise ConfigError(f"oracle.{kind}", "unknown oracle source")
    return LoadedConfig(run=run, oracles=oracles, models=models, fleet=fleet)


def load(path, seed_override: int | None = None) -> LoadedConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML: {exc}") from None
    return build(raw, seed_override)
