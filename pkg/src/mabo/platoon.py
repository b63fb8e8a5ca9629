"""Vehicle-platooning benchmark.

Each vehicle's fuel use per kilometre is ``a + b/v + c v + d v^2`` at cruising
speed ``v`` [km/h]. A fleet is sampled by perturbing a nominal parameter set
uniformly by a fixed fraction; the platoon's optimal common speed minimizes the
summed consumption.

The shipped :data:`DEFAULT_NOMINAL` is a stand-in chosen for this package, not
a published calibration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mabo.box import Box, golden_section

DEFAULT_SPEED_DOMAIN = Box((40.0,), (90.0,))
OPTIMUM_GRID_NODES = 1_000_001
MAX_RESAMPLES = 100


@dataclass(frozen=True)
class FuelModel:
    """Fuel consumption [g/veh-km] as a function of speed [km/h]."""

    a: float
    b: float
    c: float
    d: float

    def __call__(self, x) -> float:
        # oracle protocol: x is a 1-D domain point
        return float(fuel_consumption(self, float(np.asarray(x, dtype=float).reshape(-1)[0])))

    def batch(self, X: np.ndarray) -> np.ndarray:
        return fuel_consumption(self, np.asarray(X, dtype=float)[:, 0])

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


DEFAULT_NOMINAL = FuelModel(a=178.0, b=5800.0, c=-1.76, d=0.0188)


def fuel_consumption(m: FuelModel, speed):
    """Evaluate the fuel model; ``speed`` may be a scalar or an array."""
    v = np.asarray(speed, dtype=float)
    if np.any(v <= 0):
        raise ValueError("speed must be > 0")
    out = m.a + m.b / v + m.c * v + m.d * v * v
    return float(out) if out.ndim == 0 else out


def has_unique_minimum(m: FuelModel, domain: Box, n: int = 10_001) -> bool:
    """Numerically check that ``m`` is unimodal (decreasing then increasing) on ``domain``."""
    v = np.linspace(domain.lo[0], domain.hi[0], n)
    f = fuel_consumption(m, v)
    if not np.all(np.isfinite(f)):
        return False
    step = np.sign(np.diff(f))
    if np.any(step == 0):
        return False
    return int(np.count_nonzero(np.diff(step) != 0)) <= 1 and not (step[0] > 0 and step[-1] < 0)


@dataclass(frozen=True)
class FleetConfig:
    nominal: FuelModel = DEFAULT_NOMINAL
    n_vehicles: int = 7
    perturbation: float = 0.20
    domain: Box = field(default=DEFAULT_SPEED_DOMAIN)
    seed: int = 0

    def __post_init__(self):
        if self.n_vehicles < 1:
            raise ValueError("n_vehicles must be >= 1")
        if not 0 <= self.perturbation < 1:
            raise ValueError("perturbation must lie in [0, 1)")
        if self.domain.dim != 1 or not self.domain.lo[0] > 0:
            raise ValueError("speed domain must be a 1-D interval with positive lower bound")


def sample_fleet(cfg: FleetConfig) -> list[FuelModel]:
    """Draw ``n_vehicles`` models with every parameter uniform within ``±perturbation`` of nominal."""
    rng = np.random.default_rng(cfg.seed)
    nominal = np.array([cfg.nominal.a, cfg.nominal.b, cfg.nominal.c, cfg.nominal.d])
    ends = np.stack([(1 - cfg.perturbation) * nominal, (1 + cfg.perturbation) * nominal])
    lo, hi = ends.min(axis=0), ends.max(axis=0)
    fleet = []
    for i in range(cfg.n_vehicles):
        for _ in range(MAX_RESAMPLES):
            model = FuelModel(*(float(v) for v in rng.uniform(lo, hi)))
            if has_unique_minimum(model, cfg.domain):
                break
        else:
            raise ValueError(f"vehicle {i}: no unimodal model after {MAX_RESAMPLES} draws")
        fleet.append(model)
    return fleet


def platoon_cost(models: list[FuelModel], speed):
    return sum(fuel_consumption(m, speed) for m in models)


def true_platoon_optimum(models: list[FuelModel], domain: Box = DEFAULT_SPEED_DOMAIN) -> tuple[float, float]:
    """Common speed minimizing the summed consumption, and that minimum.

    Dense scan over a million nodes followed by golden-section refinement of
    the bracketing interval; resolution is far below ``1e-4`` km/h.
    """
    if not models:
        raise ValueError("need at least one model")
    grid = np.linspace(domain.lo[0], domain.hi[0], OPTIMUM_GRID_NODES)
    vals = platoon_cost(models, grid)
    i = int(np.argmin(vals))
    x, fx = float(grid[i]), float(vals[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    xr, fr = golden_section(lambda v: float(platoon_cost(models, v)), a, b, 1e-9 * (b - a + 1.0))
    if fr <= fx:
        x, fx = xr, fr
    return x, fx
