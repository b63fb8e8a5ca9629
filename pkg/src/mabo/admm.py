"""Consensus ADMM coordinator: consensus and dual updates, residuals, and the
full-model local subproblem used as a baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from mabo.acquisition import PenaltyParams, penalty_batch
from mabo.box import Box, minimize_on_box
from mabo.errors import NumericalError

# independent per-agent RNG streams: (run seed, agent id, stream)
STREAM_INITIAL_POINT = 0
STREAM_INITIAL_DATA = 1
STREAM_NOISE = 2


def agent_rng(seed: int, agent_id: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(agent_id), int(stream)])


def initial_point(seed: int, agent_id: int, domain: Box) -> np.ndarray:
    """Seeded uniform starting decision ``x_i^0`` for one agent."""
    return domain.uniform(agent_rng(seed, agent_id, STREAM_INITIAL_POINT))


@dataclass
class CoordinatorState:
    x0: np.ndarray
    x0_prev: np.ndarray
    lambdas: list[np.ndarray]
    rho: float
    n_agents: int = field(init=False)

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float)).copy()
        self.x0_prev = np.atleast_1d(np.asarray(self.x0_prev, dtype=float)).copy()
        self.lambdas = [np.atleast_1d(np.asarray(l, dtype=float)).copy() for l in self.lambdas]
        self.rho = float(self.rho)
        self.n_agents = len(self.lambdas)
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.n_agents < 1:
            raise ValueError("at least one agent is required")
        shapes = {self.x0.shape, self.x0_prev.shape, *(l.shape for l in self.lambdas)}
        if len(shapes) != 1:
            raise ValueError(f"inconsistent vector shapes {shapes}")

    @classmethod
    def initial(cls, n_agents: int, domain: Box, rho: float) -> CoordinatorState:
        """Zero duals and the consensus variable at the domain midpoint."""
        mid = domain.midpoint
        return cls(x0=mid, x0_prev=mid, lambdas=[np.zeros(domain.dim) for _ in range(n_agents)], rho=rho)


@dataclass(frozen=True)
class Residuals:
    primal: float
    dual: float


def _check_xs(state: CoordinatorState, xs: Sequence) -> list[np.ndarray]:
    if len(xs) != state.n_agents:
        raise ValueError(f"expected {state.n_agents} agent iterates, got {len(xs)}")
    xs = [np.atleast_1d(np.asarray(x, dtype=float)) for x in xs]
    for x in xs:
        if x.shape != state.x0.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {state.x0.shape}")
    return xs


def consensus_average(xs: Sequence[np.ndarray], lambdas: Sequence[np.ndarray], rho: float) -> np.ndarray:
    """``(1/N) sum_i (x_i + lambda_i / rho)``."""
    return np.mean([x + lam / rho for x, lam in zip(xs, lambdas)], axis=0)


def update_consensus(state: CoordinatorState, xs: Sequence) -> np.ndarray:
    """Move the consensus variable; the old value is kept in ``x0_prev``."""
    xs = _check_xs(state, xs)
    new = consensus_average(xs, state.lambdas, state.rho)
    state.x0_prev = state.x0
    state.x0 = new
    return new.copy()


def update_dual(lambda_i, x_i, x0, rho: float) -> np.ndarray:
    lambda_i = np.atleast_1d(np.asarray(lambda_i, dtype=float))
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not lambda_i.shape == x_i.shape == x0.shape:
        raise ValueError(f"dimension mismatch: {lambda_i.shape}, {x_i.shape}, {x0.shape}")
    return lambda_i + rho * (x_i - x0)


def primal_residual(xs: Sequence[np.ndarray], x0: np.ndarray) -> float:
    return float(sum(float((x - x0) @ (x - x0)) for x in xs))


def dual_residual(x0: np.ndarray, x0_prev: np.ndarray, n_agents: int, rho: float) -> float:
    dx = x0 - x0_prev
    return float(n_agents * rho**2 * (dx @ dx))


def residuals(state: CoordinatorState, xs: Sequence) -> Residuals:
    xs = _check_xs(state, xs)
    return Residuals(primal=primal_residual(xs, state.x0),
                     dual=dual_residual(state.x0, state.x0_prev, state.n_agents, state.rho))


def evaluate_model(f: Callable, X: np.ndarray) -> np.ndarray:
    """Evaluate a known cost at each row of ``X``.

    Objects exposing ``batch(X)`` are evaluated in one call; plain callables
    are called once per point.
    """
    if hasattr(f, "batch"):
        vals = np.asarray(f.batch(X), dtype=float)
    else:
        vals = np.array([float(f(x)) for x in X])
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"model returned {vals[i]} at {X[i].tolist()}")
    return vals


def model_based_subproblem(f: Callable, p: PenaltyParams, domain: Box) -> np.ndarray:
    """Exact-model local step: argmin over ``domain`` of ``f + penalty``."""
    return minimize_on_box(lambda X: evaluate_model(f, X) + penalty_batch(X, p), domain)
