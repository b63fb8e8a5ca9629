"""A local Bayesian-optimization agent.

An agent owns its observations and surrogate. It receives only the
coordinating variables (consensus point and its own dual) and hands back only
its latest decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from mabo.acquisition import AcquisitionSpec, PenaltyParams, minimize_penalized
from mabo.admm import STREAM_INITIAL_DATA, STREAM_NOISE, agent_rng, initial_point
from mabo.box import Box
from mabo.errors import NumericalError
from mabo.gp import Dataset, HyperBounds, KernelParams, fit, optimize_hyperparameters

Oracle = Callable[[np.ndarray], float]
HyperMode = Union[str, KernelParams]

DEFAULT_N0 = 3


@dataclass(frozen=True)
class Theta:
    """Coordinating variables sent to one agent."""

    x0: np.ndarray
    lambda_i: np.ndarray

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float)).copy()
        lam = np.atleast_1d(np.asarray(self.lambda_i, dtype=float)).copy()
        if x0.shape != lam.shape:
            raise ValueError("x0 and lambda_i must have the same dimension")
        x0.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "lambda_i", lam)


@dataclass
class AgentState:
    id: int
    domain: Box
    spec: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    inner_iters: int = 1
    hyper_mode: HyperMode = "refit"
    rng_seed: int = 0
    noise_std: float = 0.0
    hyper_bounds: HyperBounds | None = None
    n_restarts: int = 1
    data: Dataset = field(default=None)
    last_params: KernelParams | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if not (self.hyper_mode == "refit" or isinstance(self.hyper_mode, KernelParams)):
            raise ValueError("hyper_mode must be 'refit' or a KernelParams")
        if self.data is None:
            self.data = Dataset(self.domain)
        if self.hyper_bounds is None:
            self.hyper_bounds = HyperBounds.for_domain(self.domain)
        self._noise_rng = agent_rng(self.rng_seed, self.id, STREAM_NOISE)

    def initial_decision(self) -> np.ndarray:
        return initial_point(self.rng_seed, self.id, self.domain)

    def default_params(self) -> KernelParams:
        return KernelParams(1.0, tuple(0.2 * self.domain.width), 1e-4)

    def hyperparameters(self, data: Dataset) -> KernelParams:
        if isinstance(self.hyper_mode, KernelParams):
            return self.hyper_mode
        if len(data) < 2:
            return self.last_params or self.default_params()
        return optimize_hyperparameters(
            data, self.hyper_bounds, n_starts=self.n_restarts,
            seed=self.rng_seed * 1_000_003 + self.id * 7919 + len(data),
            normalize=True, initial=self.last_params or self.default_params())

    def observe(self, oracle: Oracle, x: np.ndarray) -> float:
        y = float(oracle(x))
        if not math.isfinite(y):
            raise NumericalError(f"oracle of agent {self.id} returned {y} at {x.tolist()}")
        if self.noise_std > 0:
            y += self.noise_std * float(self._noise_rng.standard_normal())
        return y


def seed_initial_data(agent: AgentState, oracle: Oracle, n0: int = DEFAULT_N0) -> AgentState:
    """Fill the agent's dataset with ``n0`` oracle evaluations at seeded uniform points."""
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    rng = agent_rng(agent.rng_seed, agent.id, STREAM_INITIAL_DATA)
    data = agent.data.copy()
    for x in agent.domain.uniform(rng, n0):
        data.append(x, agent.observe(oracle, x))
    agent.data = data
    return agent


def local_bo_round(agent: AgentState, theta: Theta, rho: float, oracle: Oracle) -> np.ndarray:
    """Run ``inner_iters`` penalized BO steps and return the last query point.

    The round is atomic: if anything fails, the agent's dataset, noise stream,
    and cached hyperparameters are left untouched.
    """
    if len(agent.data) == 0:
        raise ValueError(f"agent {agent.id} has no data; call seed_initial_data first")
    p = PenaltyParams(theta.lambda_i, theta.x0, rho)
    if p.x0.shape != (agent.domain.dim,):
        raise ValueError("theta dimension does not match the agent domain")
    data = agent.data.copy()
    rng_state = agent._noise_rng.bit_generator.state
    params = agent.last_params
    try:
        for _ in range(agent.inner_iters):
            params = agent.hyperparameters(data)
            post = fit(data, params, normalize=True)
            x = minimize_penalized(post, agent.spec, p, agent.domain)
            data.append(x, agent.observe(oracle, x))
    except BaseException:
        agent._noise_rng.bit_generator.state = rng_state
        raise
    agent.data = data
    if agent.hyper_mode == "refit":
        agent.last_params = params
    return x
