"""Synchronous ADMM rounds over concurrently running agents.

The coordinator and the agents talk exclusively through :class:`Message`
objects carrying either a :class:`~mabo.agent.Theta` (coordinator to agent) or
a :class:`Decision` (agent to coordinator). Every message is appended to the
run's message log. The trace additionally taps each agent's newest
observation for analysis; that tap never feeds back into coordination.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from mabo import admm
from mabo.acquisition import AcquisitionSpec, PenaltyParams
from mabo.agent import DEFAULT_N0, AgentState, HyperMode, Oracle, Theta, local_bo_round, seed_initial_data
from mabo.box import Box

DEFAULT_RHO = 10.0
DEFAULT_MAX_ADMM_ITERS = 30


class RunError(RuntimeError):
    """An agent round failed; carries the ADMM iteration and agent id."""

    def __init__(self, k: int, agent_id: int, cause: BaseException):
        super().__init__(f"iteration {k}, agent {agent_id}: {type(cause).__name__}: {cause}")
        self.k = k
        self.agent_id = agent_id


@dataclass
class RunConfig:
    n_agents: int
    domain: Box
    rho: float = DEFAULT_RHO
    max_admm_iters: int = DEFAULT_MAX_ADMM_ITERS
    specs: list[AcquisitionSpec] | None = None
    inner_iters: list[int] | int = 1
    n0: int = DEFAULT_N0
    seed: int = 0
    noise_std: float = 0.0
    hyper_mode: HyperMode = "refit"
    agent_keys: list[int] | None = None
    parallel: bool = True

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.max_admm_iters < 1:
            raise ValueError("max_admm_iters must be >= 1")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.specs is None:
            self.specs = [AcquisitionSpec() for _ in range(self.n_agents)]
        if isinstance(self.inner_iters, int):
            self.inner_iters = [self.inner_iters] * self.n_agents
        if len(self.specs) != self.n_agents or len(self.inner_iters) != self.n_agents:
            raise ValueError("per-agent lists must have n_agents entries")
        if any(j < 1 for j in self.inner_iters):
            raise ValueError("inner_iters must be >= 1")
        # keys name each agent's RNG streams, so a permuted config permutes behaviour too
        if self.agent_keys is None:
            self.agent_keys = list(range(self.n_agents))
        if len(self.agent_keys) != self.n_agents or len(set(self.agent_keys)) != self.n_agents:
            raise ValueError("agent_keys must hold n_agents distinct integers")


@dataclass(frozen=True)
class Decision:
    x: np.ndarray


@dataclass(frozen=True)
class Message:
    k: int
    agent_id: int
    payload: Theta | Decision

    @property
    def direction(self) -> str:
        return "to_agent" if isinstance(self.payload, Theta) else "to_coordinator"


@dataclass(frozen=True)
class IterationRecord:
    k: int
    x0: np.ndarray
    x0_prev: np.ndarray
    xs: np.ndarray
    lambdas: np.ndarray
    primal: float
    dual: float
    y_latest: np.ndarray


@dataclass
class RunTrace:
    rho: float
    x0_init: np.ndarray
    xs_init: np.ndarray
    lambdas_init: np.ndarray
    records: list[IterationRecord] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list, repr=False)

    @property
    def n_agents(self) -> int:
        return self.xs_init.shape[0]

    @property
    def final(self) -> np.ndarray:
        """Best consensus estimate: the last consensus variable."""
        return self.records[-1].x0 if self.records else self.x0_init

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


class AgentWorker:
    """Owns one agent and its oracle; answers Theta messages with Decisions."""

    def __init__(self, state: AgentState, oracle: Oracle, rho: float):
        self._state = state
        self._oracle = oracle
        self._rho = rho

    @property
    def agent_id(self) -> int:
        return self._state.id

    def start(self, n0: int) -> Decision:
        seed_initial_data(self._state, self._oracle, n0)
        return Decision(self._state.initial_decision())

    def handle(self, theta: Theta) -> Decision:
        return Decision(local_bo_round(self._state, theta, self._rho, self._oracle))

    def latest_observation(self) -> float:
        # monitoring tap for the trace only
        return float(self._state.data.y[-1])


class ModelWorker:
    """Full-model counterpart of :class:`AgentWorker` for the baseline run."""

    def __init__(self, agent_id: int, model: Callable, domain: Box, rho: float, seed: int):
        self.agent_id = agent_id
        self._model = model
        self._domain = domain
        self._rho = rho
        self._seed = seed
        self._last = None

    def start(self, n0: int) -> Decision:
        return Decision(admm.initial_point(self._seed, self.agent_id, self._domain))

    def handle(self, theta: Theta) -> Decision:
        p = PenaltyParams(theta.lambda_i, theta.x0, self._rho)
        x = admm.model_based_subproblem(self._model, p, self._domain)
        self._last = float(admm.evaluate_model(self._model, x[None, :])[0])
        return Decision(x)

    def latest_observation(self) -> float:
        return self._last


def _round(workers, payloads, k, pool, log, method):
    for w, p in zip(workers, payloads):
        if isinstance(p, Theta):
            log.append(Message(k, w.agent_id, p))

    def call(w, p):
        try:
            return getattr(w, method)(p)
        except Exception as exc:
            raise RunError(k, w.agent_id, exc) from exc

    if pool is None:
        replies = [call(w, p) for w, p in zip(workers, payloads)]
    else:
        futures = [pool.submit(call, w, p) for w, p in zip(workers, payloads)]
        replies = [f.result() for f in futures]
    for w, r in zip(workers, replies):
        log.append(Message(k, w.agent_id, r))
    return [r.x for r in replies]


def _coordinate(config: RunConfig, workers) -> RunTrace:
    n, rho = config.n_agents, config.rho
    state = admm.CoordinatorState.initial(n, config.domain, rho)
    log: list[Message] = []
    pool = ThreadPoolExecutor(max_workers=n) if config.parallel and n > 1 else None
    try:
        xs = _round(workers, [config.n0] * n, 0, pool, log, "start")
        trace = RunTrace(rho=rho, x0_init=state.x0.copy(), xs_init=np.array(xs),
                         lambdas_init=np.array(state.lambdas), messages=log)
        for k in range(1, config.max_admm_iters + 1):
            x0 = admm.update_consensus(state, xs)
            thetas = [Theta(x0, lam) for lam in state.lambdas]
            xs = _round(workers, thetas, k, pool, log, "handle")
            state.lambdas = [admm.update_dual(lam, x, x0, rho) for lam, x in zip(state.lambdas, xs)]
            res = admm.residuals(state, xs)
            trace.records.append(IterationRecord(
                k=k, x0=state.x0.copy(), x0_prev=state.x0_prev.copy(), xs=np.array(xs),
                lambdas=np.array(state.lambdas), primal=res.primal, dual=res.dual,
                y_latest=np.array([w.latest_observation() for w in workers])))
    finally:
        if pool is not None:
            pool.shutdown()
    return trace


def run_mabo(config: RunConfig, oracles: Sequence[Oracle]) -> RunTrace:
    """Multi-agent BO: consensus update, broadcast, local BO rounds, dual updates."""
    if len(oracles) != config.n_agents:
        raise ValueError(f"expected {config.n_agents} oracles, got {len(oracles)}")
    workers = [
        AgentWorker(AgentState(id=config.agent_keys[i], domain=config.domain, spec=config.specs[i],
                               inner_iters=config.inner_iters[i], hyper_mode=config.hyper_mode,
                               rng_seed=config.seed, noise_std=config.noise_std),
                    oracles[i], config.rho)
        for i in range(config.n_agents)
    ]
    return _coordinate(config, workers)


def run_model_based_admm(config: RunConfig, models: Sequence[Callable]) -> RunTrace:
    """Same loop with each local BO round replaced by the exact-model subproblem."""
    if len(models) != config.n_agents:
        raise ValueError(f"expected {config.n_agents} models, got {len(models)}")
    workers = [ModelWorker(config.agent_keys[i], models[i], config.domain, config.rho, config.seed)
               for i in range(config.n_agents)]
    return _coordinate(config, workers)
