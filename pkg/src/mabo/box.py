"""Box domains and the derivative-free minimizer used for every inner solve.

All objectives handed to :func:`minimize_on_box` are *batch* functions: they
take an ``(m, d)`` array of points and return ``m`` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from mabo.errors import NumericalError

BatchObjective = Callable[[np.ndarray], np.ndarray]

GRID_NODES_1D = 2001
REFINE_TOL = 1e-6
N_LHS_STARTS = 32
MAX_DIM = 3

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi]`` in ``R^d``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be non-empty and of equal length")
        if not all(np.isfinite(lo + hi)):
            raise ValueError("box bounds must be finite")
        if any(l > h for l, h in zip(lo, hi)):
            raise ValueError(f"empty box: lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_bounds(cls, bounds) -> Box:
        """Build from ``[lo, hi]`` (1-D) or ``[[lo, hi], ...]``."""
        arr = np.asarray(bounds, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("bounds must be [lo, hi] or a list of [lo, hi] pairs")
        return cls(tuple(arr[:, 0]), tuple(arr[:, 1]))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def upper(self) -> np.ndarray:
        return np.array(self.hi)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def uniform(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        shape = (self.dim,) if n is None else (n, self.dim)
        return self.lower + self.width * rng.random(shape)

    def grid_nodes_per_dim(self) -> int:
        if self.dim == 1:
            return GRID_NODES_1D
        return max(3, int(round(GRID_NODES_1D ** (1.0 / self.dim))))

    def grid(self) -> np.ndarray:
        """Dense equispaced grid as an ``(m, d)`` array."""
        n = self.grid_nodes_per_dim()
        axes = [np.linspace(l, h, n) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell(self) -> np.ndarray:
        """Grid spacing along each dimension."""
        return self.width / (self.grid_nodes_per_dim() - 1)


def golden_section(fun: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section search for a minimum of a unimodal ``fun`` on ``[a, b]``.

    Returns the midpoint of the final bracket and its function value.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def _pattern_search(fun: BatchObjective, box: Box, x: np.ndarray, fx: float,
                    step0: float = 0.1, max_polls: int = 400) -> tuple[np.ndarray, float]:
    # compass poll along each coordinate, halving the step on failure
    lo, hi, width = box.lower, box.upper, box.width
    step = step0 * width
    tol = REFINE_TOL * width
    eye = np.eye(box.dim)
    for _ in range(max_polls):
        if np.all(step < tol):
            break
        cand = np.concatenate([x + eye * step, x - eye * step])
        cand = np.clip(cand, lo, hi)
        vals = np.asarray(fun(cand), dtype=float)
        j = int(np.argmin(vals))
        if vals[j] < fx:
            x, fx = cand[j], float(vals[j])
        else:
            step = step / 2.0
    return x, fx


def minimize_on_box(fun: BatchObjective, box: Box) -> np.ndarray:
    """Minimize a batch objective over ``box``.

    A dense grid is scanned first. In one dimension the bracket around the
    best node is refined by golden-section search down to ``1e-6`` of the
    domain width; for ``d <= 3`` a compass pattern search is run from the
    best node and from 32 Latin-hypercube starts. The returned point is never
    worse than the best grid node.
    """
    if box.dim > MAX_DIM:
        raise ValueError(f"box minimizer supports d <= {MAX_DIM}, got d={box.dim}")
    nodes = box.grid()
    vals = np.asarray(fun(nodes), dtype=float)
    if vals.shape != (len(nodes),):
        raise ValueError("batch objective returned the wrong shape")
    if np.any(np.isnan(vals)):
        bad = nodes[int(np.flatnonzero(np.isnan(vals))[0])]
        raise NumericalError(f"objective is NaN at {bad.tolist()}")
    i = int(np.argmin(vals))
    best_x, best_f = nodes[i], float(vals[i])

    if box.dim == 1:
        grid = nodes[:, 0]
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, len(grid) - 1)]
        if b > a:
            x, fx = golden_section(lambda t: float(fun(np.array([[t]]))[0]), a, b,
                                   REFINE_TOL * float(box.width[0]))
            if fx <= best_f:
                best_x, best_f = np.array([x]), fx
        return np.array(best_x, dtype=float)

    starts = [(best_x, best_f)]
    lhs = qmc.LatinHypercube(d=box.dim, seed=0).random(N_LHS_STARTS)
    lhs = box.lower + lhs * box.width
    lhs_vals = np.asarray(fun(lhs), dtype=float)
    starts += [(p, float(v)) for p, v in zip(lhs, lhs_vals)]
    for x, fx in starts:
        x, fx = _pattern_search(fun, box, np.array(x, dtype=float), fx)
        if fx < best_f:
            best_x, best_f = x, fx
    return box.clip(best_x)
