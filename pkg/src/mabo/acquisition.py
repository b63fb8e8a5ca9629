"""Acquisition functions (minimization convention) and the ADMM coordination penalty."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from mabo.box import Box, minimize_on_box
from mabo.gp import GPPosterior, predict_batch

DEFAULT_BETA = 4.0
DEFAULT_XI = 0.01


class AcquisitionKind(str, enum.Enum):
    LCB = "LCB"
    EI = "EI"
    PI = "PI"
    GREEDY_MEAN = "GreedyMean"


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: AcquisitionKind = AcquisitionKind.LCB
    beta: float = DEFAULT_BETA
    xi: float = DEFAULT_XI

    def __post_init__(self):
        object.__setattr__(self, "kind", AcquisitionKind(self.kind))
        if self.kind is AcquisitionKind.LCB and not self.beta > 0:
            raise ValueError("beta must be > 0 for LCB")
        if not self.xi >= 0:
            raise ValueError("xi must be >= 0")


@dataclass(frozen=True)
class PenaltyParams:
    """Coordinating variables seen by one agent: its dual and the consensus point."""

    lambda_i: np.ndarray
    x0: np.ndarray
    rho: float

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambda_i, dtype=float))
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if lam.shape != x0.shape or lam.ndim != 1:
            raise ValueError(f"lambda_i {lam.shape} and x0 {x0.shape} must be vectors of equal length")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        object.__setattr__(self, "lambda_i", lam)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "rho", float(self.rho))


def evaluate_acquisition(spec: AcquisitionSpec, mean, std, f_best=math.nan):
    """Acquisition value(s); smaller is better.

    Accepts scalars or equal-shape arrays for ``mean`` and ``std``. EI and PI
    are returned negated so that every kind is minimized.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if np.any(std < 0):
        raise ValueError("std must be non-negative")
    kind = spec.kind
    if kind is AcquisitionKind.LCB:
        out = mean - math.sqrt(spec.beta) * std
    elif kind is AcquisitionKind.GREEDY_MEAN:
        out = mean + 0.0 * std
    else:
        if not math.isfinite(f_best):
            raise ValueError("EI/PI need a finite incumbent f_best")
        improve = f_best - mean - spec.xi
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            z = np.where(std > 0, improve / np.where(std > 0, std, 1.0),
                         np.where(improve > 0, np.inf, -np.inf))
            if kind is AcquisitionKind.PI:
                out = -norm.cdf(z)
            else:
                ei = np.where(std > 0, improve * norm.cdf(z) + std * norm.pdf(z), np.maximum(improve, 0.0))
                out = -ei
    return float(out) if out.ndim == 0 else out


def penalty(x, p: PenaltyParams) -> float:
    """Coordination penalty ``lambda_i . x + rho/2 ||x - x0||^2``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != p.x0.shape:
        raise ValueError(f"dimension mismatch: x {x.shape}, x0 {p.x0.shape}")
    dx = x - p.x0
    return float(p.lambda_i @ x + 0.5 * p.rho * (dx @ dx))


def penalty_batch(X: np.ndarray, p: PenaltyParams) -> np.ndarray:
    X = np.atleast_2d(X)
    if X.shape[1] != p.x0.size:
        raise ValueError(f"dimension mismatch: points have {X.shape[1]} columns, x0 has {p.x0.size}")
    dx = X - p.x0
    return X @ p.lambda_i + 0.5 * p.rho * np.einsum("ij,ij->i", dx, dx)


def penalty_minimizer(p: PenaltyParams, domain: Box) -> np.ndarray:
    """Domain-clipped minimizer of the penalty alone, ``x0 - lambda_i / rho``."""
    return domain.clip(p.x0 - p.lambda_i / p.rho)


def minimize_penalized(post: GPPosterior, spec: AcquisitionSpec, p: PenaltyParams, domain: Box,
                       f_best: float | None = None) -> np.ndarray:
    """Next query point: argmin over ``domain`` of acquisition + penalty.

    ``f_best`` defaults to the smallest observed target in the posterior's
    training data.
    """
    if f_best is None:
        f_best = float(post.y.min())

    def objective(X):
        m, v = predict_batch(post, X)
        return evaluate_acquisition(spec, m, np.sqrt(v), f_best) + penalty_batch(X, p)

    return minimize_on_box(objective, domain)
