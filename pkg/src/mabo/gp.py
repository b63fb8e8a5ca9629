"""Gaussian-process regression with a squared-exponential kernel.

Posteriors are built from a Cholesky factor of the regularized training
covariance. Targets can optionally be standardized (constant prior mean equal
to the sample mean, unit sample variance); predictions are always returned on
the original target scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from mabo.box import Box
from mabo.errors import NumericalError

JITTER_START = 1e-10
JITTER_MAX = 1e-4
VARIANCE_CLAMP = 1e-10

_LOG_2PI = math.log(2.0 * math.pi)
_NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel hyperparameters."""

    signal_variance: float
    lengthscales: tuple[float, ...]
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be > 0")
        if not ls or not all(v > 0 for v in ls):
            raise ValueError("every lengthscale must be > 0")
        if not self.noise_variance >= 0:
            raise ValueError("noise_variance must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.lengthscales)


class Dataset:
    """Append-only list of ``(x, y)`` observations owned by one agent."""

    def __init__(self, domain: Box | None = None):
        self.domain = domain
        self._x: list[np.ndarray] = []
        self._y: list[float] = []

    def append(self, x, y) -> None:
        x = np.array(np.atleast_1d(x), dtype=float)
        y = float(y)
        if x.ndim != 1:
            raise ValueError("observation input must be a vector")
        if self._x and x.shape != self._x[0].shape:
            raise ValueError(f"dimension mismatch: expected {self._x[0].shape[0]}, got {x.shape[0]}")
        if self.domain is not None and not self.domain.contains(x):
            raise ValueError(f"point {x.tolist()} lies outside the domain")
        if not math.isfinite(y):
            raise NumericalError(f"non-finite observation {y} at {x.tolist()}")
        x.setflags(write=False)
        self._x.append(x)
        self._y.append(y)

    def copy(self) -> Dataset:
        other = Dataset(self.domain)
        other._x = list(self._x)
        other._y = list(self._y)
        return other

    def __len__(self) -> int:
        return len(self._y)

    @property
    def X(self) -> np.ndarray:
        if not self._x:
            return np.empty((0, 0))
        return np.stack(self._x)

    @property
    def y(self) -> np.ndarray:
        return np.array(self._y)


def se_kernel(x, x2, params: KernelParams) -> float:
    """Squared-exponential covariance between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.shape != (params.dim,):
        raise ValueError(f"dimension mismatch: {x.shape}, {x2.shape}, lengthscales={params.dim}")
    r = (x - x2) / np.asarray(params.lengthscales)
    return params.signal_variance * math.exp(-0.5 * float(r @ r))


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    """Dense SE kernel matrix between rows of ``A`` and rows of ``B``."""
    ls = np.asarray(params.lengthscales)
    if A.shape[1] != ls.size or B.shape[1] != ls.size:
        raise ValueError(f"dimension mismatch: inputs have {A.shape[1]}/{B.shape[1]} columns, "
                         f"lengthscales have {ls.size}")
    a, b = A / ls, B / ls
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(sq, 0.0, out=sq)
    return params.signal_variance * np.exp(-0.5 * sq)


def _factorize(K: np.ndarray, scale: float) -> tuple[np.ndarray, float]:
    jitter = JITTER_START * scale
    eye = np.eye(len(K))
    while True:
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            if jitter >= JITTER_MAX * scale * (1 - 1e-9):
                raise NumericalError(
                    f"Cholesky factorization failed with jitter {jitter:.3g}") from None
            jitter *= 10.0


def _targets(y: np.ndarray, normalize: bool) -> tuple[np.ndarray, float, float]:
    if not normalize:
        return y, 0.0, 1.0
    mean = float(y.mean())
    std = float(y.std())
    if not std > 1e-12 * max(1.0, abs(mean)):
        std = 1.0
    return (y - mean) / std, mean, std


@dataclass(frozen=True, eq=False)
class GPPosterior:
    """Fitted GP conditioned on a dataset; immutable after :func:`fit`."""

    params: KernelParams
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    y_mean: float = 0.0
    y_scale: float = 1.0

    @property
    def n(self) -> int:
        return len(self.y)


def fit(data: Dataset, params: KernelParams, normalize: bool = False) -> GPPosterior:
    """Condition a GP with the given hyperparameters on ``data``.

    With ``normalize=True`` the kernel hyperparameters refer to standardized
    targets and the prior mean is the sample mean of ``y``; otherwise the prior
    mean is zero.
    """
    if len(data) == 0:
        raise ValueError("cannot fit a GP to an empty dataset")
    X, y = data.X, data.y
    z, mean, scale = _targets(y, normalize)
    K = kernel_matrix(X, X, params)
    K[np.diag_indices_from(K)] += params.noise_variance
    chol, jitter = _factorize(K, params.signal_variance)
    alpha = cho_solve((chol, True), z)
    for arr in (X, y, chol, alpha):
        arr.setflags(write=False)
    return GPPosterior(params, X, y, chol, alpha, jitter, mean, scale)


def predict_batch(post: GPPosterior, Xq) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean and latent variance at each row of ``Xq``."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[1] != post.X.shape[1]:
        raise ValueError(f"dimension mismatch: query has {Xq.shape[1]} columns, "
                         f"training inputs have {post.X.shape[1]}")
    Ks = kernel_matrix(Xq, post.X, post.params)
    mean = Ks @ post.alpha
    v = solve_triangular(post.chol, Ks.T, lower=True, check_finite=False)
    var = post.params.signal_variance - np.einsum("ij,ij->j", v, v)
    floor = -VARIANCE_CLAMP * max(1.0, post.params.signal_variance)
    if np.any(var < floor):
        raise NumericalError(f"negative predictive variance {var.min():.3g}")
    np.maximum(var, 0.0, out=var)
    return mean * post.y_scale + post.y_mean, var * post.y_scale**2


def predict(post: GPPosterior, x) -> tuple[float, float]:
    """Predictive ``(mean, variance)`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("predict expects a single point; use predict_batch")
    m, v = predict_batch(post, x[None, :])
    return float(m[0]), float(v[0])


def log_marginal_likelihood(data: Dataset, params: KernelParams, normalize: bool = False) -> float:
    """Log evidence of the (optionally standardized) targets."""
    post = fit(data, params, normalize)
    return _lml(post)


def _lml(post: GPPosterior) -> float:
    z = (post.y - post.y_mean) / post.y_scale
    n = len(z)
    return float(-0.5 * z @ post.alpha - np.log(np.diag(post.chol)).sum() - 0.5 * n * _LOG_2PI)


def _lml_and_grad(X: np.ndarray, z: np.ndarray, theta: np.ndarray,
                  diff2: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    # theta = [log sf2, log ell_1..ell_d, log sn2]
    d = X.shape[1]
    sf2 = math.exp(theta[0])
    ls = np.exp(theta[1:1 + d])
    sn2 = math.exp(theta[-1])
    if diff2 is None:
        diff2 = (X[:, None, :] - X[None, :, :]) ** 2
    scaled = diff2 / ls**2
    Kf = sf2 * np.exp(-0.5 * scaled.sum(-1))
    K = Kf.copy()
    K[np.diag_indices_from(K)] += sn2
    L, _ = _factorize(K, sf2)
    alpha = cho_solve((L, True), z, check_finite=False)
    lml = -0.5 * z @ alpha - np.log(np.diag(L)).sum() - 0.5 * len(z) * _LOG_2PI
    Linv = solve_triangular(L, np.eye(len(z)), lower=True, check_finite=False)
    A = np.outer(alpha, alpha) - Linv.T @ Linv
    AK = A * Kf
    grad = np.empty_like(theta)
    grad[0] = 0.5 * AK.sum()
    grad[1:1 + d] = 0.5 * np.einsum("ij,ijk->k", AK, scaled)
    grad[-1] = 0.5 * sn2 * np.trace(A)
    return float(lml), grad


@dataclass(frozen=True)
class HyperBounds:
    """Search box for ML-II hyperparameter selection.

    ``lengthscale`` is a single ``(lo, hi)`` pair shared by all input
    dimensions. Setting ``lo == hi`` pins a parameter.
    """

    signal_variance: tuple[float, float] = (1e-2, 1e2)
    lengthscale: tuple[float, float] = (1e-2, 1e2)
    noise_variance: tuple[float, float] = (1e-8, 1e-1)

    def __post_init__(self):
        for name in ("signal_variance", "lengthscale", "noise_variance"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"empty bounds for {name}: ({lo}, {hi})")
            if name != "noise_variance" and lo <= 0:
                raise ValueError(f"{name} bounds must be positive")
            if lo < 0:
                raise ValueError("noise_variance bounds must be non-negative")
            object.__setattr__(self, name, (lo, hi))

    def log_box(self, dim: int) -> np.ndarray:
        rows = [self.signal_variance] + [self.lengthscale] * dim + [self.noise_variance]
        arr = np.array(rows, dtype=float)
        return np.log(np.maximum(arr, _NOISE_FLOOR))

    @classmethod
    def for_domain(cls, domain: Box) -> HyperBounds:
        """Defaults for standardized targets on ``domain``."""
        w = float(domain.width.min())
        return cls(lengthscale=(0.02 * w, 5.0 * w))


def _to_params(theta: np.ndarray, dim: int, bounds: HyperBounds) -> KernelParams:
    sn2 = math.exp(theta[-1])
    lo, hi = bounds.noise_variance
    return KernelParams(
        signal_variance=float(np.clip(math.exp(theta[0]), *bounds.signal_variance)),
        lengthscales=tuple(np.clip(np.exp(theta[1:1 + dim]), *bounds.lengthscale)),
        noise_variance=float(np.clip(sn2, lo, hi)),
    )


def _to_theta(params: KernelParams) -> np.ndarray:
    return np.log(np.array([params.signal_variance, *params.lengthscales,
                            max(params.noise_variance, _NOISE_FLOOR)]))


def optimize_hyperparameters(data: Dataset, bounds: HyperBounds, n_starts: int = 4, seed: int = 0,
                             normalize: bool = False,
                             initial: KernelParams | None = None) -> KernelParams:
    """Maximize the log marginal likelihood over ``bounds`` (ML-II).

    Runs bounded L-BFGS-B in log-parameter space from ``n_starts`` seeded
    random starts (plus ``initial`` when given). The best start point or local
    optimum is returned, so the result is never worse than any start.
    """
    if not isinstance(bounds, HyperBounds):
        raise ValueError("bounds must be a HyperBounds instance")
    if len(data) < 2:
        raise ValueError("hyperparameter optimization needs at least 2 points")
    X, y = data.X, data.y
    z, _, _ = _targets(y, normalize)
    dim = X.shape[1]
    box = bounds.log_box(dim)
    rng = np.random.default_rng(seed)

    starts = [box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(len(box)) for _ in range(n_starts)]
    if initial is not None:
        if initial.dim != dim:
            raise ValueError("initial params dimension does not match the data")
        starts.insert(0, np.clip(_to_theta(initial), box[:, 0], box[:, 1]))

    diff2 = (X[:, None, :] - X[None, :, :]) ** 2

    def objective(theta):
        try:
            val, grad = _lml_and_grad(X, z, theta, diff2)
        except NumericalError:
            return 1e25, np.zeros_like(theta)
        return -val, -grad

    best_theta, best_val = None, -np.inf
    for t0 in starts:
        candidates = [t0]
        res = minimize(objective, t0, jac=True, method="L-BFGS-B", bounds=box,
                       options={"maxiter": 100})
        candidates.append(np.clip(res.x, box[:, 0], box[:, 1]))
        for theta in candidates:
            try:
                val = log_marginal_likelihood(data, _to_params(theta, dim, bounds), normalize)
            except NumericalError:
                continue
            if val > best_val:
                best_theta, best_val = theta, val
    if best_theta is None:
        raise NumericalError("no start point produced a finite likelihood")
    return _to_params(best_theta, dim, bounds)
