"""Independent reference computations used by the tests.

Nothing here imports the code paths under test beyond plain data types.
"""

import math

import numpy as np


def se_loop(x, x2, sf2, ls):
    s = 0.0
    for a, b, l in zip(np.atleast_1d(x), np.atleast_1d(x2), np.atleast_1d(ls)):
        s += ((a - b) / l) ** 2
    return sf2 * math.exp(-0.5 * s)


def dense_gp_predict(X, y, xq, sf2, ls, sn2, jitter=0.0, prior_mean=0.0):
    """Textbook GP prediction with an explicit matrix inverse."""
    n = len(X)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = se_loop(X[i], X[j], sf2, ls)
    Kinv = np.linalg.inv(K + (sn2 + jitter) * np.eye(n))
    k = np.array([se_loop(xq, X[i], sf2, ls) for i in range(n)])
    mean = prior_mean + k @ Kinv @ (np.asarray(y) - prior_mean)
    var = sf2 - k @ Kinv @ k
    return mean, var


def dense_gaussian_logpdf(y, cov):
    n = len(y)
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return float(-0.5 * y @ np.linalg.inv(cov) @ y - 0.5 * logdet - 0.5 * n * math.log(2 * math.pi))


def monte_carlo_ei_pi(mean, std, f_best, xi, n=10_000_000, seed=0):
    """Return (EI, PI, stderr_EI, stderr_PI) by sampling Y ~ N(mean, std^2)."""
    rng = np.random.default_rng(seed)
    y = mean + std * rng.standard_normal(n)
    imp = np.maximum(f_best - xi - y, 0.0)
    ind = (f_best - xi - y > 0).astype(float)
    return imp.mean(), ind.mean(), imp.std() / math.sqrt(n), ind.std() / math.sqrt(n)


def brute_grid_argmin(f, lo, hi, n=1_000_001):
    g = np.linspace(lo, hi, n)
    v = f(g)
    i = int(np.argmin(v))
    return float(g[i]), (hi - lo) / (n - 1)


def reference_admm(grads_curv, x_init, rho, iters):
    """Consensus ADMM for scalar quadratics f_i = (x - c_i)^2 in closed form.

    ``grads_curv`` is a list of centers ``c_i``; each local step solves
    2(x - c) + lam + rho (x - x0) = 0 exactly (unconstrained).
    """
    xs = np.array(x_init, dtype=float)
    lam = np.zeros_like(xs)
    prev = None
    out = []
    for _ in range(iters):
        x0 = np.mean(xs + lam / rho)
        xs = np.array([(2 * c + rho * x0 - l) / (2 + rho) for c, l in zip(grads_curv, lam)])
        lam = lam + rho * (xs - x0)
        r = float(np.sum((xs - x0) ** 2))
        s = float(len(xs) * rho**2 * (x0 - prev) ** 2) if prev is not None else math.nan
        prev = x0
        out.append((x0, r, s))
    return out
