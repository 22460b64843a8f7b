"""Hot numeric kernels with two interchangeable backends.

The driving-error recursion below runs millions of times during an order
grid search (every likelihood evaluation, every finite-difference gradient
probe), so it is compiled with numba when available.  A pure numpy/scipy
path implements the identical recursion via linear filters; it is selected
automatically when numba is missing, or forced with::

    FORUMPULSE_NO_NUMBA=1

Both backends satisfy: e[t] = y[t] - mu - gamma*x[t]
                              - sum_i ar[i] * y[t-1-i]
                              - sum_j ma[j] * e[t-1-j]
with every out-of-range y and e term taken as zero (conditional recursion
started from a zero pre-sample).
"""

from __future__ import annotations

import os

import numpy as np
from scipy.signal import lfilter

_FLAG = os.environ.get("FORUMPULSE_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAS_NUMBA = False


def residuals_numpy(
    y: np.ndarray, mu: float, ar: np.ndarray, ma: np.ndarray, gamma: float, x: np.ndarray
) -> np.ndarray:
    """Linear-filter form of the recursion; bit-for-bit it can differ from the
    loop form at rounding level only."""
    y = np.asarray(y, dtype=np.float64)
    v = y - mu - gamma * np.asarray(x, dtype=np.float64)
    if ar.size:
        v = v - lfilter(np.concatenate(([0.0], ar)), [1.0], y)
    if ma.size:
        v = lfilter([1.0], np.concatenate(([1.0], ma)), v)
    return v


def _residuals_loop(y, mu, ar, ma, gamma, x):
    n = y.shape[0]
    p = ar.shape[0]
    q = ma.shape[0]
    e = np.empty(n, dtype=np.float64)
    for t in range(n):
        acc = y[t] - mu - gamma * x[t]
        for i in range(p):
            k = t - 1 - i
            if k >= 0:
                acc -= ar[i] * y[k]
        for j in range(q):
            k = t - 1 - j
            if k >= 0:
                acc -= ma[j] * e[k]
        e[t] = acc
    return e


def _negloglik_loop(y, mu, ar, ma, gamma, x):
    n = y.shape[0]
    p = ar.shape[0]
    q = ma.shape[0]
    e = np.empty(n, dtype=np.float64)
    sse = 0.0
    for t in range(n):
        acc = y[t] - mu - gamma * x[t]
        for i in range(p):
            k = t - 1 - i
            if k >= 0:
                acc -= ar[i] * y[k]
        for j in range(q):
            k = t - 1 - j
            if k >= 0:
                acc -= ma[j] * e[k]
        e[t] = acc
        sse += acc * acc
    if not np.isfinite(sse) or sse <= 0.0:
        return np.inf
    sigma2 = sse / n
    return 0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0)


def negloglik_numpy(y, mu, ar, ma, gamma, x):
    e = residuals_numpy(y, mu, ar, ma, gamma, x)
    sse = float(np.dot(e, e))
    if not np.isfinite(sse) or sse <= 0.0:
        return np.inf
    n = y.shape[0]
    sigma2 = sse / n
    return 0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0)


def grad_negloglik_numpy(y, mu, ar, ma, gamma, x, has_exog, step):
    """Central-difference gradient of negloglik in the parameter order
    (mu, ar..., ma..., gamma?).  One call replaces 2*dim likelihood calls
    from the optimizer's side, which matters because the per-call overhead
    would otherwise dominate the kernel itself."""
    p = ar.shape[0]
    q = ma.shape[0]
    dim = 1 + p + q + (1 if has_exog else 0)
    g = np.empty(dim, dtype=np.float64)
    two = 2.0 * step
    g[0] = (
        negloglik_numpy(y, mu + step, ar, ma, gamma, x)
        - negloglik_numpy(y, mu - step, ar, ma, gamma, x)
    ) / two
    art = ar.copy()
    for i in range(p):
        base = art[i]
        art[i] = base + step
        hi = negloglik_numpy(y, mu, art, ma, gamma, x)
        art[i] = base - step
        lo = negloglik_numpy(y, mu, art, ma, gamma, x)
        art[i] = base
        g[1 + i] = (hi - lo) / two
    mat = ma.copy()
    for j in range(q):
        base = mat[j]
        mat[j] = base + step
        hi = negloglik_numpy(y, mu, ar, mat, gamma, x)
        mat[j] = base - step
        lo = negloglik_numpy(y, mu, ar, mat, gamma, x)
        mat[j] = base
        g[1 + p + j] = (hi - lo) / two
    if has_exog:
        g[dim - 1] = (
            negloglik_numpy(y, mu, ar, ma, gamma + step, x)
            - negloglik_numpy(y, mu, ar, ma, gamma - step, x)
        ) / two
    return g


if HAS_NUMBA:
    residuals_numba = njit(cache=True)(_residuals_loop)
    negloglik_numba = njit(cache=True)(_negloglik_loop)

    @njit(cache=True)
    def grad_negloglik_numba(y, mu, ar, ma, gamma, x, has_exog, step):
        p = ar.shape[0]
        q = ma.shape[0]
        dim = 1 + p + q + (1 if has_exog else 0)
        g = np.empty(dim, dtype=np.float64)
        two = 2.0 * step
        g[0] = (
            negloglik_numba(y, mu + step, ar, ma, gamma, x)
            - negloglik_numba(y, mu - step, ar, ma, gamma, x)
        ) / two
        art = ar.copy()
        for i in range(p):
            base = art[i]
            art[i] = base + step
            hi = negloglik_numba(y, mu, art, ma, gamma, x)
            art[i] = base - step
            lo = negloglik_numba(y, mu, art, ma, gamma, x)
            art[i] = base
            g[1 + i] = (hi - lo) / two
        mat = ma.copy()
        for j in range(q):
            base = mat[j]
            mat[j] = base + step
            hi = negloglik_numba(y, mu, ar, mat, gamma, x)
            mat[j] = base - step
            lo = negloglik_numba(y, mu, ar, mat, gamma, x)
            mat[j] = base
            g[1 + p + j] = (hi - lo) / two
        if has_exog:
            g[dim - 1] = (
                negloglik_numba(y, mu, ar, ma, gamma + step, x)
                - negloglik_numba(y, mu, ar, ma, gamma - step, x)
            ) / two
        return g

else:
    residuals_numba = None
    negloglik_numba = None
    grad_negloglik_numba = None

USE_NUMBA = HAS_NUMBA and not NUMBA_DISABLED

# The profiled-sigma2 negative log-likelihood on the active backend.  Inputs
# must already be contiguous float64; optimizer inner loops call this without
# any conversion or validation overhead.
negloglik = negloglik_numba if USE_NUMBA else negloglik_numpy
grad_negloglik = grad_negloglik_numba if USE_NUMBA else grad_negloglik_numpy


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def residuals(
    y: np.ndarray, mu: float, ar: np.ndarray, ma: np.ndarray, gamma: float, x: np.ndarray
) -> np.ndarray:
    """Driving-error recursion on the active backend.

    y is the (already differenced) observation vector; ar/ma are coefficient
    arrays ordered by increasing back-shift; x is the exogenous vector (pass
    zeros with gamma 0.0 when unused).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    ar = np.ascontiguousarray(ar, dtype=np.float64)
    ma = np.ascontiguousarray(ma, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("exogenous vector must match the observation vector")
    if USE_NUMBA:
        return residuals_numba(y, float(mu), ar, ma, float(gamma), x)
    return residuals_numpy(y, float(mu), ar, ma, float(gamma), x)


def warmup() -> None:
    """Trigger JIT compilation outside any timed region."""
    if USE_NUMBA:
        y = np.zeros(8)
        residuals_numba(y, 0.0, np.array([0.1]), np.array([0.1]), 0.0, y)
        negloglik_numba(y + 1.0, 0.0, np.array([0.1]), np.array([0.1]), 0.0, y)
        grad_negloglik_numba(
            y + 1.0, 0.0, np.array([0.1]), np.array([0.1]), 0.0, y, False, 1e-6
        )
