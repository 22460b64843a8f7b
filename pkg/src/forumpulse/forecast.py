"""Autoregressive forecasting of daily event counts, with optional exogenous
sentiment, plus rate baselines and discrete warning emission.

The model on the d-times differenced series y' is

    y'_t = mu + sum_i ar_i * y'_{t-i} + sum_j ma_j * e_{t-j} + gamma * x_t + e_t

with e_t ~ N(0, sigma2).  The likelihood is conditional: pre-sample values of
y' and e are zero, every residual is kept, and sigma2 is profiled out as the
mean squared residual.  Orders are chosen by minimum AIC over a (p, d, q)
grid; optimization is quasi-Newton with central finite-difference gradients.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import _kernels

log = logging.getLogger(__name__)

GRADIENT_STEP = 1e-6
MAX_ITERATIONS = 500
STEP_TOLERANCE = 1e-8


class DegenerateSeries(ValueError):
    """A series the likelihood cannot be evaluated on (no variance left)."""


class FitError(RuntimeError):
    """Optimization failed; .best carries the best model found, if any."""

    def __init__(self, message: str, best: Optional["FittedModel"] = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class ModelOrder:
    p: int
    d: int
    q: int

    def __post_init__(self) -> None:
        if self.p < 0 or self.d < 0 or self.q < 0:
            raise ValueError(f"order components must be non-negative, got {self}")

    def __str__(self) -> str:  # (p,d,q) reads better in reports than repr
        return f"({self.p},{self.d},{self.q})"


# ---------------------------------------------------------------------------
# differencing


def difference(y: np.ndarray, d: int) -> np.ndarray:
    """d-th order differences; length shrinks by d."""
    out = np.asarray(y, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be >= 0")
    if d >= out.size:
        raise ValueError(f"cannot difference length {out.size} series {d} times")
    for _ in range(d):
        out = out[1:] - out[:-1]
    return out


def integrate(fc: np.ndarray, history: np.ndarray, d: int) -> np.ndarray:
    """Undo d-th order differencing for a forecast continuation of history.

    fc holds consecutive d-th differences that continue difference(history, d);
    the return value continues history on the original scale.
    """
    out = np.asarray(fc, dtype=np.float64)
    hist = np.asarray(history, dtype=np.float64)
    if d >= hist.size and d > 0:
        raise ValueError("history too short to anchor integration")
    for k in range(d, 0, -1):
        anchor = difference(hist, k - 1)[-1]
        out = anchor + np.cumsum(out)
    return out


# ---------------------------------------------------------------------------
# conditional likelihood


def css_loglik(
    y_diff: np.ndarray,
    mu: float,
    ar: Sequence[float],
    ma: Sequence[float],
    gamma: float = 0.0,
    x: Optional[np.ndarray] = None,
) -> Tuple[float, float, np.ndarray]:
    """Gaussian conditional log-likelihood with sigma2 profiled out.

    Returns (loglik, sigma2, residuals).  Raises DegenerateSeries when the
    residual variance collapses to zero and ValueError on non-finite
    intermediates (callers doing optimization treat that as -inf).
    """
    y_diff = np.asarray(y_diff, dtype=np.float64)
    n = y_diff.size
    if n == 0:
        raise ValueError("empty series")
    ar_arr = np.asarray(ar, dtype=np.float64)
    ma_arr = np.asarray(ma, dtype=np.float64)
    x_arr = np.zeros(n) if x is None else np.asarray(x, dtype=np.float64)
    e = _kernels.residuals(y_diff, mu, ar_arr, ma_arr, gamma, x_arr)
    sse = float(np.dot(e, e))
    if not math.isfinite(sse):
        raise ValueError("non-finite residuals")
    sigma2 = sse / n
    if sigma2 <= 0.0:
        raise DegenerateSeries("residual variance collapsed to zero")
    loglik = -0.5 * n * math.log(2.0 * math.pi * sigma2) - sse / (2.0 * sigma2)
    return loglik, sigma2, e


def aic(k: int, loglik: float) -> float:
    return 2.0 * k - 2.0 * loglik


def _ar_excess(ar: np.ndarray) -> float:
    """0 when the AR polynomial 1 - sum ar_i z^i has all roots outside the
    unit circle; otherwise how far inside the worst root sits."""
    if ar.size == 0 or not np.any(ar):
        return 0.0
    # sum |ar_i| < 1 guarantees no root on or inside the unit circle; the
    # eigenvalue check below only runs when that cheap bound is inconclusive
    if float(np.abs(ar).sum()) < 1.0:
        return 0.0
    poly = np.concatenate((-ar[::-1], [1.0]))
    roots = np.roots(poly)
    if roots.size == 0:
        return 0.0
    moduli = np.abs(roots)
    excess = np.maximum(0.0, 1.0 + 1e-9 - moduli)
    return float(excess.sum())


def _ar_margin(ar: np.ndarray) -> float:
    """Smallest AR root modulus, or a value safely above 1 when the cheap
    sufficient bound already proves the point is well inside the stationary
    region.  Used to decide whether finite-difference probes around a point
    can cross the rejection boundary."""
    if ar.size == 0 or not np.any(ar):
        return math.inf
    if float(np.abs(ar).sum()) < 1.0 - 1e-6:
        return 2.0
    poly = np.concatenate((-ar[::-1], [1.0]))
    roots = np.roots(poly)
    if roots.size == 0:
        return math.inf
    return float(np.abs(roots).min())


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FittedModel:
    order: ModelOrder
    mu: float
    ar: Tuple[float, ...]
    ma: Tuple[float, ...]
    gamma: Optional[float]  # None when fit without exogenous input
    sigma2: float
    loglik: float
    aic: float
    k_params: int
    n_obs: int              # length of the differenced sample
    residuals: np.ndarray
    converged: bool

    @property
    def has_exog(self) -> bool:
        return self.gamma is not None


def _unpack(theta: np.ndarray, p: int, q: int, exog: bool):
    mu = theta[0]
    ar = theta[1 : 1 + p]
    ma = theta[1 + p : 1 + p + q]
    gamma = theta[1 + p + q] if exog else 0.0
    return mu, ar, ma, gamma


def _central_gradient(fun, theta: np.ndarray, step: float = GRADIENT_STEP) -> np.ndarray:
    grad = np.empty_like(theta)
    for i in range(theta.size):
        probe = theta.copy()
        probe[i] = theta[i] + step
        hi = fun(probe)
        probe[i] = theta[i] - step
        lo = fun(probe)
        grad[i] = (hi - lo) / (2.0 * step)
    return grad


def _ols_start(y: np.ndarray, p: int, q: int, x: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Least-squares AR warm start (MA terms start at zero)."""
    n = y.size
    if n <= p + 2:
        return None
    rows = n - p
    cols: List[np.ndarray] = [np.ones(rows)]
    for i in range(1, p + 1):
        cols.append(y[p - i : n - i])
    if x is not None:
        cols.append(x[p:])
    design = np.column_stack(cols)
    try:
        coef, *_ = np.linalg.lstsq(design, y[p:], rcond=None)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(coef)):
        return None
    theta = np.zeros(1 + p + q + (1 if x is not None else 0))
    theta[0] = coef[0]
    theta[1 : 1 + p] = coef[1 : 1 + p]
    if x is not None:
        theta[1 + p + q] = coef[-1]
    return theta


def fit(
    y: np.ndarray,
    order: ModelOrder,
    x: Optional[np.ndarray] = None,
    max_iter: int = MAX_ITERATIONS,
) -> FittedModel:
    """Fit one model by maximizing the conditional likelihood.

    y is the raw (undifferenced) series; x, when given, must align with y
    one-to-one (it is trimmed by d alongside y).  Two starts are tried: all
    zeros around the sample mean, and a least-squares AR warm start.  AR
    parameter points whose characteristic roots fall inside the unit circle
    are rejected outright (infinite objective).
    """
    y = np.asarray(y, dtype=np.float64)
    p, d, q = order.p, order.d, order.q
    if x is not None:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != y.shape:
            raise ValueError("x must align with y")
    y_diff = difference(y, d)
    x_diff = x[d:] if x is not None else None
    n = y_diff.size
    if n < p + q + 2:
        raise ValueError(f"series too short for order {order}: {n} usable points")
    if n < 10 * (p + q + 1):
        log.warning(
            "series of %d points is short for order %s; estimates may be unstable", n, order
        )
    if np.all(y_diff == y_diff[0]):
        raise DegenerateSeries(f"differenced series is constant; order {order} cannot be fit")
    exog = x is not None
    dim = 1 + p + q + (1 if exog else 0)

    # optimizer inner loop: contiguous buffers once, kernel calls from then on
    y_c = np.ascontiguousarray(y_diff)
    x_c = np.ascontiguousarray(x_diff) if exog else np.zeros(n)

    def objective(theta: np.ndarray) -> float:
        # non-stationary AR points are rejected outright (infinite objective),
        # so a fit whose unconstrained optimum sits on the unit circle cannot
        # converge; grid_search later skips such orders
        ar = theta[1 : 1 + p]
        if _ar_excess(ar) > 0.0:
            return math.inf
        gamma = theta[1 + p + q] if exog else 0.0
        val = _kernels.negloglik(y_c, theta[0], ar, theta[1 + p : 1 + p + q], gamma, x_c)
        return float(val)

    def gradient(theta: np.ndarray) -> np.ndarray:
        # strictly interior points take the compiled whole-gradient kernel,
        # which equals the central difference of the objective because every
        # probe stays feasible; close to the rejection boundary the probing
        # falls back to the objective itself so rejection is felt
        ar = theta[1 : 1 + p]
        if _ar_margin(ar) < 1.0 + 1e-2:
            return _central_gradient(objective, theta)
        gamma = theta[1 + p + q] if exog else 0.0
        g = _kernels.grad_negloglik(
            y_c, theta[0], ar, theta[1 + p : 1 + p + q], gamma, x_c, exog, GRADIENT_STEP
        )
        if not np.all(np.isfinite(g)):
            return _central_gradient(objective, theta)
        return g

    starts: List[np.ndarray] = []
    zero_start = np.zeros(dim)
    zero_start[0] = float(y_diff.mean())
    starts.append(zero_start)
    warm = _ols_start(y_diff, p, q, x_diff)
    if warm is not None and not np.allclose(warm, zero_start):
        if math.isfinite(objective(warm)):
            starts.append(warm)

    best_theta: Optional[np.ndarray] = None
    best_val = math.inf
    any_converged = False
    for theta0 in starts:
        try:
            res = minimize(
                objective,
                theta0,
                method="L-BFGS-B",
                jac=gradient,
                options={"maxiter": max_iter},
            )
        except (ValueError, np.linalg.LinAlgError):
            continue
        if math.isfinite(res.fun) and res.fun < best_val:
            best_val = float(res.fun)
            best_theta = np.asarray(res.x, dtype=np.float64)
            any_converged = any_converged or bool(res.success)

    if best_theta is None or not math.isfinite(best_val):
        raise FitError(f"no feasible optimum found for order {order}")

    mu, ar, ma, gamma = _unpack(best_theta, p, q, exog)
    loglik, sigma2, resid = css_loglik(y_diff, mu, ar, ma, gamma, x_diff)
    k = p + q + 2 + (1 if exog else 0)  # mean and sigma2 always count
    model = FittedModel(
        order=order,
        mu=float(mu),
        ar=tuple(float(a) for a in ar),
        ma=tuple(float(b) for b in ma),
        gamma=float(gamma) if exog else None,
        sigma2=sigma2,
        loglik=loglik,
        aic=aic(k, loglik),
        k_params=k,
        n_obs=n,
        residuals=resid,
        converged=any_converged,
    )
    if not any_converged:
        raise FitError(f"optimizer did not converge for order {order}", best=model)
    return model


@dataclass
class GridResult:
    best: FittedModel
    models: List[FittedModel]
    failures: int


def grid_search(
    y: np.ndarray,
    x: Optional[np.ndarray] = None,
    p_max: int = 5,
    d_max: int = 2,
    q_max: int = 5,
    max_iter: int = MAX_ITERATIONS,
) -> GridResult:
    """Fit every (p, d, q) on the grid and keep the minimum-AIC model.

    Failed fits are skipped with a counted warning; if every fit fails a
    FitError is raised.  AIC ties break toward the smaller order.
    """
    models: List[FittedModel] = []
    failures = 0
    for d in range(d_max + 1):
        for p in range(p_max + 1):
            for q in range(q_max + 1):
                order = ModelOrder(p, d, q)
                try:
                    models.append(fit(y, order, x=x, max_iter=max_iter))
                except (FitError, DegenerateSeries, ValueError) as exc:
                    failures += 1
                    log.debug("fit failed for %s: %s", order, exc)
    if failures:
        log.warning("grid search: %d of %d fits failed", failures, (p_max + 1) * (d_max + 1) * (q_max + 1))
    if not models:
        raise FitError("every fit in the order grid failed")
    best = min(models, key=lambda m: (m.aic, m.order.p + m.order.q + m.order.d, m.order.p, m.order.q))
    return GridResult(best=best, models=models, failures=failures)


# ---------------------------------------------------------------------------
# forecasting


def forecast(
    model: FittedModel,
    y: np.ndarray,
    horizon: int,
    x_future: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Iterated multi-step forecast on the original scale.

    y must be the series the model was fit on (the stored residuals line up
    with it).  Future shocks are zero; differencing is undone at the end; no
    clipping or rounding happens here.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    d = model.order.d
    y_diff = difference(y, d)
    if y_diff.size != model.n_obs:
        raise ValueError("history does not match the series the model was fit on")
    if model.has_exog:
        if x_future is None or len(x_future) < horizon:
            raise ValueError("model has an exogenous term; x_future must cover the horizon")
    vals = list(y_diff)
    errs = list(model.residuals)
    out = np.empty(horizon, dtype=np.float64)
    for h in range(horizon):
        acc = model.mu
        if model.has_exog:
            acc += model.gamma * float(x_future[h])
        for i, a in enumerate(model.ar, start=1):
            acc += a * vals[-i]
        for j, b in enumerate(model.ma, start=1):
            acc += b * errs[-j]
        vals.append(acc)
        errs.append(0.0)
        out[h] = acc
    return integrate(out, y, d)


# ---------------------------------------------------------------------------
# warnings


@dataclass
class WarningSet:
    org: str
    event_type: str
    month: date  # first day of the forecast month
    timestamps: List[datetime]
    source_signal: str

    @property
    def n_warnings(self) -> int:
        return len(self.timestamps)


def round_half_away(v: float) -> int:
    return int(math.floor(abs(v) + 0.5)) * (1 if v >= 0 else -1)


def generate_warnings(
    values: Sequence[float],
    days: Sequence[date],
    org: str,
    event_type: str,
    source_signal: str,
    mode: str = "round",
) -> WarningSet:
    """Turn per-day expected counts into discrete warnings at 12:00 UTC.

    mode "round": each day emits max(0, round-half-away(value)) warnings.
    mode "accumulate": negative values clip to zero, then the running sum is
    floored so fractional rates carry over day to day (0.5/day over a 30-day
    month emits exactly 15 warnings).
    """
    if len(values) != len(days):
        raise ValueError("values and days must align")
    counts: List[int] = []
    if mode == "round":
        counts = [max(0, round_half_away(float(v))) for v in values]
    elif mode == "accumulate":
        acc = 0.0
        emitted = 0
        for v in values:
            acc += max(0.0, float(v))
            total = math.floor(acc + 1e-9)  # guard float dust in the running sum
            counts.append(total - emitted)
            emitted = total
    else:
        raise ValueError(f"unknown warning mode {mode!r}")
    stamps: List[datetime] = []
    for day, c in zip(days, counts):
        noon = datetime.combine(day, time(12, 0), tzinfo=timezone.utc)
        stamps.extend([noon] * c)
    month = days[0].replace(day=1) if days else None
    return WarningSet(
        org=org, event_type=event_type, month=month, timestamps=stamps, source_signal=source_signal
    )


# ---------------------------------------------------------------------------
# baselines


def baserate(
    history_counts: np.ndarray,
    month_days: Sequence[date],
    org: str,
    event_type: str,
) -> WarningSet:
    """Constant-rate baseline: the mean daily count over history, accumulated
    fractionally across the month."""
    history_counts = np.asarray(history_counts, dtype=np.float64)
    if history_counts.size < 28:
        raise ValueError("baserate needs at least 28 days of history")
    rate = float(history_counts.mean())
    return generate_warnings(
        [rate] * len(month_days), month_days, org, event_type, "baserate", mode="accumulate"
    )


def daywise_baserate(
    history_counts: np.ndarray,
    history_start: date,
    month_days: Sequence[date],
    org: str,
    event_type: str,
) -> WarningSet:
    """Per-weekday baseline: one mean rate per weekday, each accumulated
    fractionally along its own weekday sequence within the month."""
    history_counts = np.asarray(history_counts, dtype=np.float64)
    if history_counts.size < 56:
        raise ValueError("daywise baserate needs at least eight weeks of history")
    sums = np.zeros(7)
    days = np.zeros(7)
    for i in range(history_counts.size):
        wd = (history_start + timedelta(days=i)).weekday()
        sums[wd] += history_counts[i]
        days[wd] += 1
    if np.any(days == 0):
        raise ValueError("history does not cover every weekday")
    rates = sums / days
    acc = np.zeros(7)
    emitted = np.zeros(7, dtype=np.int64)
    stamps: List[datetime] = []
    for day in month_days:
        wd = day.weekday()
        acc[wd] += max(0.0, rates[wd])
        total = math.floor(acc[wd] + 1e-9)
        count = int(total - emitted[wd])
        emitted[wd] = total
        noon = datetime.combine(day, time(12, 0), tzinfo=timezone.utc)
        stamps.extend([noon] * count)
    month = month_days[0].replace(day=1) if month_days else None
    return WarningSet(
        org=org, event_type=event_type, month=month, timestamps=stamps, source_signal="daywise-baserate"
    )


# ---------------------------------------------------------------------------
# calendar helpers and model dump


def month_start(d: date) -> date:
    return d.replace(day=1)


def next_month(d: date) -> date:
    return date(d.year + 1, 1, 1) if d.month == 12 else date(d.year, d.month + 1, 1)


def month_dates(month: date) -> List[date]:
    """Every calendar day of the month containing `month`."""
    first = month_start(month)
    end = next_month(first)
    return [first + timedelta(days=i) for i in range((end - first).days)]


def format_model(model: FittedModel) -> str:
    lines = [
        f"order: {model.order}",
        f"mu: {model.mu!r}",
        "ar: " + (" ".join(repr(a) for a in model.ar) if model.ar else "-"),
        "ma: " + (" ".join(repr(b) for b in model.ma) if model.ma else "-"),
        f"gamma: {model.gamma!r}" if model.has_exog else "gamma: -",
        f"sigma2: {model.sigma2!r}",
        f"loglik: {model.loglik!r}",
        f"aic: {model.aic!r}",
        f"k_params: {model.k_params}",
        f"n_obs: {model.n_obs}",
        f"converged: {model.converged}",
    ]
    return "\n".join(lines) + "\n"
