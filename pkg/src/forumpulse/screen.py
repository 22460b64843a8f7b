"""Lagged correlation screening of sentiment signals against event counts.

For each candidate lag L in 0..max_lag, the signal value from L days earlier
is paired with today's event count, so the signal side of every pair never
postdates the event side.  Significance is a two-sided test of the Pearson r
via the Student-t distribution, evaluated with a local regularized
incomplete beta (no external stats dependency).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .signal import DegenerateSignal, SentimentSeries

log = logging.getLogger(__name__)

MIN_OVERLAP_DAYS = 33


# ---------------------------------------------------------------------------
# correlation and significance


def pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    """Product-moment correlation; DegenerateSignal when either side is flat."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if x.size < 3:
        raise ValueError("need at least three points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSignal("zero variance in correlation input")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    # round-off can push |r| epsilon past 1 on perfectly collinear input
    return max(-1.0, min(1.0, r))


# Continued-fraction evaluation of the regularized incomplete beta I_x(a, b),
# modified Lentz recurrence.  Converges to ~1e-14 relative for the (a, b)
# ranges a t test produces.
_CF_MAX_ITER = 300
_CF_EPS = 1e-14
_CF_TINY = 1e-300


def _beta_cf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # use the representation that converges fastest
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def p_value(r: float, n: int) -> float:
    """Two-sided p for observing |r| under zero true correlation, n samples.

    Uses t = r * sqrt((n - 2) / (1 - r^2)) with n - 2 degrees of freedom;
    the tail mass is I_{df/(df+t^2)}(df/2, 1/2).  |r| = 1 returns exactly 0.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation {r} outside [-1, 1]")
    if abs(r) == 1.0:
        return 0.0
    df = n - 2
    t_sq = r * r * df / (1.0 - r * r)
    p = reg_inc_beta(df / 2.0, 0.5, df / (df + t_sq))
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# lag scan


@dataclass(frozen=True)
class LagCorrelation:
    forum_id: int
    method: str
    lag: int      # 0 or negative: signal leads events by -lag days
    r: float
    p: float
    n: int
    org: str
    event_type: str


def lagged_scan(
    signal: SentimentSeries,
    event_counts: np.ndarray,
    org: str,
    event_type: str,
    max_lag: int = 30,
    lo: int = 0,
    hi: Optional[int] = None,
) -> List[LagCorrelation]:
    """Correlate the signal against event counts at lags 0..-max_lag.

    Both vectors are indexed by the same day grid; [lo, hi) bounds the event
    days considered (defaults to the whole span).  For lag -L, event day t is
    paired with signal day t - L.  Lags whose overlap is shorter than
    MIN_OVERLAP_DAYS or whose inputs are flat are skipped with a warning.
    """
    y_all = np.asarray(event_counts, dtype=np.float64)
    x_all = signal.values
    if x_all.size != y_all.size:
        raise ValueError("signal and event vectors must share the day grid")
    hi = y_all.size if hi is None else hi
    if not (0 <= lo < hi <= y_all.size):
        raise ValueError(f"bad scan range [{lo}, {hi})")
    out: List[LagCorrelation] = []
    skipped = 0
    for l in range(0, max_lag + 1):
        ev_lo = max(lo, l)  # event day t needs signal day t - l inside the grid
        x = x_all[ev_lo - l : hi - l]
        y = y_all[ev_lo:hi]
        if x.size < MIN_OVERLAP_DAYS:
            skipped += 1
            continue
        try:
            r = pearson_r(x, y)
        except DegenerateSignal:
            skipped += 1
            continue
        out.append(
            LagCorrelation(
                forum_id=signal.forum_id,
                method=signal.method,
                lag=-l,
                r=r,
                p=p_value(r, x.size),
                n=x.size,
                org=org,
                event_type=event_type,
            )
        )
    if skipped:
        log.warning(
            "forum%d-%s vs %s/%s: skipped %d lags (short overlap or flat input)",
            signal.forum_id,
            signal.method,
            org,
            event_type,
            skipped,
        )
    return out


# ---------------------------------------------------------------------------
# candidate selection


@dataclass(frozen=True)
class CandidateSignal:
    forum_id: int
    method: str
    org: str
    event_type: str
    best_lag: int
    best_r: float
    best_p: float
    n: int
    supporting_lags: Tuple[int, ...]  # every lag inside a qualifying run

    @property
    def name(self) -> str:
        return f"forum{self.forum_id}-{self.method}"


def select_candidates(
    scans: Iterable[LagCorrelation],
    p_max: float = 1e-4,
    min_consecutive: int = 2,
) -> List[CandidateSignal]:
    """Keep signals showing a run of >= min_consecutive consecutive lags at
    p <= p_max against the same event series.

    best_lag is the smallest-p lag inside the qualifying runs; ties go to the
    most negative lag.  Isolated significant lags shorter than the run length
    never qualify.
    """
    grouped: Dict[Tuple[int, str, str, str], List[LagCorrelation]] = {}
    for scan in scans:
        grouped.setdefault((scan.forum_id, scan.method, scan.org, scan.event_type), []).append(scan)

    out: List[CandidateSignal] = []
    for key in sorted(grouped):
        rows = sorted(grouped[key], key=lambda s: -s.lag)  # lag 0, -1, -2, ...
        qualifying: List[LagCorrelation] = []
        run: List[LagCorrelation] = []
        for row in rows:
            if row.p <= p_max and (not run or row.lag == run[-1].lag - 1):
                run.append(row)
            else:
                if len(run) >= min_consecutive:
                    qualifying.extend(run)
                run = [row] if row.p <= p_max else []
        if len(run) >= min_consecutive:
            qualifying.extend(run)
        if not qualifying:
            continue
        best = min(qualifying, key=lambda s: (s.p, s.lag))
        out.append(
            CandidateSignal(
                forum_id=key[0],
                method=key[1],
                org=key[2],
                event_type=key[3],
                best_lag=best.lag,
                best_r=best.r,
                best_p=best.p,
                n=best.n,
                supporting_lags=tuple(s.lag for s in qualifying),
            )
        )
    return out


# ---------------------------------------------------------------------------
# report CSV


def write_scan_csv(scans: Sequence[LagCorrelation], path: str) -> None:
    """Rows: forum_id,method,lag,r,p,n,event_type,org sorted by event type,
    forum, then lag from 0 downward."""
    rows = sorted(scans, key=lambda s: (s.event_type, s.org, s.forum_id, s.method, -s.lag))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["forum_id", "method", "lag", "r", "p", "n", "event_type", "org"])
        for s in rows:
            writer.writerow([s.forum_id, s.method, s.lag, f"{s.r:.6f}", f"{s.p:.3e}", s.n, s.event_type, s.org])


def write_candidates_csv(candidates: Sequence[CandidateSignal], path: str) -> None:
    rows = sorted(candidates, key=lambda c: (c.event_type, c.org, c.forum_id, c.method))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["forum_id", "method", "best_lag", "r", "p", "n", "event_type", "org", "supporting_lags"]
        )
        for c in rows:
            writer.writerow(
                [
                    c.forum_id,
                    c.method,
                    c.best_lag,
                    f"{c.best_r:.6f}",
                    f"{c.best_p:.3e}",
                    c.n,
                    c.event_type,
                    c.org,
                    " ".join(str(l) for l in c.supporting_lags),
                ]
            )
