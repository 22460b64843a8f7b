"""Per-forum sentiment time series: daily means, smoothing, standardization.

One value per calendar day per (forum, method).  Days without posts take the
previous day's mean (the method's neutral value before the first post ever).
Smoothing is a trailing running average, so no value depends on later days.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .corpus import Corpus, DateSpan
from .sentiment import METHODS, DEFAULT_RULES, LexiconSet, ValenceRules, score_posts

log = logging.getLogger(__name__)

# Score emitted for a day with no signal content, per method.
NEUTRAL = {"vader": 0.5, "senti": 0.0, "tone": 50.0}


class DegenerateSignal(ValueError):
    """A series with no variance where variance is required."""


# ---------------------------------------------------------------------------
# daily aggregation


@dataclass
class DailySeries:
    forum_id: int
    method: str
    span: DateSpan
    values: np.ndarray    # float64, one mean per day, gaps filled
    coverage: np.ndarray  # int64, posts per day (0 marks filled gaps)


def daily_average(
    day_indices: Sequence[int],
    scores: Sequence[float],
    n_days: int,
    neutral: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean score per day with gap filling.

    Days before the first observed day hold the neutral value; later gaps
    carry the last observed mean forward.
    """
    idx = np.asarray(day_indices, dtype=np.int64)
    val = np.asarray(scores, dtype=np.float64)
    if idx.shape != val.shape:
        raise ValueError("day_indices and scores must have equal length")
    if idx.size and (idx.min() < 0 or idx.max() >= n_days):
        raise ValueError("day index outside the series span")
    counts = np.bincount(idx, minlength=n_days).astype(np.int64)
    sums = np.bincount(idx, weights=val, minlength=n_days)
    out = np.empty(n_days, dtype=np.float64)
    last = neutral
    for d in range(n_days):
        if counts[d] > 0:
            last = sums[d] / counts[d]
        out[d] = last
    return out, counts


def daily_series(
    corpus: Corpus,
    lexicon: LexiconSet,
    methods: Sequence[str] = METHODS,
    rules: ValenceRules = DEFAULT_RULES,
    workers: int = 1,
) -> Dict[Tuple[int, str], DailySeries]:
    """Score every post and reduce to one DailySeries per (forum, method)."""
    out: Dict[Tuple[int, str], DailySeries] = {}
    for fid in corpus.forum_ids:
        posts = corpus.posts_by_forum[fid]
        scored = score_posts(posts, lexicon, methods, rules, workers=workers)
        day_idx = [corpus.span.day_index(p.posted_at) for p in posts]
        for m_i, method in enumerate(methods):
            vals = [s.scores[m_i] for s in scored]
            values, coverage = daily_average(day_idx, vals, corpus.span.n_days, NEUTRAL[method])
            out[(fid, method)] = DailySeries(
                forum_id=fid, method=method, span=corpus.span, values=values, coverage=coverage
            )
    return out


# ---------------------------------------------------------------------------
# smoothing and standardization


def running_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the last `window` days, shorter at the series head:
    out[d] = mean(values[max(0, d - window + 1) ..= d])."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(values, dtype=np.float64)
    out = np.empty_like(x)
    for d in range(x.size):
        lo = max(0, d - window + 1)
        out[d] = x[lo : d + 1].mean()
    return out


def window_sweep(values: np.ndarray, windows: Iterable[int]) -> Dict[int, np.ndarray]:
    return {w: running_average(values, w) for w in windows}


def standardize(values: np.ndarray, fit_lo: int, fit_hi: int) -> Tuple[np.ndarray, float, float]:
    """Z-score the whole vector using mean/std fitted on values[fit_lo:fit_hi].

    The sample standard deviation (n-1 denominator) is used.  A fit range
    with fewer than two points or zero variance raises DegenerateSignal.
    """
    x = np.asarray(values, dtype=np.float64)
    if not (0 <= fit_lo < fit_hi <= x.size):
        raise ValueError(f"fit range [{fit_lo}, {fit_hi}) outside series of length {x.size}")
    fit = x[fit_lo:fit_hi]
    if fit.size < 2:
        raise DegenerateSignal("need at least two points to standardize")
    mean = float(fit.mean())
    std = float(fit.std(ddof=1))
    if std == 0.0 or not np.isfinite(std):
        raise DegenerateSignal("zero variance over the fit range")
    return (x - mean) / std, mean, std


# ---------------------------------------------------------------------------
# assembled signals


@dataclass
class SentimentSeries:
    """A smoothed, standardized signal ready for screening and forecasting."""

    forum_id: int
    method: str
    window: int
    span: DateSpan
    values: np.ndarray  # standardized
    mean: float
    std: float
    fit_lo: int
    fit_hi: int

    @property
    def name(self) -> str:
        return f"forum{self.forum_id}-{self.method}"


def build_signal(
    daily: DailySeries, window: int, fit_lo: int, fit_hi: int
) -> SentimentSeries:
    smoothed = running_average(daily.values, window)
    standardized, mean, std = standardize(smoothed, fit_lo, fit_hi)
    return SentimentSeries(
        forum_id=daily.forum_id,
        method=daily.method,
        window=window,
        span=daily.span,
        values=standardized,
        mean=mean,
        std=std,
        fit_lo=fit_lo,
        fit_hi=fit_hi,
    )


def build_signals(
    corpus: Corpus,
    lexicon: LexiconSet,
    window: int,
    fit_lo: int,
    fit_hi: int,
    methods: Sequence[str] = METHODS,
    rules: ValenceRules = DEFAULT_RULES,
    workers: int = 1,
) -> List[SentimentSeries]:
    """Full signal pipeline for every (forum, method); degenerate series are
    skipped with a counted warning."""
    dailies = daily_series(corpus, lexicon, methods, rules, workers=workers)
    out: List[SentimentSeries] = []
    skipped = 0
    for (fid, method) in sorted(dailies):
        try:
            out.append(build_signal(dailies[(fid, method)], window, fit_lo, fit_hi))
        except DegenerateSignal:
            skipped += 1
    if skipped:
        log.warning("skipped %d degenerate (zero-variance) signals", skipped)
    return out


# ---------------------------------------------------------------------------
# CSV round-trip


def export_signals_csv(series: Iterable[SentimentSeries], path: str) -> None:
    """Rows: date,forum_id,method,window,value with full float precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "forum_id", "method", "window", "value"])
        for s in series:
            for i in range(s.span.n_days):
                writer.writerow(
                    [s.span.day(i).isoformat(), s.forum_id, s.method, s.window, repr(float(s.values[i]))]
                )


def load_signals_csv(path: str) -> List[SentimentSeries]:
    """Inverse of export_signals_csv; mean/std metadata are not in the file,
    so loaded series carry mean 0 and std 1 placeholders."""
    rows: Dict[Tuple[int, str, int], List[Tuple[str, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (int(row["forum_id"]), row["method"], int(row["window"]))
            rows.setdefault(key, []).append((row["date"], float(row["value"])))
    out: List[SentimentSeries] = []
    for (fid, method, window), pairs in sorted(rows.items()):
        pairs.sort(key=lambda p: p[0])
        dates = [date.fromisoformat(d) for d, _ in pairs]
        span = DateSpan(dates[0], dates[-1])
        if len(dates) != span.n_days:
            raise ValueError(f"signal forum{fid}-{method} has gaps or duplicate dates")
        values = np.array([v for _, v in pairs], dtype=np.float64)
        out.append(
            SentimentSeries(
                forum_id=fid,
                method=method,
                window=window,
                span=span,
                values=values,
                mean=0.0,
                std=1.0,
                fit_lo=0,
                fit_hi=span.n_days,
            )
        )
    return out
