"""Warning-versus-event matching, monthly scores, and the rolling backtest.

A warning matches an event when their timestamps differ by at most the
event-type window (fractional days).  Matching is one-to-one: the default
matcher maximizes the number of matched pairs and, among maximum matchings,
minimizes the total absolute time difference.  A greedy nearest-first
matcher is available behind a flag for comparison.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import EventSeries
from .forecast import (
    FitError,
    DegenerateSeries,
    WarningSet,
    baserate,
    daywise_baserate,
    forecast,
    generate_warnings,
    grid_search,
    month_dates,
    month_start,
    next_month,
)
from .signal import SentimentSeries

log = logging.getLogger(__name__)

# Matching window per event type, in fractional days.
DEFAULT_MATCH_WINDOWS = {
    "endpoint-malware": 0.875,
    "malicious-destination": 1.625,
    "malicious-email": 1.375,
}


# ---------------------------------------------------------------------------
# matching


def _to_days(stamps: Sequence[datetime]) -> np.ndarray:
    return np.array([ts.timestamp() / 86400.0 for ts in stamps], dtype=np.float64)


def match(
    warnings: Sequence[datetime],
    events: Sequence[datetime],
    window_days: float,
    method: str = "optimal",
) -> List[Tuple[int, int]]:
    """One-to-one pairing of warnings to events within the window.

    "optimal" maximizes pair count, then minimizes summed |dt|.  "greedy"
    repeatedly takes the globally closest feasible pair.  Returns index
    pairs (warning_idx, event_idx).
    """
    if window_days < 0:
        raise ValueError("window must be non-negative")
    if not warnings or not events:
        return []
    w = _to_days(warnings)
    e = _to_days(events)
    dist = np.abs(w[:, None] - e[None, :])
    feasible = dist <= window_days

    if method == "greedy":
        pairs = [
            (float(dist[i, j]), i, j)
            for i in range(len(w))
            for j in range(len(e))
            if feasible[i, j]
        ]
        pairs.sort()
        used_w: set = set()
        used_e: set = set()
        out: List[Tuple[int, int]] = []
        for _, i, j in pairs:
            if i not in used_w and j not in used_e:
                out.append((i, j))
                used_w.add(i)
                used_e.add(j)
        return sorted(out)

    if method != "optimal":
        raise ValueError(f"unknown matcher {method!r}")

    # Infeasible edges get a cost so large that any feasible pair is cheaper
    # than tolerating one more infeasible assignment, making the assignment
    # maximize feasible cardinality first and total |dt| second.
    big = window_days * min(len(w), len(e)) + 1.0
    cost = np.where(feasible, dist, big)
    rows, cols = linear_sum_assignment(cost)
    return sorted((int(i), int(j)) for i, j in zip(rows, cols) if feasible[i, j])


def score(matched: int, n_warnings: int, n_events: int) -> Tuple[float, float, float]:
    """Precision, recall, F1 with zero-denominator guards."""
    if matched > min(n_warnings, n_events):
        raise ValueError("matched count exceeds warnings or events")
    precision = matched / n_warnings if n_warnings else 0.0
    recall = matched / n_events if n_events else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


# ---------------------------------------------------------------------------
# month scoring


@dataclass
class MonthScore:
    month: date
    org: str
    event_type: str
    signal: str
    events: int
    warnings: int
    matched: int
    precision: float
    recall: float
    f1: float
    is_sentiment: bool
    note: str = ""


def score_month(
    warning_set: WarningSet,
    events: EventSeries,
    window_days: float,
    matcher: str = "optimal",
    is_sentiment: bool = False,
) -> MonthScore:
    """Score one month of warnings against what actually happened.

    Events within `window_days` outside the month boundaries participate in
    matching so boundary warnings are not penalized; a warning matched to
    such an outside event is removed from this month's tally entirely (it
    belongs to the neighboring month), keeping precision = matched/warnings
    and recall = matched/events exact.
    """
    first = warning_set.month
    lo = datetime.combine(first, datetime.min.time(), tzinfo=timezone.utc)
    hi = datetime.combine(next_month(first), datetime.min.time(), tzinfo=timezone.utc)
    pad = timedelta(days=window_days)
    candidates = events.in_window(lo - pad, hi + pad)
    in_month_idx = {j for j, ts in enumerate(candidates) if lo <= ts < hi}

    pairs = match(warning_set.timestamps, candidates, window_days, matcher)
    matched_in = sum(1 for _, j in pairs if j in in_month_idx)
    matched_out = len(pairs) - matched_in

    n_events = len(in_month_idx)
    n_warnings = warning_set.n_warnings - matched_out
    precision, recall, f1 = score(matched_in, n_warnings, n_events)
    return MonthScore(
        month=first,
        org=warning_set.org,
        event_type=warning_set.event_type,
        signal=warning_set.source_signal,
        events=n_events,
        warnings=n_warnings,
        matched=matched_in,
        precision=precision,
        recall=recall,
        f1=f1,
        is_sentiment=is_sentiment,
    )


# ---------------------------------------------------------------------------
# backtest plan


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class BacktestPlan:
    train_start: date
    train_end: date        # inclusive; the first test month starts after it
    first_month: date      # first forecast month (its first day)
    last_month: date

    def __post_init__(self) -> None:
        if self.train_end <= self.train_start:
            raise PlanError("train_end must come after train_start")
        if self.train_end >= self.first_month:
            raise PlanError("training must end strictly before the first test month")
        if month_start(self.first_month) != self.first_month or month_start(self.last_month) != self.last_month:
            raise PlanError("test months must be given as first-of-month dates")
        if self.last_month < self.first_month:
            raise PlanError("last test month precedes the first")
        if (self.train_end - self.train_start).days + 1 < 56:
            raise PlanError("training span must cover at least eight weeks")

    def months(self) -> List[date]:
        out = []
        m = self.first_month
        while m <= self.last_month:
            out.append(m)
            m = next_month(m)
        return out


@dataclass(frozen=True)
class ExogSpec:
    """A screened signal and the lag it enters the forecaster with."""

    series: SentimentSeries
    lag: int  # 0 or negative

    @property
    def name(self) -> str:
        return self.series.name


def lagged_values(series: SentimentSeries, lag: int, lo: int, hi: int, known_until: int) -> np.ndarray:
    """Signal values shifted by `lag` onto day indices [lo, hi).

    Index t maps to series day t + lag.  Days past `known_until` (exclusive
    index bound of what has been observed) fall back to the last observed
    value, so forecasts never read sentiment from the future.
    """
    vals = series.values
    last_known = known_until - 1
    out = np.empty(hi - lo, dtype=np.float64)
    for k, t in enumerate(range(lo, hi)):
        idx = t + lag
        if idx > last_known:
            idx = last_known
        if idx < 0:
            idx = 0
        out[k] = vals[idx]
    return out


# ---------------------------------------------------------------------------
# rolling backtest


def rolling_backtest(
    exogs: Sequence[ExogSpec],
    events: EventSeries,
    plan: BacktestPlan,
    match_windows: Optional[Dict[str, float]] = None,
    matcher: str = "optimal",
    p_max: int = 5,
    d_max: int = 2,
    q_max: int = 5,
    with_baselines: bool = True,
    audit: Optional[List] = None,
) -> List[MonthScore]:
    """Refit every model family on all data strictly before each test month,
    emit that month's warnings, and score them against the actual events.

    Model families: one ARIMAX per exogenous signal, an ARIMA with no
    exogenous input, and (optionally) the constant and per-weekday rate
    baselines.  A family that cannot be fit for a month is recorded as a
    zero-warning row with a note, and the run continues.

    When a list is passed as audit, a (month, family, forecast array or None,
    warning timestamp tuple) entry is appended per successful family, so
    callers can verify that data after a month never influences its output.
    """
    windows = dict(DEFAULT_MATCH_WINDOWS)
    if match_windows:
        windows.update(match_windows)
    window_days = windows[events.event_type]
    span = events.span
    counts = events.daily_counts().astype(np.float64)
    i_train = span.day_index(plan.train_start)
    if i_train < 0:
        raise PlanError("train_start precedes the data span")

    scores: List[MonthScore] = []
    for month in plan.months():
        i_month = span.day_index(month)
        days = month_dates(month)
        if i_month + len(days) > span.n_days:
            raise PlanError(f"test month {month} runs past the data span")
        history = counts[i_train:i_month]
        horizon = len(days)

        warning_sets: List[Tuple[WarningSet, bool]] = []

        def flagged(source: str, sentiment: bool, note: str) -> None:
            empty = WarningSet(events.org, events.event_type, month, [], source)
            ms = score_month(empty, events, window_days, matcher, sentiment)
            ms.note = note
            scores.append(ms)
            log.warning("%s %s: %s", month, source, note)

        def audited(ws: WarningSet, sentiment: bool, fc: Optional[np.ndarray]) -> None:
            warning_sets.append((ws, sentiment))
            if audit is not None:
                audit.append(
                    (month, ws.source_signal, None if fc is None else fc.copy(), tuple(ws.timestamps))
                )

        # ARIMA, no exogenous input
        try:
            base_grid = grid_search(history, p_max=p_max, d_max=d_max, q_max=q_max)
            fc = forecast(base_grid.best, history, horizon)
            audited(generate_warnings(fc, days, events.org, events.event_type, "arima"), False, fc)
        except (FitError, DegenerateSeries, ValueError) as exc:
            flagged("arima", False, f"unfittable: {exc}")

        # one ARIMAX per screened signal
        for exog in exogs:
            x_hist = lagged_values(exog.series, exog.lag, i_train, i_month, known_until=i_month)
            x_future = lagged_values(
                exog.series, exog.lag, i_month, i_month + horizon, known_until=i_month
            )
            try:
                grid = grid_search(history, x=x_hist, p_max=p_max, d_max=d_max, q_max=q_max)
                fc = forecast(grid.best, history, horizon, x_future=x_future)
                audited(
                    generate_warnings(fc, days, events.org, events.event_type, exog.name), True, fc
                )
            except (FitError, DegenerateSeries, ValueError) as exc:
                flagged(exog.name, True, f"unfittable: {exc}")

        if with_baselines:
            try:
                audited(baserate(history, days, events.org, events.event_type), False, None)
            except ValueError as exc:
                flagged("baserate", False, str(exc))
            try:
                audited(
                    daywise_baserate(history, plan.train_start, days, events.org, events.event_type),
                    False,
                    None,
                )
            except ValueError as exc:
                flagged("daywise-baserate", False, str(exc))

        for ws, sentiment in warning_sets:
            scores.append(score_month(ws, events, window_days, matcher, sentiment))
    return scores


# ---------------------------------------------------------------------------
# reporting


def report_table(scores: Iterable[MonthScore], top_k: int = 5) -> List[MonthScore]:
    """Per (month, org, event_type): descending F1, ties broken by higher
    precision then signal name; at most top_k rows per group."""
    groups: Dict[Tuple[date, str, str], List[MonthScore]] = {}
    for s in scores:
        groups.setdefault((s.month, s.org, s.event_type), []).append(s)
    out: List[MonthScore] = []
    for key in sorted(groups):
        rows = sorted(groups[key], key=lambda s: (-s.f1, -s.precision, s.signal))
        out.extend(rows[:top_k])
    return out


def markdown_table(scores: Iterable[MonthScore], top_k: int = 5) -> str:
    """Month-by-month leaderboard; sentiment-driven rows are bolded."""
    rows = report_table(scores, top_k)
    lines = [
        "| Month | Org | Event type | Signal | Evt | Warn | P | R | F1 |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for s in rows:
        name = f"**{s.signal}**" if s.is_sentiment else s.signal
        lines.append(
            f"| {s.month:%Y-%m} | {s.org} | {s.event_type} | {name} "
            f"| {s.events} | {s.warnings} | {s.precision:.2f} | {s.recall:.2f} | {s.f1:.2f} |"
        )
    return "\n".join(lines) + "\n"


def write_report_csv(scores: Iterable[MonthScore], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["month", "org", "event_type", "signal", "events", "warnings", "precision", "recall", "f1", "is_sentiment"]
        )
        for s in scores:
            writer.writerow(
                [
                    f"{s.month:%Y-%m}",
                    s.org,
                    s.event_type,
                    s.signal,
                    s.events,
                    s.warnings,
                    repr(s.precision),
                    repr(s.recall),
                    repr(s.f1),
                    "true" if s.is_sentiment else "false",
                ]
            )


def load_report_csv(path: str) -> List[MonthScore]:
    out: List[MonthScore] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            month = datetime.strptime(row["month"], "%Y-%m").date()
            precision = float(row["precision"])
            recall = float(row["recall"])
            events = int(row["events"])
            warnings = int(row["warnings"])
            matched = round(precision * warnings) if warnings else 0
            out.append(
                MonthScore(
                    month=month,
                    org=row["org"],
                    event_type=row["event_type"],
                    signal=row["signal"],
                    events=events,
                    warnings=warnings,
                    matched=matched,
                    precision=precision,
                    recall=recall,
                    f1=float(row["f1"]),
                    is_sentiment=row["is_sentiment"] == "true",
                )
            )
    return out
