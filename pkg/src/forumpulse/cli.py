"""Command-line entry point.

Subcommands: synth, ingest, score, signals, screen, forecast, backtest,
report.  Every option can also come from a `key = value` config file via
--config; explicit flags win.  Logs go to stderr, data to files or stdout.
Exit codes: 0 success, 1 data or pipeline error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import date, datetime
from typing import Dict, List, Optional, Sequence, Tuple

from . import config as config_mod
from . import corpus as corpus_mod
from . import evaluate, forecast, screen, signal, synth
from .config import ConfigError, RunConfig
from .corpus import Corpus, DateSpan, EventSeries
from .lexicons import builtin_lexicon_set
from .sentiment import LexiconSet, load_lexicon_dir

log = logging.getLogger("forumpulse")


# ---------------------------------------------------------------------------
# shared plumbing

_COMMON_KEYS = (
    "posts",
    "events",
    "lexicons",
    "start",
    "end",
    "org",
    "event_type",
    "window",
    "max_lag",
    "p_max",
    "min_consecutive",
    "max_exog_signals",
    "p_order_max",
    "d_order_max",
    "q_order_max",
    "matcher",
    "top_k",
    "train_start",
    "train_end",
    "first_month",
    "last_month",
    "workers",
)


def _add_common(parser: argparse.ArgumentParser, keys: Sequence[str]) -> None:
    parser.add_argument("--config", help="key = value config file; flags override it")
    type_map = {
        "start": date.fromisoformat,
        "end": date.fromisoformat,
        "train_start": date.fromisoformat,
        "train_end": date.fromisoformat,
        "first_month": date.fromisoformat,
        "last_month": date.fromisoformat,
        "window": int,
        "max_lag": int,
        "min_consecutive": int,
        "max_exog_signals": int,
        "p_order_max": int,
        "d_order_max": int,
        "q_order_max": int,
        "top_k": int,
        "workers": int,
        "p_max": float,
    }
    for key in keys:
        flag = "--" + key.replace("_", "-")
        parser.add_argument(flag, type=type_map.get(key, str), default=None, dest=key)


def _resolve_config(args: argparse.Namespace, keys: Sequence[str]) -> RunConfig:
    file_values = config_mod.read_config_file(args.config) if args.config else None
    overrides = {key: getattr(args, key, None) for key in keys}
    return config_mod.resolve(file_values, overrides)


def _load_lexicons(cfg: RunConfig) -> LexiconSet:
    if cfg.lexicons:
        return load_lexicon_dir(cfg.lexicons)
    log.info("no lexicon directory configured; using the built-in tables")
    return builtin_lexicon_set()


def _load_corpus(cfg: RunConfig) -> Corpus:
    if not cfg.posts:
        raise ConfigError("no posts file configured (set posts = ... or --posts)")
    return corpus_mod.load_corpus(cfg.posts, DateSpan(cfg.start, cfg.end))


def _load_events(cfg: RunConfig) -> Dict[Tuple[str, str], EventSeries]:
    if not cfg.events:
        raise ConfigError("no events file configured (set events = ... or --events)")
    series = corpus_mod.load_events(cfg.events, DateSpan(cfg.start, cfg.end))
    if cfg.org:
        series = {k: v for k, v in series.items() if k[0] == cfg.org}
    if cfg.event_type:
        series = {k: v for k, v in series.items() if k[1] == cfg.event_type}
    if not series:
        raise ConfigError("no event series left after org/event_type filtering")
    return series


def _fit_range(cfg: RunConfig, span: DateSpan) -> Tuple[int, int]:
    """Day-index range used to fit standardization stats: the training window
    clipped to the span, or the whole span when they do not overlap."""
    lo = max(0, span.day_index(cfg.train_start))
    hi = min(span.n_days, span.day_index(cfg.train_end) + 1)
    if hi - lo < 2:
        log.warning("training window outside the data span; standardizing on the full span")
        return 0, span.n_days
    return lo, hi


def _build_signals(cfg: RunConfig, corpus: Corpus, lexicon: LexiconSet) -> List[signal.SentimentSeries]:
    lo, hi = _fit_range(cfg, corpus.span)
    return signal.build_signals(
        corpus, lexicon, cfg.window, lo, hi, methods=cfg.methods, workers=cfg.workers
    )


def _snapshot(cfg: RunConfig, ref_path: str) -> None:
    config_mod.write_snapshot(cfg, ref_path + ".config.txt")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args: argparse.Namespace) -> int:
    sc = synth.SynthConfig(
        seed=args.seed,
        start=args.start or synth.SynthConfig.start,
        end=args.end or synth.SynthConfig.end,
        n_forums=args.forums,
        posts_per_day=args.posts_per_day,
        planted_forum=args.planted_forum,
        planted_lag=args.lag,
        coupling=args.coupling,
        logistic_gain=args.logistic_gain,
        event_base_rate=args.base_rate,
        org=args.org,
        event_type=args.event_type,
    )
    result = synth.generate(sc, args.out)
    print(
        json.dumps(
            {
                "posts": result.posts_path,
                "events": result.events_path,
                "manifest": result.manifest_path,
                "lexicons": result.lexicon_dir,
                "total_posts": result.manifest["total_posts"],
                "total_events": result.manifest["total_events"],
            }
        )
    )
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, _COMMON_KEYS)
    summary: Dict[str, object] = {}
    corpus = _load_corpus(cfg)
    summary["posts"] = corpus.n_posts
    summary["forums"] = len(corpus.forum_ids)
    summary["posts_dropped_outside_span"] = corpus.n_dropped
    if cfg.events:
        series = _load_events(cfg)
        summary["event_series"] = {
            f"{org}/{etype}": s.n_events for (org, etype), s in sorted(series.items())
        }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, _COMMON_KEYS)
    corpus = _load_corpus(cfg)
    lexicon = _load_lexicons(cfg)
    from .sentiment import score_posts

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["forum_id", "posted_at"] + list(cfg.methods))
        for fid in corpus.forum_ids:
            posts = corpus.posts_by_forum[fid]
            scored = score_posts(posts, lexicon, cfg.methods, workers=cfg.workers)
            for s in scored:
                writer.writerow(
                    [s.forum_id, corpus_mod.format_timestamp(s.posted_at)]
                    + [repr(float(v)) for v in s.scores]
                )
    _snapshot(cfg, args.out)
    log.info("scored %d posts -> %s", corpus.n_posts, args.out)
    return 0


def _cmd_signals(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, _COMMON_KEYS)
    corpus = _load_corpus(cfg)
    lexicon = _load_lexicons(cfg)
    series = _build_signals(cfg, corpus, lexicon)
    signal.export_signals_csv(series, args.out)
    _snapshot(cfg, args.out)
    log.info("wrote %d signals -> %s", len(series), args.out)
    return 0


def _scan_all(
    cfg: RunConfig,
    signals: Sequence[signal.SentimentSeries],
    series: Dict[Tuple[str, str], EventSeries],
    lo: int = 0,
    hi: Optional[int] = None,
) -> List[screen.LagCorrelation]:
    scans: List[screen.LagCorrelation] = []
    for (org, etype), ev in sorted(series.items()):
        counts = ev.daily_counts()
        for sig in signals:
            scans.extend(
                screen.lagged_scan(sig, counts, org, etype, max_lag=cfg.max_lag, lo=lo, hi=hi)
            )
    return scans


def _cmd_screen(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, _COMMON_KEYS)
    corpus = _load_corpus(cfg)
    lexicon = _load_lexicons(cfg)
    series = _load_events(cfg)
    signals = _build_signals(cfg, corpus, lexicon)
    scans = _scan_all(cfg, signals, series)
    screen.write_scan_csv(scans, args.out)
    candidates = screen.select_candidates(scans, cfg.p_max, cfg.min_consecutive)
    if args.candidates_out:
        screen.write_candidates_csv(candidates, args.candidates_out)
    _snapshot(cfg, args.out)
    log.info("%d lag scans, %d candidates -> %s", len(scans), len(candidates), args.out)
    return 0


def _cmd_forecast(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, _COMMON_KEYS)
    series = _load_events(cfg)
    if len(series) != 1:
        raise ConfigError(
            "forecast needs exactly one event series; filter with --org/--event-type"
        )
    ev = next(iter(series.values()))
    month = datetime.strptime(args.month, "%Y-%m").date().replace(day=1)
    span = ev.span
    i_train = span.day_index(cfg.train_start)
    i_month = span.day_index(month)
    days = forecast.month_dates(month)
    if i_train < 0 or i_month + len(days) > span.n_days or i_train >= i_month:
        raise ConfigError("train window and forecast month must fit inside the data span")
    history = ev.daily_counts().astype(float)[i_train:i_month]

    x_hist = x_future = None
    source = "arima"
    if args.forum is not None:
        if not args.method:
            raise ConfigError("--forum needs --method")
        if args.lag is None:
            raise ConfigError("--forum needs --lag (days the signal leads events)")
        lag = -abs(args.lag)
        corpus = _load_corpus(cfg)
        lexicon = _load_lexicons(cfg)
        lo, hi = _fit_range(cfg, corpus.span)
        dailies = signal.daily_series(corpus, lexicon, [args.method], workers=cfg.workers)
        if (args.forum, args.method) not in dailies:
            raise ConfigError(f"forum {args.forum} has no posts in the span")
        sig = signal.build_signal(dailies[(args.forum, args.method)], cfg.window, lo, hi)
        x_hist = evaluate.lagged_values(sig, lag, i_train, i_month, known_until=i_month)
        x_future = evaluate.lagged_values(
            sig, lag, i_month, i_month + len(days), known_until=i_month
        )
        source = sig.name

    grid = forecast.grid_search(
        history, x=x_hist, p_max=cfg.p_order_max, d_max=cfg.d_order_max, q_max=cfg.q_order_max
    )
    yhat = forecast.forecast(grid.best, history, len(days), x_future=x_future)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "yhat"])
        for day, v in zip(days, yhat):
            writer.writerow([day.isoformat(), repr(float(v))])
    if args.warnings_out:
        ws = forecast.generate_warnings(yhat, days, ev.org, ev.event_type, source)
        _write_warnings_csv([ws], args.warnings_out)
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as fh:
            fh.write(forecast.format_model(grid.best))
    _snapshot(cfg, args.out)
    log.info("best order %s (AIC %.2f) -> %s", grid.best.order, grid.best.aic, args.out)
    return 0


def _write_warnings_csv(warning_sets: Sequence[forecast.WarningSet], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["org", "event_type", "timestamp", "source_signal"])
        for ws in warning_sets:
            for ts in ws.timestamps:
                writer.writerow([ws.org, ws.event_type, corpus_mod.format_timestamp(ts), ws.source_signal])


def _cmd_backtest(args: argparse.Namespace) -> int:
    import os

    cfg = _resolve_config(args, _COMMON_KEYS)
    plan = evaluate.BacktestPlan(cfg.train_start, cfg.train_end, cfg.first_month, cfg.last_month)
    corpus = _load_corpus(cfg)
    lexicon = _load_lexicons(cfg)
    series = _load_events(cfg)
    signals = _build_signals(cfg, corpus, lexicon)
    lookup = {(s.forum_id, s.method): s for s in signals}
    span = corpus.span
    lo, hi = _fit_range(cfg, span)

    all_scores: List[evaluate.MonthScore] = []
    for (org, etype), ev in sorted(series.items()):
        scans = _scan_all(cfg, signals, {(org, etype): ev}, lo=lo, hi=hi)
        candidates = screen.select_candidates(scans, cfg.p_max, cfg.min_consecutive)
        candidates.sort(key=lambda c: (c.best_p, -abs(c.best_r), c.name))
        exogs = [
            evaluate.ExogSpec(lookup[(c.forum_id, c.method)], c.best_lag)
            for c in candidates[: cfg.max_exog_signals]
        ]
        log.info(
            "%s/%s: %d candidate signals %s",
            org,
            etype,
            len(exogs),
            [f"{e.name}@{e.lag}" for e in exogs],
        )
        all_scores.extend(
            evaluate.rolling_backtest(
                exogs,
                ev,
                plan,
                matcher=cfg.matcher,
                p_max=cfg.p_order_max,
                d_max=cfg.d_order_max,
                q_max=cfg.q_order_max,
                with_baselines=cfg.with_baselines,
            )
        )

    os.makedirs(args.out_dir, exist_ok=True)
    report_csv = os.path.join(args.out_dir, "report.csv")
    evaluate.write_report_csv(all_scores, report_csv)
    with open(os.path.join(args.out_dir, "report.md"), "w", encoding="utf-8") as fh:
        fh.write(evaluate.markdown_table(all_scores, cfg.top_k))
    config_mod.write_snapshot(cfg, os.path.join(args.out_dir, "config_snapshot.txt"))
    log.info("%d score rows -> %s", len(all_scores), report_csv)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    scores = evaluate.load_report_csv(args.scores)
    table = evaluate.markdown_table(scores, args.top_k if args.top_k else 5)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forumpulse",
        description="Forum sentiment signals, lag screening, and event-warning forecasts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--start", type=date.fromisoformat, default=None)
    p.add_argument("--end", type=date.fromisoformat, default=None)
    p.add_argument("--forums", type=int, default=4)
    p.add_argument("--posts-per-day", type=float, default=8.0)
    p.add_argument("--planted-forum", type=int, default=1)
    p.add_argument("--lag", type=int, default=14)
    p.add_argument("--coupling", type=float, default=56.0)
    p.add_argument("--logistic-gain", type=float, default=6.0)
    p.add_argument("--base-rate", type=float, default=1.0)
    p.add_argument("--org", default="orgA")
    p.add_argument("--event-type", default="endpoint-malware", dest="event_type")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate inputs and print a summary")
    _add_common(p, _COMMON_KEYS)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("score", help="write per-post sentiment scores")
    _add_common(p, _COMMON_KEYS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("signals", help="write per-forum daily signal series")
    _add_common(p, _COMMON_KEYS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_signals)

    p = sub.add_parser("screen", help="lag-correlation screen of signals vs events")
    _add_common(p, _COMMON_KEYS)
    p.add_argument("--out", required=True)
    p.add_argument("--candidates-out", default=None)
    p.set_defaults(func=_cmd_screen)

    p = sub.add_parser("forecast", help="fit one month-ahead model and emit warnings")
    _add_common(p, _COMMON_KEYS)
    p.add_argument("--month", required=True, help="YYYY-MM")
    p.add_argument("--out", required=True)
    p.add_argument("--warnings-out", default=None)
    p.add_argument("--model-out", default=None)
    p.add_argument("--forum", type=int, default=None, help="exogenous signal forum id")
    p.add_argument("--method", default=None, help="exogenous signal method")
    p.add_argument("--lag", type=int, default=None, help="days the signal leads events")
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("backtest", help="rolling monthly refit, warn, and score")
    _add_common(p, _COMMON_KEYS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_backtest)

    p = sub.add_parser("report", help="render a score CSV as a markdown table")
    p.add_argument("--scores", required=True)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        corpus_mod.CorpusError,
        evaluate.PlanError,
        forecast.FitError,
        forecast.DegenerateSeries,
        signal.DegenerateSignal,
        ValueError,
        OSError,
    ) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
