"""Seeded synthetic corpora with a planted sentiment-to-event dependence.

One forum's mood drives future security events: the generator keeps a latent
mood walk per forum, renders it into posts whose token mix leans positive or
negative, and samples event counts from a Poisson rate driven by the planted
forum's smoothed mood from `planted_lag` days earlier:

    rate_t = base + coupling * logistic(gain * s_{t - lag})

where s is the trailing `smooth_window`-day mean of the planted forum's
mood, mirroring the smoothing the signal pipeline applies.  Every random
choice flows from one integer seed through spawned child streams (mood,
posts, events), so byte-identical reruns are guaranteed and perturbing one
section never reshuffles the others.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from datetime import date, datetime, time, timedelta, timezone
from typing import Dict, List

import numpy as np

from .corpus import EVENT_TYPES, DateSpan, format_timestamp
from .lexicons import NEGATIVE_POOL, NEUTRAL_POOL, POSITIVE_POOL, write_builtin_lexicons


@dataclass
class SynthConfig:
    seed: int = 7
    start: date = date(2016, 1, 1)
    end: date = date(2018, 1, 31)
    n_forums: int = 4
    posts_per_day: float = 8.0        # Poisson rate of posts per forum-day
    tokens_min: int = 4
    tokens_max: int = 12
    sentiment_density: float = 0.35   # share of tokens drawn from a polar pool
    mood_phi: float = 0.65            # AR(1) pole of the latent mood walk
    mood_scale: float = 0.8           # innovation scale of the walk
    smooth_window: int = 7            # trailing window of the driving state
    planted_forum: int = 1
    planted_lag: int = 14             # days the planted mood leads events
    coupling: float = 56.0            # 0 disables the dependence entirely
    logistic_gain: float = 6.0        # steepness of the mood-to-rate link
    event_base_rate: float = 1.0
    org: str = "orgA"
    event_type: str = "endpoint-malware"

    def validate(self) -> None:
        if self.end < self.start:
            raise ValueError("end date precedes start date")
        if self.n_forums < 1:
            raise ValueError("need at least one forum")
        if not (1 <= self.planted_forum <= self.n_forums):
            raise ValueError("planted_forum outside 1..n_forums")
        if self.planted_lag < 0:
            raise ValueError("planted_lag must be >= 0")
        if self.coupling < 0:
            raise ValueError("coupling must be >= 0")
        if self.logistic_gain <= 0:
            raise ValueError("logistic_gain must be positive")
        if self.event_base_rate < 0:
            raise ValueError("event_base_rate must be >= 0")
        if self.event_type not in EVENT_TYPES:
            raise ValueError(f"event_type must be one of {EVENT_TYPES}")
        if not (0.0 <= self.sentiment_density <= 1.0):
            raise ValueError("sentiment_density must be in [0, 1]")
        if self.tokens_min < 1 or self.tokens_max < self.tokens_min:
            raise ValueError("bad tokens_min/tokens_max")
        if self.posts_per_day <= 0:
            raise ValueError("posts_per_day must be positive")
        if self.smooth_window < 1:
            raise ValueError("smooth_window must be >= 1")


def _logistic(v: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-v))


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    out = np.empty_like(values)
    for d in range(values.size):
        lo = max(0, d - window + 1)
        out[d] = values[lo : d + 1].mean()
    return out


@dataclass
class SynthResult:
    posts_path: str
    events_path: str
    manifest_path: str
    lexicon_dir: str
    manifest: Dict


def generate(config: SynthConfig, outdir: str) -> SynthResult:
    """Write posts.ndjson, events.ndjson, manifest.json, and a lexicons/
    directory under outdir; returns the paths plus the manifest dict."""
    config.validate()
    os.makedirs(outdir, exist_ok=True)
    span = DateSpan(config.start, config.end)
    n_days = span.n_days

    root = np.random.SeedSequence(config.seed)
    mood_seq, post_seq, event_seq = root.spawn(3)
    mood_rng = np.random.default_rng(mood_seq)
    post_rng = np.random.default_rng(post_seq)
    event_rng = np.random.default_rng(event_seq)

    # latent mood walk per forum, squashed into a positivity probability
    moods: Dict[int, np.ndarray] = {}
    for fid in range(1, config.n_forums + 1):
        walk = np.empty(n_days)
        state = 0.0
        innovations = mood_rng.normal(0.0, config.mood_scale, size=n_days)
        for d in range(n_days):
            state = config.mood_phi * state + innovations[d]
            walk[d] = math.tanh(state)
        moods[fid] = walk
    positivity = {fid: 0.5 + 0.4 * moods[fid] for fid in moods}

    # driving state: the planted forum's trailing-mean mood
    driving = _trailing_mean(moods[config.planted_forum], config.smooth_window)
    lagged = np.empty(n_days)
    for t in range(n_days):
        lagged[t] = driving[max(0, t - config.planted_lag)]
    event_rates = config.event_base_rate + config.coupling * _logistic(
        config.logistic_gain * lagged
    )

    # posts
    posts_path = os.path.join(outdir, "posts.ndjson")
    pos_pool, neg_pool, neu_pool = POSITIVE_POOL, NEGATIVE_POOL, NEUTRAL_POOL
    post_counts: Dict[int, int] = {fid: 0 for fid in moods}
    with open(posts_path, "w", encoding="utf-8") as fh:
        for fid in sorted(moods):
            p_series = positivity[fid]
            for d in range(n_days):
                day = span.day(d)
                n_posts = int(post_rng.poisson(config.posts_per_day))
                seconds = np.sort(post_rng.integers(0, 86400, size=n_posts))
                for s in seconds:
                    n_tokens = int(post_rng.integers(config.tokens_min, config.tokens_max + 1))
                    words: List[str] = []
                    for _ in range(n_tokens):
                        if post_rng.random() < config.sentiment_density:
                            if post_rng.random() < p_series[d]:
                                words.append(pos_pool[int(post_rng.integers(len(pos_pool)))])
                            else:
                                words.append(neg_pool[int(post_rng.integers(len(neg_pool)))])
                        else:
                            words.append(neu_pool[int(post_rng.integers(len(neu_pool)))])
                    ts = datetime.combine(day, time(0, 0), tzinfo=timezone.utc) + timedelta(
                        seconds=int(s)
                    )
                    fh.write(
                        json.dumps(
                            {
                                "forum_id": fid,
                                "posted_at": format_timestamp(ts),
                                "text": " ".join(words),
                            }
                        )
                        + "\n"
                    )
                    post_counts[fid] += 1

    # events
    events_path = os.path.join(outdir, "events.ndjson")
    daily_events: List[int] = []
    n_events = 0
    with open(events_path, "w", encoding="utf-8") as fh:
        for d in range(n_days):
            day = span.day(d)
            count = int(event_rng.poisson(event_rates[d]))
            daily_events.append(count)
            seconds = np.sort(event_rng.integers(0, 86400, size=count))
            for s in seconds:
                ts = datetime.combine(day, time(0, 0), tzinfo=timezone.utc) + timedelta(
                    seconds=int(s)
                )
                fh.write(
                    json.dumps(
                        {
                            "org": config.org,
                            "event_type": config.event_type,
                            "occurred_at": format_timestamp(ts),
                        }
                    )
                    + "\n"
                )
                n_events += 1

    lexicon_dir = write_builtin_lexicons(os.path.join(outdir, "lexicons"))

    # realized signal-to-noise of the planted dependence: swing of the true
    # rate against the Poisson noise at the mean rate
    snr = float(np.std(event_rates) / math.sqrt(max(float(np.mean(event_rates)), 1e-12)))

    manifest = {
        "config": _config_dict(config),
        "n_days": n_days,
        "post_counts": {str(fid): post_counts[fid] for fid in sorted(post_counts)},
        "total_posts": sum(post_counts.values()),
        "total_events": n_events,
        "daily_event_counts": daily_events,
        "event_rates": [float(r) for r in event_rates],
        "driving_state": [float(v) for v in driving],
        "snr": snr,
    }
    manifest_path = os.path.join(outdir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return SynthResult(
        posts_path=posts_path,
        events_path=events_path,
        manifest_path=manifest_path,
        lexicon_dir=lexicon_dir,
        manifest=manifest,
    )


def _config_dict(config: SynthConfig) -> Dict:
    raw = asdict(config)
    raw["start"] = config.start.isoformat()
    raw["end"] = config.end.isoformat()
    return raw
