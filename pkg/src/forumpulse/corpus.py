"""Post and event corpora: NDJSON parsing, validation, daily bucketing.

Posts are one JSON object per line: {"forum_id": int, "posted_at": ISO-8601 UTC,
"text": str}.  Events are one JSON object per line: {"org": str, "event_type":
one of EVENT_TYPES, "occurred_at": ISO-8601 UTC}.  All timestamps are stored
timezone-aware in UTC; naive inputs are taken as UTC.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Dict, Iterable, Iterator, List, Tuple

import numpy as np

log = logging.getLogger(__name__)

EVENT_TYPES = ("endpoint-malware", "malicious-destination", "malicious-email")


class CorpusError(ValueError):
    """Base for corpus validation failures."""


class InvalidForumId(CorpusError):
    pass


class BadTimestamp(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


class UnknownEventType(CorpusError):
    pass


# ---------------------------------------------------------------------------
# timestamps and day spans


def parse_timestamp(raw: object, lineno: int | None = None) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime.

    Accepts a trailing 'Z', an explicit offset, or a naive value (taken as
    UTC).  Anything else raises BadTimestamp carrying the line number.
    """
    where = f" (line {lineno})" if lineno is not None else ""
    if not isinstance(raw, str):
        raise BadTimestamp(f"timestamp must be a string, got {raw!r}{where}")
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise BadTimestamp(f"unparsable timestamp {raw!r}{where}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """Canonical wire form: UTC with 'Z', microseconds only when nonzero."""
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.isoformat().replace("+00:00", "Z")
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class DateSpan:
    """Inclusive calendar-day range; all daily vectors are indexed against it."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise CorpusError(f"span end {self.end} precedes start {self.start}")

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1

    def day_index(self, ts: datetime | date) -> int:
        d = ts.date() if isinstance(ts, datetime) else ts
        return (d - self.start).days

    def contains(self, ts: datetime | date) -> bool:
        return 0 <= self.day_index(ts) < self.n_days

    def day(self, index: int) -> date:
        return self.start + timedelta(days=index)

    def days(self) -> Iterator[date]:
        for i in range(self.n_days):
            yield self.start + timedelta(days=i)


# ---------------------------------------------------------------------------
# posts


@dataclass(frozen=True)
class Post:
    forum_id: int
    posted_at: datetime
    text: str


def parse_post_line(line: str, lineno: int) -> Post:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON on line {lineno}: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorpusError(f"post record on line {lineno} is not an object")
    missing = {"forum_id", "posted_at", "text"} - obj.keys()
    if missing:
        raise CorpusError(f"post record on line {lineno} missing {sorted(missing)}")
    forum_id = obj["forum_id"]
    if not isinstance(forum_id, int) or isinstance(forum_id, bool) or forum_id <= 0:
        raise InvalidForumId(f"forum_id must be a positive integer, got {forum_id!r} (line {lineno})")
    posted_at = parse_timestamp(obj["posted_at"], lineno)
    text = obj["text"]
    if not isinstance(text, str):
        raise CorpusError(f"post text on line {lineno} is not a string")
    return Post(forum_id=forum_id, posted_at=posted_at, text=text)


@dataclass
class Corpus:
    """Validated posts grouped per forum, each group sorted by timestamp."""

    span: DateSpan
    posts_by_forum: Dict[int, List[Post]]
    n_dropped: int = 0

    @property
    def n_posts(self) -> int:
        return sum(len(v) for v in self.posts_by_forum.values())

    @property
    def forum_ids(self) -> List[int]:
        return sorted(self.posts_by_forum)

    def all_posts(self) -> Iterator[Post]:
        for fid in self.forum_ids:
            yield from self.posts_by_forum[fid]


def load_corpus(path: str, span: DateSpan) -> Corpus:
    """Stream-parse a posts NDJSON file.

    Posts outside the span are dropped with a counted warning; zero valid
    posts raises EmptyCorpus.  Malformed records fail fast with line numbers.
    """
    by_forum: Dict[int, List[Post]] = {}
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            post = parse_post_line(line, lineno)
            if not span.contains(post.posted_at):
                dropped += 1
                continue
            by_forum.setdefault(post.forum_id, []).append(post)
    if dropped:
        log.warning("dropped %d posts outside %s..%s", dropped, span.start, span.end)
    if not by_forum:
        raise EmptyCorpus(f"no posts within {span.start}..{span.end} in {path}")
    for posts in by_forum.values():
        posts.sort(key=lambda p: p.posted_at)
    return Corpus(span=span, posts_by_forum=by_forum, n_dropped=dropped)


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for post in corpus.all_posts():
            fh.write(
                json.dumps(
                    {
                        "forum_id": post.forum_id,
                        "posted_at": format_timestamp(post.posted_at),
                        "text": post.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class EventRecord:
    org: str
    event_type: str
    occurred_at: datetime


@dataclass
class EventSeries:
    """All events for one (org, event_type), timestamps sorted ascending."""

    org: str
    event_type: str
    span: DateSpan
    timestamps: List[datetime] = field(default_factory=list)

    @property
    def n_events(self) -> int:
        return len(self.timestamps)

    def daily_counts(self) -> np.ndarray:
        """Event count per calendar day over the span (zeros where quiet)."""
        counts = np.zeros(self.span.n_days, dtype=np.int64)
        for ts in self.timestamps:
            counts[self.span.day_index(ts)] += 1
        return counts

    def in_window(self, t0: datetime, t1: datetime) -> List[datetime]:
        return [ts for ts in self.timestamps if t0 <= ts <= t1]


def parse_event_line(line: str, lineno: int) -> EventRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON on line {lineno}: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorpusError(f"event record on line {lineno} is not an object")
    missing = {"org", "event_type", "occurred_at"} - obj.keys()
    if missing:
        raise CorpusError(f"event record on line {lineno} missing {sorted(missing)}")
    event_type = obj["event_type"]
    if event_type not in EVENT_TYPES:
        raise UnknownEventType(
            f"unknown event type {event_type!r} (line {lineno}); expected one of {EVENT_TYPES}"
        )
    org = obj["org"]
    if not isinstance(org, str) or not org:
        raise CorpusError(f"event org on line {lineno} must be a nonempty string")
    occurred_at = parse_timestamp(obj["occurred_at"], lineno)
    return EventRecord(org=org, event_type=event_type, occurred_at=occurred_at)


def load_events(path: str, span: DateSpan) -> Dict[Tuple[str, str], EventSeries]:
    """Parse an events NDJSON file into one EventSeries per (org, event_type).

    Events outside the span are dropped with a counted warning.  An empty
    file yields an empty mapping (daily vectors would be all zeros).
    """
    series: Dict[Tuple[str, str], EventSeries] = {}
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = parse_event_line(line, lineno)
            if not span.contains(rec.occurred_at):
                dropped += 1
                continue
            key = (rec.org, rec.event_type)
            if key not in series:
                series[key] = EventSeries(org=rec.org, event_type=rec.event_type, span=span)
            series[key].timestamps.append(rec.occurred_at)
    if dropped:
        log.warning("dropped %d events outside %s..%s", dropped, span.start, span.end)
    for s in series.values():
        s.timestamps.sort()
    return series


def save_events(series: Iterable[EventSeries], path: str) -> None:
    records: List[EventRecord] = []
    for s in series:
        records.extend(EventRecord(s.org, s.event_type, ts) for ts in s.timestamps)
    records.sort(key=lambda r: (r.occurred_at, r.org, r.event_type))
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "org": rec.org,
                        "event_type": rec.event_type,
                        "occurred_at": format_timestamp(rec.occurred_at),
                    }
                )
                + "\n"
            )
