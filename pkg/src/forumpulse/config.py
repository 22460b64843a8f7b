"""Run configuration: defaults, plain-text config files, CLI overrides.

Config files are `key = value` lines (# comments allowed).  Values given on
the command line override file values, which override the defaults below.
Every command that writes outputs also writes the fully resolved
configuration next to them, so a run can be reproduced from its artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from datetime import date
from typing import Callable, Dict, Mapping, Tuple


class ConfigError(ValueError):
    pass


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_methods(raw: str) -> Tuple[str, ...]:
    out = tuple(m.strip() for m in raw.split(",") if m.strip())
    if not out:
        raise ConfigError("methods list is empty")
    return out


@dataclass(frozen=True)
class RunConfig:
    # data
    posts: str = ""
    events: str = ""
    lexicons: str = ""        # empty string means the built-in tables
    start: date = date(2016, 1, 1)
    end: date = date(2018, 1, 31)
    org: str = ""             # empty means every org in the events file
    event_type: str = ""      # empty means every event type present
    # signals
    window: int = 7
    methods: Tuple[str, ...] = ("vader", "senti", "tone")
    # screening
    max_lag: int = 30
    p_max: float = 1e-4
    min_consecutive: int = 2
    max_exog_signals: int = 5
    # forecasting
    p_order_max: int = 5
    d_order_max: int = 2
    q_order_max: int = 5
    # evaluation
    matcher: str = "optimal"
    top_k: int = 5
    with_baselines: bool = True
    # backtest plan
    train_start: date = date(2016, 4, 1)
    train_end: date = date(2017, 5, 31)
    first_month: date = date(2017, 7, 1)
    last_month: date = date(2018, 1, 1)
    # runtime
    workers: int = 1

    def validated(self) -> "RunConfig":
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.max_lag < 0:
            raise ConfigError("max_lag must be >= 0")
        if not (0.0 < self.p_max <= 1.0):
            raise ConfigError("p_max must be in (0, 1]")
        if self.min_consecutive < 1:
            raise ConfigError("min_consecutive must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.matcher not in ("optimal", "greedy"):
            raise ConfigError("matcher must be 'optimal' or 'greedy'")
        if min(self.p_order_max, self.d_order_max, self.q_order_max) < 0:
            raise ConfigError("order grid bounds must be >= 0")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        for m in self.methods:
            if m not in ("vader", "senti", "tone"):
                raise ConfigError(f"unknown method {m!r}")
        return self


_PARSERS: Dict[str, Callable[[str], object]] = {
    "posts": str,
    "events": str,
    "lexicons": str,
    "start": date.fromisoformat,
    "end": date.fromisoformat,
    "org": str,
    "event_type": str,
    "window": int,
    "methods": _parse_methods,
    "max_lag": int,
    "p_max": float,
    "min_consecutive": int,
    "max_exog_signals": int,
    "p_order_max": int,
    "d_order_max": int,
    "q_order_max": int,
    "matcher": str,
    "top_k": int,
    "with_baselines": _parse_bool,
    "train_start": date.fromisoformat,
    "train_end": date.fromisoformat,
    "first_month": date.fromisoformat,
    "last_month": date.fromisoformat,
    "workers": int,
}


def read_config_file(path: str) -> Dict[str, str]:
    """Parse `key = value` lines; unknown keys fail fast."""
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value.strip()
    return out


def resolve(
    file_values: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> RunConfig:
    """defaults <- config file <- explicit overrides, then validate."""
    config = RunConfig()
    if file_values:
        parsed = {}
        for key, raw in file_values.items():
            if key not in _PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                parsed[key] = _PARSERS[key](raw)
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
        config = replace(config, **parsed)
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(clean) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise ConfigError(f"unknown config overrides: {sorted(unknown)}")
        config = replace(config, **clean)
    return config.validated()


def to_text(config: RunConfig) -> str:
    """Snapshot form; reading it back through resolve() reproduces config."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            rendered = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, date):
            rendered = value.isoformat()
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def write_snapshot(config: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_text(config))
