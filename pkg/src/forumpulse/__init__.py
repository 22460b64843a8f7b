"""Forum sentiment signals, lag screening, and event-warning forecasts.

Subpackages are imported lazily; pull in what you need, e.g.::

    from forumpulse import corpus, sentiment, signal
"""

__version__ = "0.1.0"

__all__ = [
    "corpus",
    "sentiment",
    "lexicons",
    "signal",
    "screen",
    "forecast",
    "evaluate",
    "synth",
    "config",
    "cli",
]
