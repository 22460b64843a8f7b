"""Compact built-in lexicons and TSV writers.

These tables are small on purpose: enough coverage for synthetic corpora,
demos, and tests.  Real deployments should point the CLI at a full lexicon
directory instead.  Token pools at the bottom are what the synthetic
generator draws from; pool membership is aligned with all three lexicons so
every scoring method sees the planted polarity.
"""

from __future__ import annotations

import os
from typing import Dict, FrozenSet, Tuple

from .sentiment import LEXICON_FILES, LexiconSet, ToneLexicon

# token -> valence, roughly on a -4..4 scale
VALENCE: Dict[str, float] = {
    "great": 3.1,
    "excellent": 3.2,
    "awesome": 3.1,
    "perfect": 3.0,
    "brilliant": 2.8,
    "love": 3.2,
    "win": 2.8,
    "success": 2.7,
    "solid": 2.2,
    "stable": 1.9,
    "clean": 1.7,
    "works": 1.8,
    "good": 1.9,
    "nice": 1.8,
    "happy": 2.7,
    "thanks": 1.9,
    "free": 1.4,
    "fast": 1.3,
    "awful": -3.1,
    "terrible": -3.1,
    "worst": -3.4,
    "hate": -2.7,
    "broken": -2.2,
    "fail": -2.5,
    "fails": -2.5,
    "scam": -2.9,
    "garbage": -2.5,
    "angry": -2.3,
    "bad": -2.1,
    "ripoff": -2.8,
    "useless": -2.2,
    "crash": -2.0,
    "slow": -1.4,
    "banned": -2.1,
    "leak": -1.6,
}

# token -> additive modifier in (-1, 1); negative entries are dampeners
BOOSTERS: Dict[str, float] = {
    "very": 0.293,
    "really": 0.267,
    "extremely": 0.4,
    "absolutely": 0.35,
    "totally": 0.3,
    "so": 0.2,
    "super": 0.35,
    "slightly": -0.293,
    "somewhat": -0.2,
    "barely": -0.3,
    "kinda": -0.25,
}

NEGATIONS: Tuple[str, ...] = (
    "not",
    "no",
    "never",
    "none",
    "nothing",
    "cannot",
    "cant",
    "wont",
    "dont",
    "doesnt",
    "isnt",
    "wasnt",
    "aint",
    "neither",
    "nor",
    "hardly",
    "without",
)

# token -> (positive strength, negative strength), each 1..5
STRENGTH: Dict[str, Tuple[int, int]] = {
    "great": (4, 1),
    "excellent": (5, 1),
    "awesome": (5, 1),
    "perfect": (5, 1),
    "brilliant": (4, 1),
    "love": (4, 1),
    "win": (4, 1),
    "success": (4, 1),
    "solid": (3, 1),
    "stable": (3, 1),
    "clean": (2, 1),
    "works": (3, 1),
    "good": (3, 1),
    "nice": (3, 1),
    "happy": (4, 1),
    "thanks": (2, 1),
    "awful": (1, 4),
    "terrible": (1, 5),
    "worst": (1, 5),
    "hate": (1, 4),
    "broken": (1, 3),
    "fail": (1, 4),
    "fails": (1, 4),
    "scam": (1, 4),
    "garbage": (1, 4),
    "angry": (1, 3),
    "bad": (1, 3),
    "ripoff": (1, 4),
    "useless": (1, 3),
    "crash": (1, 3),
    "slow": (1, 2),
    "banned": (1, 3),
}

TONE_POSITIVE: FrozenSet[str] = frozenset(
    {
        "great",
        "excellent",
        "awesome",
        "perfect",
        "brilliant",
        "love",
        "win",
        "success",
        "solid",
        "stable",
        "clean",
        "works",
        "good",
        "nice",
        "happy",
        "thanks",
        "free",
        "fast",
        "fixed",
    }
)

TONE_NEGATIVE: FrozenSet[str] = frozenset(
    {
        "awful",
        "terrible",
        "worst",
        "hate",
        "broken",
        "fail",
        "fails",
        "scam",
        "garbage",
        "angry",
        "bad",
        "ripoff",
        "useless",
        "crash",
        "slow",
        "banned",
        "leak",
    }
)


def builtin_lexicon_set() -> LexiconSet:
    return LexiconSet(
        valence=dict(VALENCE),
        boosters=dict(BOOSTERS),
        negations=frozenset(NEGATIONS),
        strength=dict(STRENGTH),
        tone=ToneLexicon(positive=TONE_POSITIVE, negative=TONE_NEGATIVE),
    )


def write_builtin_lexicons(directory: str) -> str:
    """Write the built-in tables as a standard lexicon directory; returns it."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, LEXICON_FILES["valence"]), "w", encoding="utf-8") as fh:
        for token in sorted(VALENCE):
            fh.write(f"{token}\t{VALENCE[token]}\n")
    with open(os.path.join(directory, LEXICON_FILES["booster"]), "w", encoding="utf-8") as fh:
        for token in sorted(BOOSTERS):
            fh.write(f"{token}\t{BOOSTERS[token]}\n")
    with open(os.path.join(directory, LEXICON_FILES["negation"]), "w", encoding="utf-8") as fh:
        for token in NEGATIONS:
            fh.write(token + "\n")
    with open(os.path.join(directory, LEXICON_FILES["strength"]), "w", encoding="utf-8") as fh:
        for token in sorted(STRENGTH):
            pos, neg = STRENGTH[token]
            fh.write(f"{token}\t{pos}\t{neg}\n")
    with open(os.path.join(directory, LEXICON_FILES["tone"]), "w", encoding="utf-8") as fh:
        for token in sorted(TONE_POSITIVE):
            fh.write(f"{token}\tpos\n")
        for token in sorted(TONE_NEGATIVE):
            fh.write(f"{token}\tneg\n")
    return directory


# ---------------------------------------------------------------------------
# pools for the synthetic generator

# Tokens recognized as positive/negative by every scoring method.
POSITIVE_POOL: Tuple[str, ...] = (
    "great",
    "excellent",
    "awesome",
    "perfect",
    "love",
    "win",
    "success",
    "good",
    "nice",
    "happy",
)

NEGATIVE_POOL: Tuple[str, ...] = (
    "awful",
    "terrible",
    "worst",
    "hate",
    "fail",
    "scam",
    "garbage",
    "bad",
    "ripoff",
    "useless",
)

# Tokens absent from every lexicon; sentiment-neutral filler.
NEUTRAL_POOL: Tuple[str, ...] = (
    "the",
    "a",
    "this",
    "that",
    "server",
    "thread",
    "post",
    "update",
    "release",
    "link",
    "file",
    "user",
    "admin",
    "forum",
    "page",
    "data",
    "tool",
    "test",
    "run",
    "batch",
    "patch",
    "login",
    "key",
    "hash",
    "dump",
    "shell",
    "proxy",
    "node",
    "setup",
    "config",
)
