"""Lexicon-driven post scoring: valence, strength pair, and tone ratio.

Three scorers share one tokenizer.  Each returns a per-post scalar:

* ``vader``  - rule-adjusted valence sum, normalized into (0, 1), neutral 0.5
* ``senti``  - strongest positive minus strongest negative strength, in [-4, 4]
* ``tone``   - 100 * pos_hits / (pos_hits + neg_hits), neutral 50

Rule constants are parameters (ValenceRules), not hard-coded literals.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Sequence, Tuple

log = logging.getLogger(__name__)

METHODS = ("vader", "senti", "tone")


class LexiconError(ValueError):
    """Base for lexicon file problems."""


class StrengthOutOfRange(LexiconError):
    pass


# ---------------------------------------------------------------------------
# tokenizer

# A word is a letter run (apostrophes/hyphens allowed inside); a run of '!'
# immediately after the word is recorded on that token.
_TOKEN_RE = re.compile(r"([A-Za-z][A-Za-z'\-]*)(!*)")


@dataclass(frozen=True)
class Token:
    word: str          # lowercased
    bangs: int = 0     # count of '!' immediately trailing the word
    caps: bool = False # original word was all caps (len > 1)


def tokenize(text: str) -> List[Token]:
    """Lowercased word tokens with trailing-'!' counts and all-caps flags."""
    tokens: List[Token] = []
    for match in _TOKEN_RE.finditer(text):
        word, bangs = match.group(1), match.group(2)
        tokens.append(
            Token(
                word=word.lower(),
                bangs=len(bangs),
                caps=word.isupper() and len(word) > 1,
            )
        )
    return tokens


# ---------------------------------------------------------------------------
# lexicon types and loaders


@dataclass(frozen=True)
class ToneLexicon:
    positive: FrozenSet[str]
    negative: FrozenSet[str]


@dataclass
class LexiconSet:
    """Everything the three scorers need, as loaded from a lexicon directory."""

    valence: Dict[str, float] = field(default_factory=dict)
    boosters: Dict[str, float] = field(default_factory=dict)
    negations: FrozenSet[str] = frozenset()
    strength: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    tone: ToneLexicon = field(default_factory=lambda: ToneLexicon(frozenset(), frozenset()))


# Standard filenames inside a lexicon directory.
LEXICON_FILES = {
    "valence": "valence.tsv",
    "booster": "boosters.tsv",
    "negation": "negations.txt",
    "strength": "strength.tsv",
    "tone": "tone.tsv",
}


def _tsv_rows(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line.split("\t")


def load_lexicon(path: str, kind: str):
    """Load one lexicon file; duplicate tokens keep the last entry (warned).

    Kinds: valence (token<TAB>float), booster (token<TAB>float in (-1, 1)),
    negation (one token per line), strength (token<TAB>pos<TAB>neg, each in
    1..5), tone (token<TAB>pos|neg).
    """
    if kind == "negation":
        seen = set()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                word = line.strip().lower()
                if word and not word.startswith("#"):
                    seen.add(word)
        return frozenset(seen)

    if kind in ("valence", "booster"):
        out: Dict[str, float] = {}
        dupes = 0
        for lineno, cols in _tsv_rows(path):
            if len(cols) != 2:
                raise LexiconError(f"{path}:{lineno}: expected token<TAB>value")
            token = cols[0].strip().lower()
            try:
                value = float(cols[1])
            except ValueError as exc:
                raise LexiconError(f"{path}:{lineno}: non-numeric value {cols[1]!r}") from exc
            if kind == "booster" and not (-1.0 < value < 1.0):
                raise LexiconError(f"{path}:{lineno}: booster modifier {value} outside (-1, 1)")
            if token in out:
                dupes += 1
            out[token] = value
        if dupes:
            log.warning("%s: %d duplicate tokens, last entry wins", path, dupes)
        return out

    if kind == "strength":
        pairs: Dict[str, Tuple[int, int]] = {}
        dupes = 0
        for lineno, cols in _tsv_rows(path):
            if len(cols) != 3:
                raise LexiconError(f"{path}:{lineno}: expected token<TAB>pos<TAB>neg")
            token = cols[0].strip().lower()
            try:
                pos, neg = int(cols[1]), int(cols[2])
            except ValueError as exc:
                raise LexiconError(f"{path}:{lineno}: non-integer strength") from exc
            if not (1 <= pos <= 5) or not (1 <= neg <= 5):
                raise StrengthOutOfRange(f"{path}:{lineno}: strengths {pos},{neg} outside 1..5")
            if token in pairs:
                dupes += 1
            pairs[token] = (pos, neg)
        if dupes:
            log.warning("%s: %d duplicate tokens, last entry wins", path, dupes)
        return pairs

    if kind == "tone":
        pos, neg = set(), set()
        for lineno, cols in _tsv_rows(path):
            if len(cols) != 2 or cols[1] not in ("pos", "neg"):
                raise LexiconError(f"{path}:{lineno}: expected token<TAB>pos|neg")
            token = cols[0].strip().lower()
            pos.discard(token)
            neg.discard(token)
            (pos if cols[1] == "pos" else neg).add(token)
        return ToneLexicon(positive=frozenset(pos), negative=frozenset(neg))

    raise ValueError(f"unknown lexicon kind {kind!r}")


def load_lexicon_dir(path: str) -> LexiconSet:
    import os

    return LexiconSet(
        valence=load_lexicon(os.path.join(path, LEXICON_FILES["valence"]), "valence"),
        boosters=load_lexicon(os.path.join(path, LEXICON_FILES["booster"]), "booster"),
        negations=load_lexicon(os.path.join(path, LEXICON_FILES["negation"]), "negation"),
        strength=load_lexicon(os.path.join(path, LEXICON_FILES["strength"]), "strength"),
        tone=load_lexicon(os.path.join(path, LEXICON_FILES["tone"]), "tone"),
    )


# ---------------------------------------------------------------------------
# valence scorer


@dataclass(frozen=True)
class ValenceRules:
    """Adjustment constants for the valence scorer.  Defaults are the shipped
    behavior; override to recalibrate without touching code."""

    bang_bump: float = 0.292       # per trailing '!' on a sentiment token
    max_bangs: int = 3
    caps_bump: float = 0.733       # all-caps sentiment token amid non-caps
    negation_scalar: float = -0.74 # flip+damp when negated within the trigram
    but_before: float = 0.5        # down-weight tokens before 'but'
    but_after: float = 1.5         # up-weight tokens after 'but'
    trigram: int = 3               # look-back for boosters and negations
    norm_alpha: float = 15.0       # sum -> (-1, 1) normalization scale


DEFAULT_RULES = ValenceRules()


def score_valence(text: str, lexicon: LexiconSet, rules: ValenceRules = DEFAULT_RULES) -> float:
    """Rule-adjusted valence in (0, 1); 0.5 is neutral (no lexicon hits).

    Per sentiment-bearing token: trailing bangs and an all-caps form (when the
    text is not uniformly caps) add emphasis toward the token's sign; boosters
    in the preceding trigram add their modifier toward the sign; a negation in
    the preceding trigram multiplies by the negation scalar.  Tokens before a
    'but' are down-weighted and tokens after it up-weighted.  The adjusted sum
    s maps to s / sqrt(s^2 + alpha), then affinely onto (0, 1).
    """
    tokens = tokenize(text)
    if not tokens:
        return 0.5
    mixed_caps = any(t.caps for t in tokens) and any(not t.caps for t in tokens)
    try:
        but_index = next(i for i, t in enumerate(tokens) if t.word == "but")
    except StopIteration:
        but_index = None

    total = 0.0
    for i, tok in enumerate(tokens):
        if tok.word not in lexicon.valence:
            continue
        v = lexicon.valence[tok.word]
        sign = 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)
        if tok.caps and mixed_caps:
            v += sign * rules.caps_bump
        if tok.bangs:
            v += sign * rules.bang_bump * min(tok.bangs, rules.max_bangs)
        lo = max(0, i - rules.trigram)
        for prev in tokens[lo:i]:
            if prev.word in lexicon.boosters:
                v += sign * lexicon.boosters[prev.word]
        if any(prev.word in lexicon.negations for prev in tokens[lo:i]):
            v *= rules.negation_scalar
        if but_index is not None:
            if i < but_index:
                v *= rules.but_before
            elif i > but_index:
                v *= rules.but_after
        total += v

    normalized = total / math.sqrt(total * total + rules.norm_alpha)
    return (normalized + 1.0) / 2.0


# ---------------------------------------------------------------------------
# strength and tone scorers


def score_strength(text: str, lexicon: LexiconSet) -> int:
    """Strongest positive minus strongest negative strength, in [-4, 4].

    Both maxima default to 1 when nothing matches, so an empty or neutral
    post scores 0.
    """
    pos_max, neg_max = 1, 1
    for tok in tokenize(text):
        hit = lexicon.strength.get(tok.word)
        if hit is not None:
            pos_max = max(pos_max, hit[0])
            neg_max = max(neg_max, hit[1])
    return pos_max - neg_max


def score_tone(text: str, lexicon: LexiconSet) -> float:
    """Positive share of tone hits on a 0..100 scale; 50 when no hits."""
    pos = neg = 0
    for tok in tokenize(text):
        if tok.word in lexicon.tone.positive:
            pos += 1
        elif tok.word in lexicon.tone.negative:
            neg += 1
    if pos + neg == 0:
        return 50.0
    return 100.0 * pos / (pos + neg)


def score_post(text: str, lexicon: LexiconSet, method: str, rules: ValenceRules = DEFAULT_RULES) -> float:
    if method == "vader":
        return score_valence(text, lexicon, rules)
    if method == "senti":
        return float(score_strength(text, lexicon))
    if method == "tone":
        return score_tone(text, lexicon)
    raise ValueError(f"unknown scoring method {method!r}; expected one of {METHODS}")


# ---------------------------------------------------------------------------
# batch scoring


@dataclass(frozen=True)
class ScoredPost:
    forum_id: int
    posted_at: object  # datetime; kept loose to avoid importing corpus here
    scores: Tuple[float, ...]  # aligned with the methods tuple passed in


def _score_chunk(args) -> List[Tuple[int, Tuple[float, ...]]]:
    chunk, lexicon, methods, rules = args
    out = []
    for idx, text in chunk:
        out.append((idx, tuple(score_post(text, lexicon, m, rules) for m in methods)))
    return out


def score_posts(
    posts: Sequence,
    lexicon: LexiconSet,
    methods: Sequence[str] = METHODS,
    rules: ValenceRules = DEFAULT_RULES,
    workers: int = 1,
) -> List[ScoredPost]:
    """Score a post sequence with each method; output order mirrors input.

    workers > 1 fans text scoring out to processes in fixed-size chunks;
    results are reassembled by input index so the output is identical to the
    serial path.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown scoring method {m!r}")
    texts = [(i, p.text) for i, p in enumerate(posts)]
    results: List[Tuple[float, ...] | None] = [None] * len(texts)
    if workers <= 1 or len(texts) < 2000:
        for idx, text in texts:
            results[idx] = tuple(score_post(text, lexicon, m, rules) for m in methods)
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunk_size = max(1, len(texts) // (workers * 8))
        chunks = [
            (texts[i : i + chunk_size], lexicon, tuple(methods), rules)
            for i in range(0, len(texts), chunk_size)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk_result in pool.map(_score_chunk, chunks):
                for idx, scores in chunk_result:
                    results[idx] = scores
    return [
        ScoredPost(forum_id=p.forum_id, posted_at=p.posted_at, scores=results[i])
        for i, p in enumerate(posts)
    ]
