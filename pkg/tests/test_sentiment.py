"""Tokenizer and the three lexicon scorers."""

import math
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from forumpulse.sentiment import (
    DEFAULT_RULES,
    LexiconError,
    StrengthOutOfRange,
    Token,
    load_lexicon,
    score_post,
    score_posts,
    score_strength,
    score_tone,
    score_valence,
    tokenize,
)


def expected_valence(total):
    # adjusted sum through the published normalization onto (0, 1)
    return (total / math.sqrt(total * total + 15.0) + 1.0) / 2.0


# --- tokenizer


def test_tokenize_lowercases_and_flags():
    toks = tokenize("GREAT exploit!!")
    assert toks == [Token("great", 0, True), Token("exploit", 2, False)]


def test_tokenize_keeps_inner_apostrophes_and_hyphens():
    words = [t.word for t in tokenize("zero-day don't care!")]
    assert words == ["zero-day", "don't", "care"]
    assert tokenize("zero-day don't care!")[-1].bangs == 1


def test_tokenize_single_letter_is_not_caps():
    assert tokenize("I win")[0] == Token("i", 0, False)


def test_tokenize_drops_digits_and_symbols():
    assert [t.word for t in tokenize("123 $$$ ...")] == []
    assert tokenize("") == []


# --- valence


def test_empty_text_is_neutral(tiny_lexicon):
    assert score_valence("", tiny_lexicon) == 0.5
    assert score_valence("filler words only", tiny_lexicon) == 0.5


def test_single_positive_token(tiny_lexicon):
    # lexicon value 2.0, nothing else applies
    got = score_valence("good", tiny_lexicon)
    assert abs(got - 0.7294) < 1e-4
    assert got == pytest.approx(expected_valence(2.0), abs=1e-12)


def test_trailing_bangs_amplify(tiny_lexicon):
    one = score_valence("good!", tiny_lexicon)
    two = score_valence("good!!", tiny_lexicon)
    plain = score_valence("good", tiny_lexicon)
    assert plain < one < two
    assert abs(two - 0.7776) < 5e-4
    assert two == pytest.approx(expected_valence(2.0 + 2 * 0.292), abs=1e-12)


def test_bang_count_caps_at_three(tiny_lexicon):
    assert score_valence("good!!!", tiny_lexicon) == score_valence("good!!!!!", tiny_lexicon)


def test_caps_bump_needs_mixed_case_text(tiny_lexicon):
    mixed = score_valence("GOOD deal", tiny_lexicon)
    assert mixed == pytest.approx(expected_valence(2.0 + 0.733), abs=1e-12)
    # uniformly shouted text carries no emphasis contrast
    shouted = score_valence("GOOD DEAL", tiny_lexicon)
    assert shouted == pytest.approx(expected_valence(2.0), abs=1e-12)


def test_negative_token_bangs_push_negative(tiny_lexicon):
    # emphasis moves toward the token's sign, not blindly upward
    assert score_valence("bad!!", tiny_lexicon) < score_valence("bad", tiny_lexicon) < 0.5


def test_negation_flips_and_damps(tiny_lexicon):
    got = score_valence("not good", tiny_lexicon)
    assert got == pytest.approx(expected_valence(2.0 * -0.74), abs=1e-12)
    assert got < 0.5


def test_negation_outside_trigram_is_ignored(tiny_lexicon):
    got = score_valence("not the exploit flow good", tiny_lexicon)
    assert got == pytest.approx(expected_valence(2.0), abs=1e-12)


def test_booster_in_trigram_adds_toward_sign(tiny_lexicon):
    assert score_valence("very good", tiny_lexicon) == pytest.approx(
        expected_valence(2.3), abs=1e-12
    )
    assert score_valence("very bad", tiny_lexicon) == pytest.approx(
        expected_valence(-1.8), abs=1e-12
    )


def test_but_reweights_clauses(tiny_lexicon):
    got = score_valence("bad but good", tiny_lexicon)
    assert got == pytest.approx(expected_valence(-1.5 * 0.5 + 2.0 * 1.5), abs=1e-12)


def test_valence_stays_inside_open_interval(tiny_lexicon):
    heavy = " ".join(["good!!!"] * 200)
    assert 0.5 < score_valence(heavy, tiny_lexicon) < 1.0
    grim = " ".join(["awful"] * 200)
    assert 0.0 < score_valence(grim, tiny_lexicon) < 0.5


# --- strength


def test_strength_combination(tiny_lexicon):
    assert score_strength("love this", tiny_lexicon) == 4   # (5,1)
    assert score_strength("okay stuff", tiny_lexicon) == 0  # (1,1)
    assert score_strength("hate it", tiny_lexicon) == -4    # (1,5)
    # maxima combine across tokens: (1,5) with (3,1) gives 3 - 5
    assert score_strength("hate risky", tiny_lexicon) == -2
    assert score_strength("", tiny_lexicon) == 0


def test_strength_full_grid(tmp_path):
    # token names must survive the letters-only tokenizer
    name = lambda p, n: "w" + "abcde"[p - 1] + "abcde"[n - 1]
    rows = [f"{name(p, n)}\t{p}\t{n}" for p in range(1, 6) for n in range(1, 6)]
    path = tmp_path / "strength.tsv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    table = load_lexicon(str(path), "strength")
    from forumpulse.sentiment import LexiconSet

    lex = LexiconSet(strength=table)
    for p in range(1, 6):
        for n in range(1, 6):
            assert score_strength(name(p, n), lex) == p - n


# --- tone


def test_tone_ratio(tiny_lexicon):
    assert score_tone("win safe win fail", tiny_lexicon) == 75.0
    assert score_tone("no hits here", tiny_lexicon) == 50.0
    assert score_tone("win win", tiny_lexicon) == 100.0
    assert score_tone("fail", tiny_lexicon) == 0.0


# --- dispatch and batch scoring


def test_score_post_rejects_unknown_method(tiny_lexicon):
    with pytest.raises(ValueError):
        score_post("good", tiny_lexicon, "bert")


class _Stub:
    def __init__(self, fid, ts, text):
        self.forum_id = fid
        self.posted_at = ts
        self.text = text


def test_score_posts_keeps_input_order(tiny_lexicon):
    ts = datetime(2016, 1, 1, tzinfo=timezone.utc)
    posts = [_Stub(1, ts, "good"), _Stub(1, ts, "bad"), _Stub(2, ts, "")]
    scored = score_posts(posts, tiny_lexicon, ("vader", "senti", "tone"))
    assert [s.forum_id for s in scored] == [1, 1, 2]
    assert scored[0].scores[0] > 0.5 > scored[1].scores[0]
    assert scored[2].scores == (0.5, 0.0, 50.0)


def test_score_posts_parallel_matches_serial(tiny_lexicon):
    ts = datetime(2016, 1, 1, tzinfo=timezone.utc)
    texts = ["good stuff", "not good", "hate risky", "win fail", "plain words"]
    posts = [_Stub(1 + i % 3, ts, texts[i % len(texts)]) for i in range(2100)]
    serial = score_posts(posts, tiny_lexicon, workers=1)
    parallel = score_posts(posts, tiny_lexicon, workers=2)
    assert [s.scores for s in serial] == [s.scores for s in parallel]


# --- lexicon loading errors


def test_booster_modifier_range(tmp_path):
    path = tmp_path / "boosters.tsv"
    path.write_text("very\t1.5\n", encoding="utf-8")
    with pytest.raises(LexiconError):
        load_lexicon(str(path), "booster")


def test_strength_out_of_range(tmp_path):
    path = tmp_path / "strength.tsv"
    path.write_text("w\t0\t5\n", encoding="utf-8")
    with pytest.raises(StrengthOutOfRange):
        load_lexicon(str(path), "strength")


def test_valence_non_numeric(tmp_path):
    path = tmp_path / "valence.tsv"
    path.write_text("good\tmany\n", encoding="utf-8")
    with pytest.raises(LexiconError):
        load_lexicon(str(path), "valence")


def test_duplicate_tokens_keep_last(tmp_path):
    path = tmp_path / "valence.tsv"
    path.write_text("good\t1.0\ngood\t2.5\n", encoding="utf-8")
    assert load_lexicon(str(path), "valence") == {"good": 2.5}


def test_comments_and_blanks_are_skipped(tmp_path):
    path = tmp_path / "valence.tsv"
    path.write_text("# header\n\ngood\t2.0\n", encoding="utf-8")
    assert load_lexicon(str(path), "valence") == {"good": 2.0}


# --- properties


@given(st.text(max_size=200))
def test_valence_always_in_unit_interval(lexicon, text):
    assert 0.0 < score_valence(text, lexicon) < 1.0


@given(st.text(max_size=200))
def test_strength_always_in_band(lexicon, text):
    got = score_strength(text, lexicon)
    assert isinstance(got, int)
    assert -4 <= got <= 4


@given(st.text(max_size=200))
def test_tone_always_in_band(lexicon, text):
    assert 0.0 <= score_tone(text, lexicon) <= 100.0
