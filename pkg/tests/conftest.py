"""Shared fixtures: a hand-sized lexicon, the default planted dataset, and
the scored pipeline that the end-to-end tests reuse instead of rebuilding."""

from datetime import date
from types import SimpleNamespace

import pytest
from hypothesis import settings

from forumpulse import _kernels, corpus as corpus_mod, evaluate, screen, signal, synth
from forumpulse.lexicons import builtin_lexicon_set
from forumpulse.sentiment import load_lexicon_dir

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

TRAIN_START = date(2016, 4, 1)
TRAIN_END = date(2017, 5, 31)
FIRST_MONTH = date(2017, 7, 1)
LAST_MONTH = date(2018, 1, 1)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile outside any timed assertion
    _kernels.warmup()


@pytest.fixture(scope="session")
def lexicon():
    return builtin_lexicon_set()


def write_tiny_lexicon(root) -> str:
    """Five-file lexicon directory small enough to score by hand."""
    root.mkdir(exist_ok=True)
    (root / "valence.tsv").write_text(
        "good\t2.0\nbad\t-1.5\ngreat\t2.0\nawful\t-2.5\n", encoding="utf-8"
    )
    (root / "boosters.tsv").write_text("very\t0.3\nslightly\t-0.2\n", encoding="utf-8")
    (root / "negations.txt").write_text("not\nnever\n", encoding="utf-8")
    (root / "strength.tsv").write_text(
        "love\t5\t1\nhate\t1\t5\nokay\t1\t1\nrisky\t3\t1\n", encoding="utf-8"
    )
    (root / "tone.tsv").write_text("win\tpos\nsafe\tpos\nfail\tneg\n", encoding="utf-8")
    return str(root)


@pytest.fixture()
def tiny_lexicon(tmp_path):
    return load_lexicon_dir(write_tiny_lexicon(tmp_path / "lex"))


@pytest.fixture(scope="session")
def planted_dataset(tmp_path_factory):
    """Default-config synthetic dataset (seed 7), generated once."""
    out = tmp_path_factory.mktemp("planted")
    cfg = synth.SynthConfig()
    return cfg, synth.generate(cfg, str(out))


def build_pipeline(cfg, posts_path, events_path, lexicon_dir):
    """Corpus -> signals -> screen -> exog picks, exactly as the CLI wires it.

    Standardization and screening stats come from the training window only;
    candidate order is (p, |r| descending, name) and the top five become
    exogenous regressors.
    """
    span = corpus_mod.DateSpan(cfg.start, cfg.end)
    corp = corpus_mod.load_corpus(posts_path, span)
    lex = load_lexicon_dir(lexicon_dir)
    lo = span.day_index(TRAIN_START)
    hi = span.day_index(TRAIN_END) + 1
    sigs = signal.build_signals(corp, lex, 7, lo, hi)
    ev = corpus_mod.load_events(events_path, span)[(cfg.org, cfg.event_type)]
    counts = ev.daily_counts().astype(float)
    scans = []
    for s in sigs:
        scans.extend(screen.lagged_scan(s, counts, cfg.org, cfg.event_type, lo=lo, hi=hi))
    cands = screen.select_candidates(scans, 1e-4, 2)
    cands.sort(key=lambda c: (c.best_p, -abs(c.best_r), c.name))
    by_key = {(s.forum_id, s.method): s for s in sigs}
    exogs = [evaluate.ExogSpec(by_key[(c.forum_id, c.method)], c.best_lag) for c in cands[:5]]
    return SimpleNamespace(
        span=span,
        corpus=corp,
        lexicon=lex,
        fit_lo=lo,
        fit_hi=hi,
        signals=sigs,
        events=ev,
        scans=scans,
        candidates=cands,
        exogs=exogs,
    )


@pytest.fixture(scope="session")
def pipeline(planted_dataset):
    cfg, res = planted_dataset
    return build_pipeline(cfg, res.posts_path, res.events_path, res.lexicon_dir)


@pytest.fixture(scope="session")
def clean_backtest(pipeline):
    """Backtest of the planted dataset with the audit trail switched on."""
    plan = evaluate.BacktestPlan(TRAIN_START, TRAIN_END, FIRST_MONTH, LAST_MONTH)
    audit = []
    scores = evaluate.rolling_backtest(pipeline.exogs, pipeline.events, plan, audit=audit)
    return scores, audit
