"""Deterministic synthetic cohorts: transcripts, per-session scores and
quarterly label records with a configurable category signal.

Each user gets a base category (largest-remainder apportionment of the
requested proportions). At every relabelling after the first, the user's
category may drift to a neighbour (one label flipped) for that period.
Scores are drawn around per-category means, and transcripts are assembled
from lexicon terms in the counts needed for the lexicon scorer to recover
those scores up to token quantisation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .extraction.lexicon import Lexicon, default_lexicon
from .extraction.scores import RATIO_FEATURES, RawFeatureScores, write_scores
from .ingestion import (
    BOT,
    HUMAN,
    Interaction,
    LabelRecord,
    Session,
    make_corpus,
    write_corpus,
    write_labels,
)
from .multilabel import CATEGORIES, Category, to_category, to_pair

# sessions per category in the reference cohort
REFERENCE_COUNTS = {
    Category.NONE_NONE: 1287,
    Category.ANXIETY_NONE: 542,
    Category.NONE_DEPRESSION: 29,
    Category.ANXIETY_DEPRESSION: 328,
}
DEFAULT_PROPORTIONS = {c: n / 2186 for c, n in REFERENCE_COUNTS.items()}


@lru_cache(maxsize=None)
def _means_file() -> dict:
    text = resources.files("dialogscreen.data").joinpath("category_means.json").read_text(encoding="utf-8")
    return json.loads(text)


def category_mean(category: Category, signal_strength: float) -> np.ndarray:
    means = _means_file()
    pair = to_pair(category)
    mean = np.array([means["base"][f] for f in RATIO_FEATURES])
    for flag, key in ((pair.anxiety, "anxiety"), (pair.depression, "depression")):
        if flag:
            mean += signal_strength * np.array([means[key].get(f, 0.0) for f in RATIO_FEATURES])
    return np.clip(mean, 0.0, 1.0)


@dataclass
class CohortConfig:
    n_users: int = 32
    sessions_mean: int = 68
    sessions_spread: int = 12
    proportions: dict = field(default_factory=lambda: dict(DEFAULT_PROPORTIONS))
    signal_strength: float = 0.8
    seed: int = 42
    relabel_days: int = 90
    drift_probability: float = 0.08
    human_turns: tuple = (4, 24)
    words_per_turn: int = 8
    start: date = date(2023, 5, 16)

    def __post_init__(self):
        self.proportions = {Category(k): float(v) for k, v in self.proportions.items()}
        if any(v < 0 for v in self.proportions.values()):
            raise DataError("category proportions must be non-negative")
        if abs(sum(self.proportions.values()) - 1.0) > 1e-9:
            raise DataError("category proportions must sum to 1")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise DataError("signal_strength must lie in [0, 1]")
        if self.sessions_mean - self.sessions_spread < 1:
            raise DataError("every user needs at least one session")


@dataclass
class Cohort:
    corpus: object
    scores: dict
    labels: list
    user_categories: dict

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"corpus": out / "corpus.jsonl", "labels": out / "labels.jsonl", "scores": out / "scores.jsonl"}
        write_corpus(self.corpus, paths["corpus"])
        write_labels(self.labels, paths["labels"])
        write_scores(self.scores, paths["scores"])
        return paths


def apportion_users(n_users: int, proportions: dict) -> dict:
    """Largest-remainder user counts per category (ties by category order)."""
    if n_users < 1:
        raise DataError(f"cannot build a cohort of {n_users} users")
    exact = {c: n_users * proportions.get(c, 0.0) for c in CATEGORIES}
    counts = {c: math.floor(v) for c, v in exact.items()}
    for c in sorted(CATEGORIES, key=lambda c: (-(exact[c] - counts[c]), c.code))[: n_users - sum(counts.values())]:
        counts[c] += 1
    return counts


def _draw_scores(rng, category, signal_strength, noise) -> np.ndarray:
    mean = category_mean(category, signal_strength)
    return np.clip(mean + rng.uniform(-noise, noise, size=mean.shape), 0.0, 1.0)


def _term_counts(ratios: np.ndarray, n_tokens: int, lexicon: Lexicon) -> dict:
    counts = {}
    for f, r in zip(RATIO_FEATURES, ratios):
        gain = lexicon.repeat_gain if f == "repeated_concepts" else lexicon.gains[f]
        counts[f] = int(round(r * n_tokens / gain))
    return counts


def _polarity(counts: dict, n_tokens: int, lexicon: Lexicon) -> int:
    balance = (sum(counts[f] for f in lexicon.positive) - sum(counts[f] for f in lexicon.negative)) / n_tokens
    if balance > lexicon.threshold:
        return 2
    if balance < -lexicon.threshold:
        return 0
    return 1


def _human_turns(rng, ratios, n_turns, words_per_turn, lexicon, vocab) -> tuple:
    n_tokens = n_turns * words_per_turn
    while True:
        counts = _term_counts(ratios, n_tokens, lexicon)
        repeats = counts["repeated_concepts"]
        used = sum(v for f, v in counts.items() if f != "repeated_concepts") + (repeats + 1 if repeats else 0)
        if used <= n_tokens:
            break
        n_tokens += n_turns
    tokens = []
    for f, k in counts.items():
        if f == "repeated_concepts" or k == 0:
            continue
        terms = sorted(lexicon.terms[f])
        tokens.extend(terms[i] for i in rng.integers(0, len(terms), size=k))
    if repeats:
        tokens.extend([vocab["topics"][rng.integers(len(vocab["topics"]))]] * (repeats + 1))
    fillers = vocab["fillers"]
    tokens.extend(fillers[i] for i in rng.integers(0, len(fillers), size=n_tokens - len(tokens)))
    tokens = [tokens[i] for i in rng.permutation(len(tokens))]
    bounds = np.linspace(0, len(tokens), n_turns + 1).round().astype(int)
    turns = [" ".join(tokens[a:b]).capitalize() + "." for a, b in zip(bounds, bounds[1:]) if b > a]
    return turns, _polarity(counts, n_tokens, lexicon)


def _session(rng, session_id, user_id, start, ratios, config, lexicon, vocab) -> tuple:
    n_turns = int(rng.integers(config.human_turns[0], config.human_turns[1] + 1))
    turns, polarity = _human_turns(rng, ratios, n_turns, config.words_per_turn, lexicon, vocab)
    interactions = []
    stamp = start
    bot_lines = vocab["bot_lines"]
    for text in turns:
        interactions.append(Interaction(BOT, bot_lines[rng.integers(len(bot_lines))], stamp))
        stamp += timedelta(seconds=int(rng.integers(10, 40)))
        interactions.append(Interaction(HUMAN, text, stamp))
        stamp += timedelta(seconds=int(rng.integers(10, 40)))
    interactions.append(Interaction(BOT, "Goodbye, talk to you soon!", stamp))
    scores = RawFeatureScores(**dict(zip(RATIO_FEATURES, map(float, ratios))), polarity=polarity)
    return Session(session_id, user_id, tuple(interactions)), scores


def _drifted(rng, base: Category) -> Category:
    pair = list(to_pair(base))
    flip = int(rng.integers(2))
    pair[flip] = not pair[flip]
    return to_category(tuple(pair))


def generate(config: CohortConfig = None, lexicon: Lexicon = None) -> Cohort:
    config = config or CohortConfig()
    lexicon = lexicon or default_lexicon()
    means = _means_file()
    vocab = {
        "fillers": sorted(lexicon.stopwords),
        "topics": means["topic_words"],
        "bot_lines": means["bot_lines"],
    }
    counts = apportion_users(config.n_users, config.proportions)
    assignment = [c for c in CATEGORIES for _ in range(counts[c])]
    master = np.random.default_rng(config.seed)
    assignment = [assignment[i] for i in master.permutation(len(assignment))]

    sessions, scores, labels, user_categories = [], {}, [], {}
    width = max(2, len(str(config.n_users - 1)))
    for u, base in enumerate(assignment):
        rng = np.random.default_rng([config.seed, u])
        user_id = f"u{u:0{width}d}"
        user_categories[user_id] = base
        n_sessions = int(rng.integers(config.sessions_mean - config.sessions_spread,
                                      config.sessions_mean + config.sessions_spread + 1))
        day = 0
        days = []
        for _ in range(n_sessions):
            days.append(day)
            day += int(rng.integers(4, 12))
        periods = days[-1] // config.relabel_days + 1
        period_category = []
        for p in range(periods):
            drift = p > 0 and rng.random() < config.drift_probability
            category = _drifted(rng, base) if drift else base
            period_category.append(category)
            effective = config.start + timedelta(days=p * config.relabel_days)
            pair = to_pair(category)
            labels.append(LabelRecord(user_id, effective, pair.anxiety, pair.depression))
        for k, d in enumerate(days):
            category = period_category[d // config.relabel_days]
            ratios = _draw_scores(rng, category, config.signal_strength, means["noise"])
            hour = int(rng.integers(9, 21))
            start = datetime.combine(config.start + timedelta(days=d), time(hour, int(rng.integers(60))),
                                     tzinfo=timezone.utc)
            session, score = _session(rng, f"{user_id}-s{k:03d}", user_id, start, ratios, config, lexicon, vocab)
            sessions.append(session)
            scores[session.session_id] = score
    corpus = make_corpus(sessions, {"generator": "synth", "seed": config.seed,
                                    "signal_strength": config.signal_strength})
    return Cohort(corpus, scores, labels, user_categories)
