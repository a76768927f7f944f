"""Deterministic word-list scorer used as an offline stand-in for the LLM.

Each ratio feature is ``min(1, gain * hits / human_tokens)``. Repeated
concepts counts content tokens (neither stopwords nor lexicon terms) that
already occurred earlier in the user's text. Polarity compares positive and
negative hits against a +/- threshold on the same per-token scale.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..ingestion import HUMAN, Session
from .scores import RATIO_FEATURES, RawFeatureScores


@dataclass(frozen=True)
class Lexicon:
    version: str
    token_pattern: re.Pattern
    terms: dict  # feature -> frozenset
    gains: dict
    repeat_gain: float
    stopwords: frozenset
    positive: tuple
    negative: tuple
    threshold: float

    @property
    def all_terms(self) -> frozenset:
        return frozenset().union(*self.terms.values())

    def tokenize(self, text: str) -> list:
        return self.token_pattern.findall(text.lower())

    def feature_of(self) -> dict:
        return {t: f for f, ts in self.terms.items() for t in ts}


def lexicon_from_dict(data: dict) -> Lexicon:
    feats = data["features"]
    return Lexicon(
        version=data["version"],
        token_pattern=re.compile(data["token_pattern"]),
        terms={f: frozenset(v["terms"]) for f, v in feats.items()},
        gains={f: float(v["gain"]) for f, v in feats.items()},
        repeat_gain=float(data["repeated_concepts"]["gain"]),
        stopwords=frozenset(data["repeated_concepts"]["stopwords"]),
        positive=tuple(data["polarity"]["positive"]),
        negative=tuple(data["polarity"]["negative"]),
        threshold=float(data["polarity"]["threshold"]),
    )


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    text = resources.files("dialogscreen.data").joinpath("lexicon.json").read_text(encoding="utf-8")
    return lexicon_from_dict(json.loads(text))


def score_texts(texts, lexicon: Lexicon = None) -> RawFeatureScores:
    lexicon = lexicon or default_lexicon()
    tokens = [tok for text in texts for tok in lexicon.tokenize(text)]
    n = len(tokens)
    if n == 0:
        return RawFeatureScores()
    owner = lexicon.feature_of()
    hits = dict.fromkeys(lexicon.terms, 0)
    repeats = 0
    seen = set()
    for tok in tokens:
        feature = owner.get(tok)
        if feature is not None:
            hits[feature] += 1
        elif tok not in lexicon.stopwords:
            if tok in seen:
                repeats += 1
            seen.add(tok)
    ratios = {f: min(1.0, lexicon.gains[f] * hits[f] / n) for f in lexicon.terms}
    ratios["repeated_concepts"] = min(1.0, lexicon.repeat_gain * repeats / n)
    balance = (sum(hits[f] for f in lexicon.positive) - sum(hits[f] for f in lexicon.negative)) / n
    if balance > lexicon.threshold:
        polarity = 2
    elif balance < -lexicon.threshold:
        polarity = 0
    else:
        polarity = 1
    return RawFeatureScores(**{f: ratios[f] for f in RATIO_FEATURES}, polarity=polarity)


def score_with_lexicon(session: Session, lexicon: Lexicon = None) -> RawFeatureScores:
    return score_texts([i.text for i in session.interactions if i.speaker == HUMAN], lexicon)
