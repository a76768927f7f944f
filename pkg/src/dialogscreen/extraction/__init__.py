from .backends import HttpBackend, LexiconBackend, RetryPolicy, ScoringBackend, extract
from .cache import ScoreCache, cache_key, cached_extract, extract_corpus
from .lexicon import default_lexicon, score_texts, score_with_lexicon
from .prompt import build_scoring_prompt, load_template, render_transcript
from .scores import (
    DISPLAY_NAMES,
    FEATURES,
    RATIO_FEATURES,
    WIRE_KEYS,
    RawFeatureScores,
    parse_scores,
    read_scores,
    write_scores,
)

__all__ = [
    "DISPLAY_NAMES",
    "FEATURES",
    "HttpBackend",
    "LexiconBackend",
    "RATIO_FEATURES",
    "RawFeatureScores",
    "RetryPolicy",
    "ScoreCache",
    "ScoringBackend",
    "WIRE_KEYS",
    "build_scoring_prompt",
    "cache_key",
    "cached_extract",
    "default_lexicon",
    "extract",
    "extract_corpus",
    "load_template",
    "parse_scores",
    "read_scores",
    "render_transcript",
    "score_texts",
    "score_with_lexicon",
    "write_scores",
]
