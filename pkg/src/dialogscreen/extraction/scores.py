"""The 14 per-session expert scores and their text-response parser."""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, fields

from ..errors import MissingFieldError, ScoreFormatError, ScoreRangeError

FEATURES = (
    "insecurity",
    "loneliness",
    "negative_emotion",
    "positive_emotion",
    "sadness",
    "anguish",
    "health_issues",
    "catastrophic_terms",
    "emphasized_terms",
    "repeated_concepts",
    "interjections",
    "negative_adverbs",
    "negatives_terms",
    "polarity",
)
RATIO_FEATURES = FEATURES[:-1]

# the scoring prompt asks for "exaggerated_terms"; internally it is emphasized_terms
WIRE_KEYS = {name: name for name in FEATURES}
WIRE_KEYS["emphasized_terms"] = "exaggerated_terms"
FROM_WIRE = {wire: name for name, wire in WIRE_KEYS.items()}

DISPLAY_NAMES = {
    "insecurity": "Insecurity",
    "loneliness": "Loneliness",
    "negative_emotion": "Negative emotion",
    "positive_emotion": "Positive emotion",
    "sadness": "Sadness",
    "anguish": "Anguish",
    "health_issues": "Health issues",
    "catastrophic_terms": "Catastrophic terms",
    "emphasized_terms": "Emphasized terms",
    "repeated_concepts": "Repeated concepts",
    "interjections": "Interjections",
    "negative_adverbs": "Negative adverbs",
    "negatives_terms": "Negatives terms",
    "polarity": "Polarity",
}


@dataclass(frozen=True)
class RawFeatureScores:
    insecurity: float = 0.0
    loneliness: float = 0.0
    negative_emotion: float = 0.0
    positive_emotion: float = 0.0
    sadness: float = 0.0
    anguish: float = 0.0
    health_issues: float = 0.0
    catastrophic_terms: float = 0.0
    emphasized_terms: float = 0.0
    repeated_concepts: float = 0.0
    interjections: float = 0.0
    negative_adverbs: float = 0.0
    negatives_terms: float = 0.0
    polarity: int = 1
    clamped: bool = False

    def __post_init__(self):
        for name in RATIO_FEATURES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ScoreRangeError(name, value)
        if self.polarity not in (0, 1, 2):
            raise ScoreRangeError("polarity", self.polarity)

    def values(self) -> list:
        return [float(getattr(self, name)) for name in FEATURES]

    def to_wire(self) -> dict:
        return {WIRE_KEYS[name]: getattr(self, name) for name in FEATURES}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RawFeatureScores":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def _objects(text: str):
    """Yield candidate ``{...}`` substrings in order of their opening brace."""
    for start, ch in enumerate(text):
        if ch != "{":
            continue
        depth = 0
        for end in range(start, len(text)):
            if text[end] == "{":
                depth += 1
            elif text[end] == "}":
                depth -= 1
                if depth == 0:
                    yield text[start : end + 1]
                    break


_BARE_KEY = re.compile(r"([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*:")


def _load_object(candidate: str):
    try:
        data = json.loads(candidate)
    except ValueError:
        try:
            data = json.loads(_BARE_KEY.sub(r'\1"\2":', candidate))
        except ValueError:
            return None
    return data if isinstance(data, dict) else None


def read_values(response: str) -> dict:
    """Pull the 14 raw numbers out of a response without range checks."""
    for candidate in _objects(response):
        data = _load_object(candidate)
        if data is None:
            continue
        values = {}
        for wire, name in list(FROM_WIRE.items()) + [("emphasized_terms", "emphasized_terms")]:
            if wire in data and name not in values:
                values[name] = data[wire]
        for name in FEATURES:
            if name not in values:
                raise MissingFieldError(WIRE_KEYS[name])
            value = values[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScoreFormatError(f"{WIRE_KEYS[name]} is not a number: {value!r}")
        return values
    raise ScoreFormatError("no JSON object found in response")


def validate(values: dict) -> RawFeatureScores:
    for name in RATIO_FEATURES:
        if not 0.0 <= float(values[name]) <= 1.0:
            raise ScoreRangeError(name, values[name])
    polarity = values["polarity"]
    if polarity not in (0, 1, 2):
        raise ScoreRangeError("polarity", polarity)
    return RawFeatureScores(
        **{name: float(values[name]) for name in RATIO_FEATURES}, polarity=int(polarity)
    )


def clamp(values: dict) -> RawFeatureScores:
    ratios = {name: min(1.0, max(0.0, float(values[name]))) for name in RATIO_FEATURES}
    polarity = int(min(2, max(0, round(float(values["polarity"])))))
    return RawFeatureScores(**ratios, polarity=polarity, clamped=True)


def parse_scores(response: str) -> RawFeatureScores:
    """Parse a model response into validated scores.

    Accepts strict JSON or the bare-key object style of the prompt, possibly
    surrounded by prose; the first object that parses is used.
    """
    return validate(read_values(response))


def write_scores(scores: dict, path) -> None:
    """Persist ``{session_id: RawFeatureScores}`` as JSON lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for session_id in sorted(scores):
            record = {"session_id": session_id, **scores[session_id].to_dict()}
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_scores(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                record = json.loads(line)
                out[record.pop("session_id")] = RawFeatureScores.from_dict(record)
    return out
