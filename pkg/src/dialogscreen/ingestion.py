"""Corpus parsing, filtering, labelling, decimation and the cold-start split."""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from typing import Iterable, Optional

import numpy as np

from .errors import DataError, ParseError
from .multilabel import CATEGORIES, Category, LabelPair, to_category

HUMAN = "human"
BOT = "bot"


def parse_timestamp(text: str) -> datetime:
    value = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Interaction:
    speaker: str
    text: str
    timestamp: datetime

    def __post_init__(self):
        if self.speaker not in (HUMAN, BOT):
            raise DataError(f"unknown speaker {self.speaker!r}")
        if not self.text.strip():
            raise DataError("interaction text is empty")


@dataclass(frozen=True)
class Session:
    session_id: str
    user_id: str
    interactions: tuple
    label: Optional[LabelPair] = None

    def __post_init__(self):
        if not self.interactions:
            raise DataError(f"session {self.session_id!r} has no interactions")
        stamps = [i.timestamp for i in self.interactions]
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            raise DataError(f"session {self.session_id!r} has decreasing timestamps")

    @property
    def start(self) -> datetime:
        return self.interactions[0].timestamp

    @property
    def end(self) -> datetime:
        return self.interactions[-1].timestamp

    @property
    def n_human(self) -> int:
        return sum(1 for i in self.interactions if i.speaker == HUMAN)

    @property
    def category(self) -> Optional[Category]:
        return None if self.label is None else to_category(self.label)

    def to_record(self) -> dict:
        record = {
            "session_id": self.session_id,
            "user_id": self.user_id,
            "interactions": [
                {"speaker": i.speaker, "text": i.text, "timestamp": format_timestamp(i.timestamp)}
                for i in self.interactions
            ],
        }
        if self.label is not None:
            record["label"] = {"anxiety": self.label.anxiety, "depression": self.label.depression}
        return record


@dataclass(frozen=True)
class LabelRecord:
    user_id: str
    effective_date: date
    anxiety: bool
    depression: bool

    @property
    def pair(self) -> LabelPair:
        return LabelPair(self.anxiety, self.depression)

    def to_record(self) -> dict:
        return {
            "user_id": self.user_id,
            "effective_date": self.effective_date.isoformat(),
            "anxiety": self.anxiety,
            "depression": self.depression,
        }


@dataclass(frozen=True)
class Corpus:
    sessions: tuple = ()
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.sessions)

    def __iter__(self):
        return iter(self.sessions)

    def by_user(self) -> dict:
        out: dict = {}
        for s in self.sessions:
            out.setdefault(s.user_id, []).append(s)
        return out

    def with_sessions(self, sessions, **provenance) -> "Corpus":
        return Corpus(tuple(sessions), {**self.provenance, **provenance})


def _sort_key(session: Session):
    return (session.user_id, session.start, session.session_id)


def make_corpus(sessions: Iterable[Session], provenance=None) -> Corpus:
    sessions = list(sessions)
    seen = set()
    for s in sessions:
        if s.session_id in seen:
            raise DataError(f"duplicate session_id {s.session_id!r}")
        seen.add(s.session_id)
    return Corpus(tuple(sorted(sessions, key=_sort_key)), dict(provenance or {}))


def session_from_record(record: dict) -> Session:
    for key in ("session_id", "user_id", "interactions"):
        if key not in record:
            raise DataError(f"missing field {key!r}")
    if not isinstance(record["interactions"], list):
        raise DataError("interactions must be an array")
    interactions = []
    for k, item in enumerate(record["interactions"]):
        for key in ("speaker", "text", "timestamp"):
            if key not in item:
                raise DataError(f"interaction {k}: missing field {key!r}")
        interactions.append(Interaction(item["speaker"], item["text"], parse_timestamp(item["timestamp"])))
    label = record.get("label")
    if label is not None:
        label = LabelPair(bool(label["anxiety"]), bool(label["depression"]))
    return Session(str(record["session_id"]), str(record["user_id"]), tuple(interactions), label)


def parse_corpus(lines: Iterable[str], provenance=None) -> Corpus:
    """Parse a line-delimited JSON session stream.

    Blank lines are skipped. Raises ``ParseError`` with the 1-based line
    number on the first malformed record, and ``DataError`` on a duplicate id.
    """
    sessions = []
    seen: dict = {}
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            session = session_from_record(json.loads(line))
        except (ValueError, TypeError, KeyError) as exc:
            raise ParseError(str(exc), number) from exc
        if session.session_id in seen:
            raise DataError(
                f"duplicate session_id {session.session_id!r} (lines {seen[session.session_id]} and {number})"
            )
        seen[session.session_id] = number
        sessions.append(session)
    return make_corpus(sessions, provenance)


def read_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, {"source": str(path)})


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus:
            fh.write(json.dumps(s.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


def parse_labels(lines: Iterable[str]) -> list:
    records = []
    seen = set()
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            rec = LabelRecord(
                str(raw["user_id"]),
                date.fromisoformat(raw["effective_date"]),
                bool(raw["anxiety"]),
                bool(raw["depression"]),
            )
        except (ValueError, TypeError, KeyError) as exc:
            raise ParseError(str(exc), number) from exc
        key = (rec.user_id, rec.effective_date)
        if key in seen:
            raise ParseError(f"second label record for {key[0]!r} on {key[1]}", number)
        seen.add(key)
        records.append(rec)
    return sorted(records, key=lambda r: (r.user_id, r.effective_date))


def read_labels(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return parse_labels(fh)


def write_labels(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_record(), sort_keys=True) + "\n")


def filter_sessions(corpus: Corpus, min_human: int = 6) -> Corpus:
    """Keep sessions with at least ``min_human`` human interventions."""
    kept = [s for s in corpus if s.n_human >= min_human]
    return corpus.with_sessions(kept, min_human=min_human)


def attach_labels(corpus: Corpus, records) -> Corpus:
    """Label each session with the latest record dated on or before its start.

    Labels carry forward until superseded. Sessions preceding every record of
    their user come out with ``label=None``.
    """
    per_user: dict = {}
    for r in sorted(records, key=lambda r: (r.user_id, r.effective_date)):
        per_user.setdefault(r.user_id, []).append(r)
    dates = {u: [r.effective_date for r in rs] for u, rs in per_user.items()}
    out = []
    for s in corpus:
        label = None
        if s.user_id in per_user:
            k = bisect.bisect_right(dates[s.user_id], s.start.date()) - 1
            if k >= 0:
                label = per_user[s.user_id][k].pair
        out.append(replace(s, label=label))
    return corpus.with_sessions(out)


def decimate(corpus: Corpus, keep: int = 2, of: int = 3) -> Corpus:
    """Per user, keep sessions whose position i satisfies ``i % of < keep``."""
    if not (isinstance(keep, int) and isinstance(of, int)) or not of >= keep >= 1:
        raise DataError(f"invalid decimation ratio {keep}/{of}")
    kept = []
    for sessions in corpus.by_user().values():
        kept.extend(s for i, s in enumerate(sessions) if i % of < keep)
    return corpus.with_sessions(sorted(kept, key=_sort_key), decimate=f"{keep}/{of}")


def parse_ratio(text: str) -> tuple:
    keep, _, of = text.partition("/")
    try:
        return int(keep), int(of)
    except ValueError:
        raise DataError(f"invalid decimation ratio {text!r}") from None


def _apportion(total: int, counts: dict) -> dict:
    """Largest-remainder allocation of ``total`` draws across strata, giving
    every non-empty labelled stratum at least one draw."""
    n = sum(counts.values())
    exact = {k: total * c / n for k, c in counts.items()}
    alloc = {k: math.floor(v) for k, v in exact.items()}
    for k, c in counts.items():
        if k is not None and c > 0 and alloc[k] == 0:
            alloc[k] = 1
    order = sorted(counts, key=lambda k: (-(exact[k] - math.floor(exact[k])), _stratum_rank(k)))
    deficit = total - sum(alloc.values())
    for k in order:
        if deficit <= 0:
            break
        if alloc[k] < counts[k]:
            alloc[k] += 1
            deficit -= 1
    if deficit < 0:
        # forced minimums overshot: take back from the largest strata
        for k in sorted(counts, key=lambda k: (-alloc[k], _stratum_rank(k))):
            if deficit == 0:
                break
            if alloc[k] > 1:
                alloc[k] -= 1
                deficit += 1
    return alloc


def _stratum_rank(key) -> int:
    return len(CATEGORIES) if key is None else Category(key).code


def split_coldstart(corpus: Corpus, fraction: float = 0.10, seed: int = 0) -> tuple:
    """Draw ``ceil(fraction * N)`` sessions for feature selection and tuning.

    Sampling is without replacement and stratified by category; unlabelled
    sessions form their own stratum. Both halves keep corpus ordering.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"cold-start fraction must lie in (0, 1), got {fraction}")
    n = len(corpus)
    if n == 0:
        return corpus.with_sessions([]), corpus.with_sessions([])
    total = math.ceil(fraction * n)
    strata: dict = {}
    for idx, s in enumerate(corpus):
        strata.setdefault(s.category, []).append(idx)
    present = sorted((k for k in strata if k is not None), key=_stratum_rank)
    if total < len(present):
        starved = present[total:]
        raise DataError(
            f"cold-start of {total} sessions cannot hold one session of each category; "
            f"sparse category: {starved[0].value}"
        )
    alloc = _apportion(total, {k: len(v) for k, v in strata.items()})
    rng = np.random.default_rng(seed)
    chosen = set()
    for key in sorted(strata, key=_stratum_rank):
        members = strata[key]
        picks = rng.choice(len(members), size=alloc[key], replace=False)
        chosen.update(members[i] for i in picks)
    cold = [s for i, s in enumerate(corpus) if i in chosen]
    main = [s for i, s in enumerate(corpus) if i not in chosen]
    return (
        corpus.with_sessions(cold, split="coldstart", seed=seed),
        corpus.with_sessions(main, split="main", seed=seed),
    )


def stratified_holdout(keys, test_fraction: float, seed: int) -> tuple:
    """Index split of ``keys`` (category codes) into train/test, stratified."""
    keys = list(keys)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for value in sorted(set(keys)):
        members = [i for i, k in enumerate(keys) if k == value]
        n_test = int(round(test_fraction * len(members)))
        if len(members) > 1:
            n_test = min(max(n_test, 1), len(members) - 1)
        else:
            n_test = 0
        order = rng.permutation(len(members))
        test.extend(members[j] for j in order[:n_test])
        train.extend(members[j] for j in order[n_test:])
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)
