"""Content-addressed on-disk score cache, one JSON file per key."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .backends import RetryPolicy, ScoringBackend, extract
from .prompt import build_scoring_prompt
from .scores import RawFeatureScores

log = logging.getLogger(__name__)


def cache_key(backend_name: str, prompt: str) -> str:
    payload = json.dumps([backend_name, prompt], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ScoreCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str):
        path = self.path(key)
        if not path.exists():
            return None
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            if record["key"] != key:
                raise ValueError("key mismatch")
            return RawFeatureScores.from_dict(record["scores"])
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("ignoring corrupt cache entry %s: %s", path.name, exc)
            return None

    def put(self, key: str, scores: RawFeatureScores, backend_name: str) -> None:
        record = {
            "key": key,
            "backend": backend_name,
            "scores": scores.to_dict(),
            "created_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record, fh, sort_keys=True)
            os.replace(tmp, self.path(key))

    def clear(self) -> None:
        with self._lock:
            for path in self.directory.glob("*.json"):
                path.unlink()

    def __len__(self):
        return sum(1 for _ in self.directory.glob("*.json"))


def cached_extract(cache: ScoreCache, backend: ScoringBackend, session, policy: RetryPolicy = RetryPolicy()):
    key = cache_key(backend.name, build_scoring_prompt(session))
    hit = cache.get(key)
    if hit is not None:
        return hit
    scores = extract(backend, session, policy)
    cache.put(key, scores, backend.name)
    return scores


def extract_corpus(corpus, backend, cache=None, parallelism=4, policy=RetryPolicy()) -> dict:
    """Score every session, ``parallelism`` requests at a time.

    Returns ``{session_id: RawFeatureScores}``; the first failure propagates.
    """
    def one(session):
        if cache is not None:
            return cached_extract(cache, backend, session, policy)
        return extract(backend, session, policy)

    sessions = list(corpus)
    if parallelism <= 1:
        results = [one(s) for s in sessions]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(one, sessions))
    return {s.session_id: r for s, r in zip(sessions, results)}
