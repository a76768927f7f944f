"""Text-completion backends and the retrying extraction driver."""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass

import httpx

from ..errors import BackendError, ExtractionError, ScoreFormatError, ScoreRangeError
from ..ingestion import Session
from .lexicon import Lexicon, default_lexicon, score_texts
from .prompt import build_scoring_prompt, transcript_from_prompt, user_lines
from .scores import RawFeatureScores, clamp, read_values, validate

log = logging.getLogger(__name__)


class ScoringBackend:
    """Anything that turns a prompt into a text response.

    ``name`` identifies the backend in cache keys; ``deterministic`` backends
    must return the same text for the same prompt.
    """

    name = "abstract"
    deterministic = False

    def complete(self, prompt: str, temperature: float = 0.0) -> str:
        raise NotImplementedError


class LexiconBackend(ScoringBackend):
    """Answers scoring prompts with word-list scores, formatted like an LLM reply."""

    deterministic = True

    def __init__(self, lexicon: Lexicon = None):
        self.lexicon = lexicon or default_lexicon()
        self.name = self.lexicon.version

    def complete(self, prompt, temperature=0.0):
        texts = user_lines(transcript_from_prompt(prompt))
        return json.dumps(score_texts(texts, self.lexicon).to_wire())


class HttpBackend(ScoringBackend):
    """Chat-completions client. The API key comes only from the environment."""

    def __init__(self, endpoint, model, api_key_env="OPENAI_API_KEY", timeout=60.0, client=None):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._client = client
        self.name = f"http:{model}@{endpoint}"

    def _headers(self):
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def request_body(self, prompt, temperature=0.0):
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }

    def complete(self, prompt, temperature=0.0):
        body = self.request_body(prompt, temperature)
        try:
            if self._client is not None:
                response = self._client.post(self.endpoint, json=body, headers=self._headers())
            else:
                response = httpx.post(self.endpoint, json=body, headers=self._headers(), timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise BackendError(f"{self.name}: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendError(f"{self.name}: unexpected response shape") from None


@dataclass(frozen=True)
class RetryPolicy:
    transport_attempts: int = 3
    backoff_seconds: float = 0.5
    content_retries: int = 1


def _complete(backend, prompt, policy):
    for attempt in range(policy.transport_attempts):
        try:
            return backend.complete(prompt, temperature=0.0)
        except BackendError as exc:
            if attempt + 1 == policy.transport_attempts:
                raise ExtractionError(f"backend failed after {attempt + 1} attempts: {exc}") from exc
            log.warning("backend %s failed (%s); retrying", backend.name, exc)
            time.sleep(policy.backoff_seconds * 2**attempt)


def extract(backend: ScoringBackend, session: Session, policy: RetryPolicy = RetryPolicy()) -> RawFeatureScores:
    """Score one session through ``backend`` at temperature 0.

    An out-of-range or unparsable reply is retried ``policy.content_retries``
    times. A reply still out of range is clamped and flagged; a reply still
    unparsable raises ``ExtractionError`` carrying the raw text.
    """
    prompt = build_scoring_prompt(session)
    for attempt in range(policy.content_retries + 1):
        raw = _complete(backend, prompt, policy)
        last = attempt == policy.content_retries
        try:
            values = read_values(raw)
        except ScoreFormatError as exc:
            if last:
                raise ExtractionError(f"session {session.session_id}: {exc}", raw_response=raw) from exc
            continue
        try:
            return validate(values)
        except ScoreRangeError as exc:
            if last:
                log.warning("session %s: %s after retry; clamping", session.session_id, exc)
                return clamp(values)
    raise AssertionError("unreachable")
