import json
from pathlib import Path

import httpx
import pytest

from helpers import make_session
from dialogscreen.errors import BackendError, ExtractionError, MissingFieldError, ScoreFormatError, ScoreRangeError
from dialogscreen.extraction import (
    FEATURES,
    HttpBackend,
    LexiconBackend,
    RawFeatureScores,
    RetryPolicy,
    ScoreCache,
    ScoringBackend,
    build_scoring_prompt,
    cache_key,
    cached_extract,
    extract,
    extract_corpus,
    parse_scores,
    read_scores,
    score_with_lexicon,
    write_scores,
)
from dialogscreen.ingestion import BOT, HUMAN, Interaction, Session, make_corpus
from helpers import T0

GOLDEN = Path(__file__).parent / "golden"
FAST = RetryPolicy(transport_attempts=2, backoff_seconds=0.0, content_retries=1)


def golden_session():
    from datetime import timedelta
    return Session("g1", "u1", (
        Interaction(BOT, "Good morning! How did you sleep?", T0),
        Interaction(HUMAN, "Not  well, I kept\n  waking up.", T0 + timedelta(seconds=20)),
        Interaction(BOT, "I am sorry to hear that.", T0 + timedelta(seconds=40)),
    ))


def wire(**overrides):
    values = {"insecurity": 0.1, "loneliness": 0.2, "negative_emotion": 0.3, "positive_emotion": 0.4,
              "sadness": 0.5, "anguish": 0.6, "health_issues": 0.7, "catastrophic_terms": 0.8,
              "exaggerated_terms": 0.9, "repeated_concepts": 1.0, "interjections": 0.0,
              "negative_adverbs": 0.25, "negatives_terms": 0.75, "polarity": 2}
    values.update(overrides)
    return values


class Scripted(ScoringBackend):
    name = "scripted"
    deterministic = True

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt, temperature=0.0):
        self.calls += 1
        reply = self.replies[min(self.calls - 1, len(self.replies) - 1)]
        if isinstance(reply, Exception):
            raise reply
        return reply


def test_scoring_prompt_matches_golden():
    expected = (GOLDEN / "scoring_prompt.txt").read_text(encoding="utf-8")
    assert build_scoring_prompt(golden_session()) == expected
    assert build_scoring_prompt(golden_session()) == build_scoring_prompt(golden_session())


def test_scoring_prompt_field_names():
    prompt = build_scoring_prompt(golden_session())
    assert "Do not add any textual explanation" in prompt
    assert "exaggerated_terms:0" in prompt
    for name in FEATURES:
        key = "exaggerated_terms" if name == "emphasized_terms" else name
        assert f"{key}:0" in prompt


def test_parse_zero_object():
    scores = parse_scores(json.dumps(wire(**{k: 0 for k in wire()})))
    assert scores.values() == [0.0] * 14 and scores.polarity == 0


def test_parse_object_inside_prose():
    text = "Sure! Here you go:\n" + json.dumps(wire()) + "\nHope that helps {not json}."
    scores = parse_scores(text)
    assert scores.emphasized_terms == 0.9 and scores.polarity == 2


def test_parse_bare_keys_like_the_template():
    body = ",\n".join(f"{k}:{v}" for k, v in wire().items())
    assert parse_scores("{" + body + "}").negatives_terms == 0.75


def test_parse_range_and_format_errors():
    with pytest.raises(ScoreRangeError, match="insecurity"):
        parse_scores(json.dumps(wire(insecurity=1.3)))
    with pytest.raises(ScoreRangeError, match="polarity"):
        parse_scores(json.dumps(wire(polarity=3)))
    missing = wire()
    del missing["sadness"]
    with pytest.raises(MissingFieldError):
        parse_scores(json.dumps(missing))
    with pytest.raises(ScoreFormatError):
        parse_scores("no numbers here")
    with pytest.raises(ScoreFormatError):
        parse_scores(json.dumps(wire(anguish="high")))


def test_scores_jsonl_roundtrip(tmp_path):
    scores = {"b": RawFeatureScores(sadness=0.5, polarity=0), "a": RawFeatureScores(clamped=True)}
    write_scores(scores, tmp_path / "s.jsonl")
    assert read_scores(tmp_path / "s.jsonl") == scores


def test_extract_is_deterministic_with_lexicon():
    session = make_session("s", human_text="I feel so alone and sad today")
    backend = LexiconBackend()
    assert extract(backend, session) == extract(backend, session) == score_with_lexicon(session)


def test_extract_clamps_after_second_out_of_range_reply():
    backend = Scripted([json.dumps(wire(insecurity=1.05))] * 2)
    scores = extract(backend, make_session("s"), FAST)
    assert scores.insecurity == 1.0 and scores.clamped
    assert backend.calls == 2


def test_extract_recovers_when_retry_is_valid():
    backend = Scripted([json.dumps(wire(insecurity=1.05)), json.dumps(wire())])
    scores = extract(backend, make_session("s"), FAST)
    assert scores.insecurity == 0.1 and not scores.clamped


def test_extract_malformed_twice_carries_raw_text():
    backend = Scripted(["I cannot score this"] * 2)
    with pytest.raises(ExtractionError) as err:
        extract(backend, make_session("s"), FAST)
    assert err.value.raw_response == "I cannot score this"


def test_extract_retries_transport_failures():
    backend = Scripted([BackendError("down"), json.dumps(wire())])
    assert extract(backend, make_session("s"), FAST).sadness == 0.5
    always_down = Scripted([BackendError("down")])
    with pytest.raises(ExtractionError):
        extract(always_down, make_session("s"), FAST)
    assert always_down.calls == 2


def test_lexicon_neutral_session():
    scores = score_with_lexicon(make_session("s", n_human=1, human_text="the weather and the garden"))
    assert scores.values()[:-1] == [0.0] * 13 and scores.polarity == 1


def test_lexicon_pure_negatives():
    scores = score_with_lexicon(make_session("s", human_text="no not nobody none cannot"))
    assert scores.negatives_terms == 1.0 and scores.polarity == 0


def test_lexicon_repeated_sentence():
    text = "my grandson visited the market with his bicycle"
    session = make_session("s", n_human=5, human_text=text)
    assert score_with_lexicon(session).repeated_concepts > 0.5


def test_lexicon_ignores_bot_turns():
    session = make_session("s", human_text="the garden")
    assert score_with_lexicon(session).sadness == 0.0  # bot lines never count


def test_cache_hit_skips_backend(tmp_path):
    cache = ScoreCache(tmp_path)
    backend = Scripted([json.dumps(wire())])
    session = make_session("s")
    first = cached_extract(cache, backend, session, FAST)
    assert cached_extract(cache, backend, session, FAST) == first
    assert backend.calls == 1
    cache.clear()
    cached_extract(cache, backend, session, FAST)
    assert backend.calls == 2 and len(cache) == 1


def test_cache_key_depends_on_backend_identity():
    prompt = build_scoring_prompt(make_session("s"))
    assert cache_key("a", prompt) != cache_key("b", prompt)
    assert cache_key("a", prompt) == cache_key("a", prompt)


def test_corrupt_cache_entry_is_ignored(tmp_path):
    cache = ScoreCache(tmp_path)
    session = make_session("s")
    key = cache_key("scripted", build_scoring_prompt(session))
    cache.path(key).write_text("{broken", encoding="utf-8")
    backend = Scripted([json.dumps(wire())])
    assert cached_extract(cache, backend, session, FAST).sadness == 0.5
    assert backend.calls == 1


def test_extract_corpus_parallel_matches_serial(tmp_path):
    corpus = make_corpus([make_session(f"s{i}", human_text=t) for i, t in
                          enumerate(["sad and alone", "so happy", "oh no", "pain pain"])])
    backend = LexiconBackend()
    serial = extract_corpus(corpus, backend, None, parallelism=1)
    parallel = extract_corpus(corpus, backend, ScoreCache(tmp_path), parallelism=3)
    assert serial == parallel and list(serial) == ["s0", "s1", "s2", "s3"]


def _mock_client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def test_http_backend_request_and_key(monkeypatch):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"content": json.dumps(wire())}}]})

    monkeypatch.setenv("TEST_KEY", "sk-test")
    backend = HttpBackend("https://llm.example/v1/chat/completions", "gpt-4o-mini", "TEST_KEY",
                          client=_mock_client(handler))
    scores = extract(backend, make_session("s"), FAST)
    assert scores.repeated_concepts == 1.0
    assert seen["auth"] == "Bearer sk-test"
    assert seen["body"]["temperature"] == 0.0
    assert seen["body"]["model"] == "gpt-4o-mini"
    assert seen["body"]["messages"][0]["content"].startswith("This is a conversation")


def test_http_backend_errors():
    down = HttpBackend("https://llm.example", "m", client=_mock_client(lambda r: httpx.Response(503)))
    with pytest.raises(BackendError):
        down.complete("x")
    odd = HttpBackend("https://llm.example", "m", client=_mock_client(lambda r: httpx.Response(200, json={"x": 1})))
    with pytest.raises(BackendError, match="shape"):
        odd.complete("x")
