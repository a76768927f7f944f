"""Scoring prompt construction and transcript rendering."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..ingestion import HUMAN, Session

SESSION_SLOT = "<session>"
PREFIXES = {"bot": "BOT: ", "human": "USER: "}


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("dialogscreen.data").joinpath(name).read_text(encoding="utf-8")


def render_transcript(session: Session) -> str:
    """One line per interaction, ``BOT:``/``USER:`` prefixed.

    Internal whitespace (including newlines) is collapsed to single spaces so
    each interaction stays on one line.
    """
    return "\n".join(PREFIXES[i.speaker] + " ".join(i.text.split()) for i in session.interactions)


def build_scoring_prompt(session: Session) -> str:
    return load_template("scoring_prompt.txt").replace(SESSION_SLOT, render_transcript(session))


def transcript_from_prompt(prompt: str) -> str:
    """Inverse of the template substitution; returns ``prompt`` itself when it
    was not produced by :func:`build_scoring_prompt`."""
    head = load_template("scoring_prompt.txt").split(SESSION_SLOT)[0]
    if prompt.startswith(head):
        return prompt[len(head):]
    return prompt


def user_lines(transcript: str) -> list:
    prefix = PREFIXES[HUMAN]
    return [line[len(prefix):] for line in transcript.splitlines() if line.startswith(prefix)]
