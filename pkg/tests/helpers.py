"""Small builders shared by the test modules."""
from datetime import datetime, timedelta, timezone

from dialogscreen.ingestion import BOT, HUMAN, Interaction, Session

T0 = datetime(2024, 1, 1, 9, 0, tzinfo=timezone.utc)


def make_session(session_id, user_id="u1", n_human=6, start=T0, human_text="hello there", label=None):
    turns = []
    t = start
    for _ in range(n_human):
        turns.append(Interaction(BOT, "How are you?", t))
        t += timedelta(seconds=10)
        turns.append(Interaction(HUMAN, human_text, t))
        t += timedelta(seconds=10)
    if not turns:
        turns.append(Interaction(BOT, "Anyone there?", t))
    return Session(session_id, user_id, tuple(turns), label)


def day(n, hour=9):
    return T0 + timedelta(days=n, hours=hour - 9)
