"""Score one new conversation against a trained model, then explain a user.

Needs a finished run; by default the one produced by 01_quickstart.py.

    python demos/03_single_session.py [workdir]
"""
import sys
from pathlib import Path

from dialogscreen.config import PipelineConfig
from dialogscreen.extraction import LexiconBackend, build_scoring_prompt, extract, read_scores
from dialogscreen.ingestion import read_corpus
from dialogscreen.pipeline import Run, predict_session

work = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_run")
run_dir = work / "run"

corpus = read_corpus(run_dir / "ingest" / "corpus.jsonl")
scores = read_scores(run_dir / "extract" / "scores.jsonl")
user, sessions = sorted(corpus.by_user().items())[0]
latest = sessions[-1]

# This is what an LLM backend would be sent for this session.
print(build_scoring_prompt(latest)[:600], "...\n")

# The offline lexicon backend answers the same question by counting words.
print(extract(LexiconBackend(), latest))

history = [scores[s.session_id] for s in sessions[-30:-1]]
category, confidence = predict_session(run_dir / "models" / "rf.json", latest, history)
print(f"\n{user}: {category.value} ({confidence:.0%})")

# Re-render that user's dashboard into a scratch directory.
for path in Run(PipelineConfig(output=run_dir)).explain([user], out_dir=work / "scratch_dashboards"):
    print("dashboard:", path)
