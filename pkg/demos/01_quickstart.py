"""Generate a synthetic cohort, run the whole pipeline, look at the results.

    python demos/01_quickstart.py [workdir]

Takes a minute or two on one core (most of it is the random forest grid).
"""
import json
import sys
from pathlib import Path

from dialogscreen.config import PipelineConfig
from dialogscreen.multilabel import EvaluationReport
from dialogscreen.pipeline import run_pipeline
from dialogscreen.synth import CohortConfig, generate

work = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_run")

# 32 users, about 68 sessions each, categories drawn in the usual clinical mix
cohort = generate(CohortConfig(seed=42))
paths = cohort.write(work / "data")
print(f"{len(cohort.corpus)} sessions for {len(cohort.user_categories)} users")

config = PipelineConfig(output=work / "run", corpus=paths["corpus"], labels=paths["labels"], seed=42)
manifest = run_pipeline(config)

counts = manifest["counts"]
print(f"kept {counts['sessions_kept']} sessions, {counts['coldstart']} reserved for selection and tuning")
print(f"{counts['columns_selected']} of 56 window columns survive selection")

for family in ("nb", "dt", "rf"):
    report = EvaluationReport.from_text((work / "run" / "reports" / f"{family}.txt").read_text())
    print(f"{family.upper()}: exact match {report.exact_match:.3f}  accuracy {report.accuracy:.3f}  "
          f"hamming loss {report.hamming_loss:.3f}")

print("chosen RF settings:", json.dumps(manifest["model_selection"]["rf"]["best_params"]))

dashboards = sorted((work / "run" / "dashboards").glob("*/*/dashboard.html"))
print(f"{len(dashboards)} dashboards, e.g. {dashboards[0]}")
