from pathlib import Path

import pytest

from dialogscreen.config import PipelineConfig
from dialogscreen.pipeline import run_pipeline
from dialogscreen.synth import CohortConfig, generate

GRIDS = Path(__file__).parent / "grids"


def small_config(data_dir, out_dir, **overrides):
    settings = dict(
        corpus=data_dir / "corpus.jsonl",
        labels=data_dir / "labels.jsonl",
        output=out_dir,
        seed=7,
        folds=3,
        grids={f: GRIDS / f"{f}.yaml" for f in ("nb", "dt", "rf")},
    )
    settings.update(overrides)
    return PipelineConfig(**settings)


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    data = tmp_path_factory.mktemp("cohort")
    cohort = generate(CohortConfig(n_users=8, sessions_mean=30, sessions_spread=5, seed=3))
    cohort.write(data)
    return data, cohort


@pytest.fixture(scope="session")
def small_run(small_cohort, tmp_path_factory):
    data, _ = small_cohort
    out = tmp_path_factory.mktemp("run")
    config = small_config(data, out)
    manifest = run_pipeline(config)
    return config, manifest


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
