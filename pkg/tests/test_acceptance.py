"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed at the end of the session
(and immediately, for ``pytest -s``).
"""
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from helpers import day, make_session
from dialogscreen.config import PipelineConfig
from dialogscreen.explainability import panel_color, render_html
from dialogscreen.ingestion import decimate, make_corpus
from dialogscreen.ml import DecisionTree, mdi_select, predict_proba_gnb, train_forest, train_gnb
from dialogscreen.multilabel import CATEGORIES, EvaluationReport, evaluate
from dialogscreen.pipeline import run_pipeline
from dialogscreen.synth import CohortConfig, generate
from dialogscreen.windowing import window_stats

GOLDEN = Path(__file__).parent / "golden"


@contextmanager
def criterion(number, title, budget=None):
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    except BaseException as exc:
        line = f"criterion {number} FAIL  {title}: {exc}".splitlines()[0]
        raise
    else:
        extra = ", ".join(f"{k}={v}" for k, v in detail.items())
        line = f"criterion {number} PASS  {title} ({elapsed:.1f}s{', ' + extra if extra else ''})"
    finally:
        ACCEPTANCE_LINES[number] = line
        print(line)


def _flat(report: EvaluationReport) -> dict:
    out = {"exact_match": report.exact_match, "accuracy": report.accuracy}
    for name in ("precision", "recall", "f_measure"):
        out.update({f"{name}.{agg}": v for agg, v in getattr(report, name).items()})
    for name, aggs in report.category_based.items():
        out.update({f"category_based.{name}.{agg}": v for agg, v in aggs.items()})
    return out


def test_criterion_1_metric_oracle():
    with criterion(1, "metrics match the set-definition oracle on 1000 instances", budget=10):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 201))
            actual = [CATEGORIES[i] for i in rng.integers(0, 4, n)]
            predicted = [CATEGORIES[i] for i in rng.integers(0, 4, n)]
            report = evaluate(actual, predicted)
            expected = oracles.metrics([c.value for c in actual], [c.value for c in predicted])
            assert report.confusion == expected.pop("confusion")
            got = _flat(report)
            for key, value in expected.items():
                assert abs(got[key] - value) <= 1e-12, key
            assert report.hamming_loss + report.accuracy == 1.0


def test_criterion_2_window_oracle():
    with criterion(2, "window statistics match the sort-and-index oracle", budget=5):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            values = rng.uniform(0, 1, int(rng.integers(1, 101))).tolist()
            got, want = window_stats(values), oracles.window_stats(values)
            assert got[1:] == want[1:]
            assert got[0] == pytest.approx(want[0], rel=1e-12, abs=1e-15)
        assert window_stats([0.42]) == (0.42,) * 4


def test_criterion_3_classifiers():
    with criterion(3, "tree, naive Bayes and forest correctness", budget=60) as detail:
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(200, 4))
        y = rng.integers(0, 4, 200)
        assert (DecisionTree().fit(X, y).predict(X) == y).all()

        Xg = np.array([[-1.0], [0.0], [1.0], [9.0], [10.0], [11.0]])
        model = train_gnb(Xg, np.array([0, 0, 0, 3, 3, 3]), 1e-9)
        var = 2 / 3 + 1e-9 * np.var(Xg)
        got = predict_proba_gnb(model, [0.0])
        want = oracles.gaussian_posterior([0.0], [[0.0], [10.0]], [[var], [var]], [0.5, 0.5])
        assert got[0] > 0.99 and np.allclose(got, want, atol=1e-9, rtol=0)

        wins = 0
        for seed in range(100):
            r = np.random.default_rng(seed)
            labels = r.integers(0, 2, 200)
            Xf = np.column_stack([r.normal(0, 1, 200), labels + r.normal(0, 0.6, 200)])
            imp = train_forest(Xf, labels, {"n_estimators": 20, "max_features": "sqrt"}, seed=seed).feature_importances_
            assert (imp >= 0).all() and abs(imp.sum() - 1) <= 1e-9
            wins += imp[1] > imp[0]
        detail["informative_wins"] = f"{wins}/100"
        assert wins >= 95


def test_criterion_4_selection_rule():
    with criterion(4, "mean-importance selection on 100 random vectors", budget=1):
        rng = np.random.default_rng(4)
        for _ in range(100):
            imp = rng.dirichlet(np.ones(int(rng.integers(1, 57))))
            mean = sum(imp) / len(imp)
            assert mdi_select(imp).tolist() == [v >= mean for v in imp]


@pytest.fixture(scope="module")
def default_cohort(tmp_path_factory):
    data = tmp_path_factory.mktemp("default_cohort")
    generate(CohortConfig(seed=42, signal_strength=0.8)).write(data)
    return data


def _config(data, out, **kw):
    return PipelineConfig(output=out, corpus=data / "corpus.jsonl", labels=data / "labels.jsonl", seed=42,
                          backend="lexicon", **kw)


@pytest.fixture(scope="module")
def first_run(default_cohort, tmp_path_factory):
    out = tmp_path_factory.mktemp("run_a")
    start = time.perf_counter()
    manifest = run_pipeline(_config(default_cohort, out))
    return out, manifest, time.perf_counter() - start


@pytest.mark.slow
def test_criterion_5_synthetic_anchor(first_run):
    out, _, elapsed = first_run
    with criterion(5, "default cohort RF held-out exact match >= 0.80, accuracy >= 0.85") as detail:
        rf = EvaluationReport.from_text((out / "reports" / "rf.txt").read_text())
        detail.update(exact_match=f"{rf.exact_match:.4f}", accuracy=f"{rf.accuracy:.4f}", run=f"{elapsed:.0f}s")
        assert elapsed < 300, f"pipeline took {elapsed:.0f}s"
        assert rf.exact_match >= 0.80
        assert rf.accuracy >= 0.85


@pytest.mark.slow
def test_criterion_6_determinism(default_cohort, first_run, tmp_path):
    out_a, manifest_a, elapsed_a = first_run
    with criterion(6, "two runs give byte-identical manifests, reports and models") as detail:
        start = time.perf_counter()
        manifest_b = run_pipeline(_config(default_cohort, tmp_path / "run_b"))
        elapsed_b = time.perf_counter() - start
        detail["second_run"] = f"{elapsed_b:.0f}s"
        assert elapsed_b < 2 * elapsed_a
        assert (out_a / "manifest.json").read_bytes() == (tmp_path / "run_b" / "manifest.json").read_bytes()
        assert manifest_a == manifest_b
        compared = 0
        for sub in ("reports", "models"):
            for path in sorted((out_a / sub).iterdir()):
                assert path.read_bytes() == (tmp_path / "run_b" / sub / path.name).read_bytes(), path.name
                compared += 1
        detail["files"] = compared


def test_criterion_7_prompt_fidelity():
    from test_explainability import fixture_context
    from test_extraction import golden_session
    from dialogscreen.explainability import build_explanation_prompt
    from dialogscreen.extraction import build_scoring_prompt

    with criterion(7, "scoring and explanation prompts byte-match their golden files"):
        scoring = build_scoring_prompt(golden_session())
        explanation = build_explanation_prompt(fixture_context())
        assert scoring == (GOLDEN / "scoring_prompt.txt").read_text(encoding="utf-8")
        assert explanation == (GOLDEN / "explanation_prompt.txt").read_text(encoding="utf-8")
        assert "Do not add any textual explanation" in scoring
        assert "no more than 400 characters" in explanation


def test_criterion_8_dashboard_contract():
    from test_explainability import fixture_document

    with criterion(8, "dashboard render is byte-stable with 4 panels and a bounded explanation"):
        doc = fixture_document()
        html = render_html(doc)
        assert html == render_html(fixture_document()) == (GOLDEN / "dashboard.html").read_text(encoding="utf-8")
        assert html.count('<div class="panel ') == 4
        for panel in doc.panels:
            assert (panel.color == "green") == (panel.value < 0.5)
            assert f'class="panel {panel.color}"><div class="name">{panel.name}<' in html
        assert panel_color("x_avg", 0.4999) == "green" and panel_color("x_avg", 0.5) == "red"
        assert len(doc.explanation) <= 400


@pytest.mark.slow
def test_criterion_9_scenario_two(default_cohort, tmp_path):
    with criterion(9, "scenario 2 keeps (i mod 3) < 2 and reports all three models") as detail:
        sessions = [make_session(f"{u}{i}", user_id=u, start=day(i)) for u in "ab" for i in range(10)]
        kept = decimate(make_corpus(sessions))
        for user, rows in kept.by_user().items():
            assert [s.session_id for s in rows] == [f"{user}{i}" for i in range(10) if i % 3 < 2]
        manifest = run_pipeline(_config(default_cohort, tmp_path / "s2", scenario=2))
        table = (tmp_path / "s2" / "reports" / "table.csv").read_text().splitlines()
        assert [r.split(",")[:2] for r in table[1:]] == [["2", "NB"], ["2", "DT"], ["2", "RF"]]
        rf = EvaluationReport.from_text((tmp_path / "s2" / "reports" / "rf.txt").read_text())
        detail.update(sessions=manifest["counts"]["sessions_kept"], rf_exact_match=f"{rf.exact_match:.4f}")
