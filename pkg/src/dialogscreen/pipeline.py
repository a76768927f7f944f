"""End-to-end run: ingest, extract, window, select, train, evaluate, explain.

Every stage persists its outputs under the run directory and reads its
inputs either from memory (full run) or from those files (single-stage CLI
invocations). Stage timings go to ``timings.json``; ``manifest.json`` holds
only run-determined content so identical runs produce identical manifests.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
import warnings
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import DataError, DialogScreenError, StageError
from .explainability import (
    BLOCK,
    DashboardDocument,
    ExplanationContext,
    ExplanationStore,
    StubExplainer,
    explain_block,
    majority_category,
    render_dashboard,
    top_features,
)
from .extraction import HttpBackend, LexiconBackend, ScoreCache, extract_corpus, read_scores, write_scores
from .extraction.backends import extract
from .extraction.prompt import render_transcript
from .ingestion import (
    attach_labels,
    decimate,
    filter_sessions,
    format_timestamp,
    read_corpus,
    read_labels,
    split_coldstart,
    stratified_holdout,
    write_corpus,
)
from .ml import GridSpec, derive_seed, grid_search, load_model, make_model, predict_with_confidence, save_model
from .ml.selection import select_features
from .multilabel import Category, evaluate, write_table
from .windowing import COLUMNS, FeatureMatrix, _window_block, expand_corpus, read_mask, round2, round_and_prune, write_mask

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "dialogscreen-manifest"
FAMILIES = ("nb", "dt", "rf")
FAMILY_NAMES = {"nb": "NB", "dt": "DT", "rf": "RF"}
STAGES = ("ingest", "extract", "window", "select", "train", "evaluate", "explain")
PARTIAL = ".partial"

# offsets mixed into the run seed, one independent stream per use
SEED_STREAMS = {"coldstart": 1, "selector": 2, "cv": 3, "holdout": 4, "final": 5}


def run_seeds(seed: int) -> dict:
    return {name: derive_seed(seed, k) for name, k in SEED_STREAMS.items()}


def scoring_backend(config: PipelineConfig):
    if config.backend == "lexicon":
        return LexiconBackend()
    return HttpBackend(config.endpoint, config.model, config.api_key_env)


def explanation_backend(config: PipelineConfig):
    if config.explain_backend == "lexicon-stub":
        return StubExplainer()
    return HttpBackend(config.endpoint, config.model, config.api_key_env)


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _read_ids(path: Path) -> list:
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line]


def _write_ids(path: Path, ids) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")


class Run:
    """Artifacts of one run directory, loaded lazily from disk when a stage
    did not produce them in this process."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output)
        self.seeds = run_seeds(config.seed)
        self.counts: dict = {}
        self.cv: dict = {}
        self._corpus = None
        self._scores = None
        self._matrix = None

    def path(self, *parts) -> Path:
        return self.out.joinpath(*parts)

    @property
    def corpus(self):
        if self._corpus is None:
            self._corpus = read_corpus(self.path("ingest", "corpus.jsonl"))
        return self._corpus

    @property
    def scores(self) -> dict:
        if self._scores is None:
            self._scores = read_scores(self.path("extract", "scores.jsonl"))
        return self._scores

    @property
    def matrix(self) -> FeatureMatrix:
        if self._matrix is None:
            mask = self.path("select", "mask.txt")
            if not mask.exists():
                mask = self.path("window", "mask.txt")
            self._matrix = FeatureMatrix.from_csv(self.path("window", "matrix.csv"), mask)
        return self._matrix

    def coldstart_rows(self) -> np.ndarray:
        ids = _read_ids(self.path("ingest", "coldstart.txt"))
        rows = self.matrix.index_of(ids)
        return np.array([r for r in rows if self.matrix.labels[r] is not None], dtype=np.int64)

    def split_rows(self) -> tuple:
        split = _read_json(self.path("train", "split.json"))
        return self.matrix.index_of(split["train"]), self.matrix.index_of(split["test"])

    # stages ---------------------------------------------------------------

    def ingest(self) -> None:
        cfg = self.config
        raw = read_corpus(cfg.corpus)
        corpus = filter_sessions(raw, cfg.min_human)
        corpus = attach_labels(corpus, read_labels(cfg.labels))
        if cfg.decimation is not None:
            corpus = decimate(corpus, *cfg.decimation)
        if len(corpus) == 0:
            raise DataError("no sessions left after filtering")
        cold, _ = split_coldstart(corpus, cfg.coldstart_fraction, self.seeds["coldstart"])
        self.path("ingest").mkdir(parents=True, exist_ok=True)
        write_corpus(corpus, self.path("ingest", "corpus.jsonl"))
        _write_ids(self.path("ingest", "coldstart.txt"), [s.session_id for s in cold])
        self._corpus = corpus
        self.counts.update(sessions_read=len(raw), sessions_kept=len(corpus), coldstart=len(cold),
                           sessions_labelled=sum(s.label is not None for s in corpus))

    def extract(self) -> None:
        cfg = self.config
        cache = ScoreCache(cfg.cache)
        scores = extract_corpus(self.corpus, scoring_backend(cfg), cache, cfg.parallelism)
        self.path("extract").mkdir(parents=True, exist_ok=True)
        write_scores(scores, self.path("extract", "scores.jsonl"))
        self._scores = scores

    def window(self) -> None:
        cfg = self.config
        cold_ids = _read_ids(self.path("ingest", "coldstart.txt"))
        matrix = expand_corpus(self.corpus, self.scores, cfg.window)
        reference = [r for r in matrix.index_of(cold_ids) if matrix.labels[r] is not None]
        if not reference:
            raise DataError("the cold-start split holds no labelled session")
        matrix = round_and_prune(matrix, reference)
        self.path("window").mkdir(parents=True, exist_ok=True)
        matrix.to_csv(self.path("window", "matrix.csv"))
        write_mask(matrix.column_names, matrix.active_mask, self.path("window", "mask.txt"))
        self._matrix = matrix
        self.counts.update(rows=len(matrix), columns_after_pruning=int(matrix.active_mask.sum()))

    def select(self) -> None:
        matrix = self.matrix.with_mask(read_mask(self.path("window", "mask.txt"), self.matrix.column_names))
        rows = self.coldstart_rows()
        keep, importances = select_features(matrix.model_input(rows), matrix.category_codes(rows),
                                            self.seeds["selector"])
        mask = matrix.active_mask.copy()
        mask[np.flatnonzero(mask)] = keep
        if not mask.any():
            raise DataError("feature selection kept no column")
        active = matrix.active_columns
        self.path("select").mkdir(parents=True, exist_ok=True)
        write_mask(matrix.column_names, mask, self.path("select", "mask.txt"))
        _write_json(self.path("select", "importances.json"),
                    {c: float(v) for c, v in zip(active, importances)})
        self._matrix = matrix.with_mask(mask)
        self.counts.update(columns_selected=int(mask.sum()))

    def train(self) -> None:
        cfg = self.config
        matrix = self.matrix
        cold = self.coldstart_rows()
        X_cold, y_cold = matrix.model_input(cold), matrix.category_codes(cold)
        cold_set = set(cold.tolist())
        main = np.array([r for r in matrix.labelled_rows() if r not in cold_set], dtype=np.int64)
        train_idx, test_idx = stratified_holdout(matrix.category_codes(main), cfg.test_fraction,
                                                 self.seeds["holdout"])
        train_rows, test_rows = main[train_idx], main[test_idx]
        if len(train_rows) == 0 or len(test_rows) == 0:
            raise DataError("not enough labelled sessions for a train/test split")
        _write_json(self.path("train", "split.json"), {
            "train": [matrix.session_ids[r] for r in train_rows],
            "test": [matrix.session_ids[r] for r in test_rows],
        })
        hyper = {}
        for family in FAMILIES:
            grid = GridSpec.load(cfg.grids[family])
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="min_samples_split=1")
                result = grid_search(family, grid, X_cold, y_cold, cfg.folds, self.seeds["cv"])
            _write_json(self.path("train", f"cv_{family}.json"), result.to_dict())
            hyper[family] = result.best_params
            self.cv[family] = {"best_params": result.best_params, "best_score": result.best_score,
                               "folds": result.folds, "notes": result.notes}
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="min_samples_split=1")
                model = make_model(family, result.best_params, self.seeds["final"])
                model.fit(matrix.model_input(train_rows), matrix.category_codes(train_rows))
            self.path("models").mkdir(parents=True, exist_ok=True)
            save_model(model, self.path("models", f"{family}.json"), matrix.active_columns,
                       {"family": family, "window": cfg.window, "scenario": cfg.scenario})
        _write_json(self.path("train", "hyperparameters.json"), hyper)
        self.counts.update(train=len(train_rows), test=len(test_rows))

    def evaluate(self) -> dict:
        matrix = self.matrix
        _, test_rows = self.split_rows()
        actual = [matrix.labels[r] for r in test_rows]
        reports = {}
        self.path("reports").mkdir(parents=True, exist_ok=True)
        for family in FAMILIES:
            model, active, _ = load_model(self.path("models", f"{family}.json"))
            X = _inputs(matrix, active, test_rows)
            predicted = [Category.from_code(c) for c in model.predict(X)]
            report = evaluate(actual, predicted)
            reports[family] = report
            self.path("reports", f"{family}.txt").write_text(report.to_text(), encoding="utf-8")
            lines = ["session_id,actual,predicted"] + [
                f"{matrix.session_ids[r]},{a.value},{p.value}" for r, a, p in zip(test_rows, actual, predicted)
            ]
            self.path("reports", f"predictions_{family}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        write_table({(self.config.scenario, FAMILY_NAMES[f]): reports[f] for f in FAMILIES},
                    self.path("reports", "table.csv"))
        return reports

    def explain(self, users=None, backend=None, out_dir=None) -> list:
        """Dashboards for the latest block of each user, from the RF model."""
        matrix = self.matrix
        model, active, _ = load_model(self.path("models", "rf.json"))
        importances = model.feature_importances_
        backend = backend or explanation_backend(self.config)
        store = ExplanationStore(Path(self.config.cache) / "explanations")
        out_dir = Path(out_dir) if out_dir else self.path("dashboards")
        sessions = {s.session_id: s for s in self.corpus}
        rows_by_user: dict = {}
        for r, u in enumerate(matrix.user_ids):
            rows_by_user.setdefault(u, []).append(r)
        if users:
            missing = [u for u in users if u not in rows_by_user]
            if missing:
                raise DataError(f"unknown user(s): {', '.join(missing)}")
        written = []
        for user in sorted(users or rows_by_user):
            rows = sorted(rows_by_user[user], key=lambda r: (sessions[matrix.session_ids[r]].start, matrix.session_ids[r]))
            block = (len(rows) - 1) // BLOCK
            block_rows = rows[block * BLOCK:]
            proba = model.predict_proba(_inputs(matrix, active, block_rows))
            predicted = [Category.from_code(model.classes_[j]) for j in np.argmax(proba, axis=1)]
            category = majority_category(predicted)
            codes = list(model.classes_)
            confidence = float(proba[-1, codes.index(category.code)]) if category.code in codes else 0.0
            latest = matrix.row(block_rows[-1]).values
            ctx = ExplanationContext.from_row(latest, [render_transcript(sessions[matrix.session_ids[r]])
                                                       for r in block_rows[-2:]], category, confidence)
            text, flags = explain_block(backend, ctx, store, user, block)
            panels, few = top_features(importances, latest, active)
            if few:
                flags.append("few_features")
            doc = DashboardDocument(user, block, category, confidence, panels, text,
                                    format_timestamp(sessions[matrix.session_ids[block_rows[-1]]].end), flags)
            html_path, _ = render_dashboard(doc, out_dir / user / str(block))
            written.append(html_path)
        return written


def _inputs(matrix: FeatureMatrix, active, rows) -> np.ndarray:
    missing = [c for c in active if c not in matrix.column_names]
    if missing:
        raise DataError(f"model expects columns the matrix lacks: {missing}")
    cols = [matrix.column_names.index(c) for c in active]
    return matrix.values[np.ix_(np.asarray(rows, dtype=np.int64), cols)]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _artifact_hashes(out: Path) -> dict:
    hashes = {}
    for sub in ("window", "select", "train", "models", "reports", "dashboards"):
        base = out / sub
        if base.exists():
            for p in sorted(base.rglob("*")):
                if p.is_file():
                    hashes[p.relative_to(out).as_posix()] = _sha256(p)
    return hashes


def run_stage(run: Run, stage: str, timings: dict):
    start = time.perf_counter()
    log.info("stage %s", stage)
    try:
        result = getattr(run, stage)()
    except StageError:
        raise
    except (DialogScreenError, OSError, ValueError) as exc:
        raise StageError(stage, exc) from exc
    timings[stage] = round(time.perf_counter() - start, 3)
    return result


def run_pipeline(config: PipelineConfig, stages=STAGES) -> dict:
    """Execute ``stages`` in order and write the manifest. Returns it."""
    config.check_paths()
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / PARTIAL
    marker.write_text("run in progress or failed\n", encoding="utf-8")
    run = Run(config)
    timings: dict = {}
    for stage in stages:
        if stage == "explain" and not config.dashboards:
            continue
        run_stage(run, stage, timings)
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "config_hash": config.config_hash(),
        "config": config.fingerprint(),
        "seeds": {"run": config.seed, **run.seeds},
        "stages": [s for s in stages if s != "explain" or config.dashboards],
        "protocol": {
            "coldstart": "feature selection and grid search only",
            "holdout": f"stratified {1 - config.test_fraction:.0%}/{config.test_fraction:.0%} of the remaining labelled sessions",
            "cv_score": "multi-label sample accuracy",
        },
        "counts": run.counts,
        "model_selection": run.cv,
        "artifacts": _artifact_hashes(out),
    }
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "timings.json", timings)
    marker.unlink()
    return manifest


def predict_session(model_path, session, history=(), backend=None, window: int = 30) -> tuple:
    """Score one session and classify it from its window with ``history``
    (earlier sessions' scores, oldest first). Returns ``(Category, confidence)``."""
    model, active, meta = load_model(model_path)
    window = int(meta.get("window", window))
    if active is None:
        raise DataError("model document lacks its active column list")
    unknown = [c for c in active if c not in COLUMNS]
    if unknown:
        raise DataError(f"model columns not produced by windowing: {unknown}")
    scores = extract(backend or LexiconBackend(), session)
    values = [s.values() for s in list(history)[-(window - 1):]] if window > 1 else []
    values.append(scores.values())
    row = _window_block(np.array(values), window)[-1]
    lookup = dict(zip(COLUMNS, (round2(v) for v in row.tolist())))
    return predict_with_confidence(model, [lookup[c] for c in active])
