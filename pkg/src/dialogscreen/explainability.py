"""Natural-language explanations and the caregiver dashboard."""
from __future__ import annotations

import hashlib
import html
import json
import logging
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .errors import BackendError, DataError
from .extraction.backends import ScoringBackend
from .extraction.prompt import load_template
from .extraction.scores import DISPLAY_NAMES, FEATURES
from .multilabel import Category, as_category
from .windowing import round2

log = logging.getLogger(__name__)

MAX_CHARS = 400
BLOCK = 7
PLACEHOLDER = "Explanation unavailable."
GREEN_BELOW = 0.5
PANELS = 4

_VERDICT_SLOT = "<does not suffer | \nsuffers> [anxiety/depression/anxiety and depression]"
VERDICTS = {
    Category.NONE_NONE: "does not suffer anxiety and depression",
    Category.NONE_DEPRESSION: "suffers depression",
    Category.ANXIETY_NONE: "suffers anxiety",
    Category.ANXIETY_DEPRESSION: "suffers anxiety and depression",
}
STAT_LABELS = {"avg": "avg", "q1": "Q1", "q2": "Q2", "q3": "Q3"}


def majority_category(recent) -> Category:
    """Most frequent category; ties go to the tied category seen last."""
    recent = [as_category(c) for c in recent]
    if not recent:
        raise DataError("majority_category needs at least one prediction")
    counts = Counter(recent)
    top = max(counts.values())
    last_seen = {c: i for i, c in enumerate(recent)}
    return max((c for c in counts if counts[c] == top), key=lambda c: last_seen[c])


@dataclass(frozen=True)
class ExplanationContext:
    averages: dict
    medians: dict
    transcripts: tuple
    category: Category
    confidence: float

    @property
    def short_history(self) -> bool:
        return len(self.transcripts) < 2

    @classmethod
    def from_row(cls, row_values: dict, transcripts, category, confidence) -> "ExplanationContext":
        return cls(
            {f: row_values[f"{f}_avg"] for f in FEATURES},
            {f: row_values[f"{f}_q2"] for f in FEATURES},
            tuple(transcripts)[-2:],
            as_category(category),
            float(confidence),
        )


_SLOT_LINE = re.compile(r"^(    )([a-z_]+):X(,?)$")


def build_explanation_prompt(ctx: ExplanationContext) -> str:
    out = []
    section = None
    for line in load_template("explanation_prompt.txt").split("\n"):
        if line in ("Average:", "Q2:"):
            section = ctx.averages if line == "Average:" else ctx.medians
        match = _SLOT_LINE.match(line)
        if match and section is not None:
            indent, name, comma = match.groups()
            line = f"{indent}{name}:{round2(section[name]):.2f}{comma}"
        out.append(line)
    text = "\n".join(out)
    text = text.replace("[conversations]", "\n\n".join(ctx.transcripts))
    return text.replace(_VERDICT_SLOT, VERDICTS[ctx.category])


def truncate_explanation(text: str, limit: int = MAX_CHARS) -> str:
    """Cut at the last sentence end within ``limit`` characters, else hard-cut
    with an ellipsis."""
    text = text.strip()
    if len(text) <= limit:
        return text
    head = text[:limit]
    ends = [m.end() for m in re.finditer(r"[.!?](?=\s|$)", head)]
    if ends:
        return head[: ends[-1]]
    return head[: limit - 1] + "…"


def generate_explanation(backend: ScoringBackend, ctx: ExplanationContext) -> str:
    return truncate_explanation(backend.complete(build_explanation_prompt(ctx), temperature=0.0))


class StubExplainer(ScoringBackend):
    """Offline explainer that summarises the prompt's own numbers."""

    name = "lexicon-stub"
    deterministic = True

    _AVG = re.compile(r"^    ([a-z_]+):(\d+\.\d+),?$")

    def complete(self, prompt, temperature=0.0):
        averages = {}
        in_avg = False
        for line in prompt.split("\n"):
            if line in ("Average:", "Q2:"):
                in_avg = line == "Average:"
            match = self._AVG.match(line)
            if in_avg and match:
                averages[match.group(1)] = float(match.group(2))
        verdict = next((v for v in VERDICTS.values() if f"the user {v}." in prompt), "is unclassified")
        ranked = sorted((k for k in averages if k != "polarity"), key=lambda k: (-averages[k], k))[:3]
        signals = ", ".join(f"{DISPLAY_NAMES[k].lower()} {averages[k]:.2f}" for k in ranked)
        text = f"The model predicts that the user {verdict}. The strongest average signals over recent sessions are {signals}."
        if "polarity" in averages:
            text += f" Average polarity is {averages['polarity']:.2f} on a 0 to 2 scale."
        return text


@dataclass(frozen=True)
class PanelEntry:
    column: str
    name: str
    value: float
    color: str


def panel_color(column: str, value: float) -> str:
    # one raw threshold for every column, polarity included
    return "green" if value < GREEN_BELOW else "red"


def display_name(column: str) -> str:
    feature, _, stat = column.rpartition("_")
    return f"{DISPLAY_NAMES[feature]} ({STAT_LABELS[stat]})"


def top_features(importances, row_values: dict, active_columns, k: int = PANELS) -> tuple:
    """The ``k`` most important active columns with their current values.

    Returns ``(entries, flagged)``; ``flagged`` is True when fewer than ``k``
    columns were available. Importance ties go to the earlier column.
    """
    if len(importances) != len(active_columns):
        raise DataError("importances and active columns differ in length")
    order = sorted(range(len(active_columns)), key=lambda j: (-float(importances[j]), j))[:k]
    entries = []
    for j in order:
        column = active_columns[j]
        value = float(row_values[column])
        entries.append(PanelEntry(column, display_name(column), value, panel_color(column, value)))
    return entries, len(entries) < k


@dataclass
class DashboardDocument:
    user_id: str
    block: int
    prediction: Category
    confidence: float
    panels: list
    explanation: str
    generated_at: str
    flags: list = field(default_factory=list)

    def validate(self) -> None:
        if len(self.panels) != PANELS and "few_features" not in self.flags:
            raise DataError(f"dashboard needs {PANELS} panels, got {len(self.panels)}")
        for p in self.panels:
            if p.color != panel_color(p.column, p.value):
                raise DataError(f"panel {p.column} has inconsistent color")
        if len(self.explanation) > MAX_CHARS:
            raise DataError("explanation exceeds 400 characters")
        if not 0.0 <= self.confidence <= 1.0:
            raise DataError("confidence outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "block": self.block,
            "prediction": self.prediction.value,
            "confidence": self.confidence,
            "features": [asdict(p) for p in self.panels],
            "explanation": self.explanation,
            "generated_at": self.generated_at,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DashboardDocument":
        return cls(
            data["user_id"], data["block"], Category(data["prediction"]), data["confidence"],
            [PanelEntry(**p) for p in data["features"]], data["explanation"], data["generated_at"],
            list(data.get("flags", [])),
        )


def format_confidence(confidence: float) -> str:
    return f"{100 * confidence:.1f}%"


_CSS = """body{font-family:Helvetica,Arial,sans-serif;margin:24px;color:#222;background:#fafafa}
h1{font-size:20px;margin:0 0 4px 0}
.meta{color:#666;font-size:12px;margin-bottom:16px}
.layout{display:flex;gap:24px;align-items:flex-start}
.main{flex:3}
.side{flex:1;border:1px solid #ccc;border-radius:6px;padding:16px;background:#fff}
.panels{display:flex;gap:12px;margin-bottom:16px}
.panel{flex:1;border-radius:6px;padding:12px;color:#fff;text-align:center}
.panel .name{font-size:13px}
.panel .value{font-size:24px;font-weight:bold}
.green{background:#2e7d32}
.red{background:#c62828}
.explanation{border:1px solid #ccc;border-radius:6px;padding:16px;background:#fff;line-height:1.5}
.prediction{font-size:18px;font-weight:bold}
.confidence{font-size:28px}"""


def render_html(doc: DashboardDocument) -> str:
    e = html.escape
    panels = "\n".join(
        f'<div class="panel {p.color}"><div class="name">{e(p.name)}</div>'
        f'<div class="value">{p.value:.2f}</div></div>'
        for p in doc.panels
    )
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        f"<title>Dashboard {e(doc.user_id)} block {doc.block}</title>\n"
        f"<style>\n{_CSS}\n</style>\n</head>\n<body>\n"
        f"<h1>User {e(doc.user_id)}</h1>\n"
        f'<div class="meta">Block {doc.block} &middot; generated {e(doc.generated_at)}</div>\n'
        '<div class="layout">\n<div class="main">\n'
        f'<div class="panels">\n{panels}\n</div>\n'
        f'<div class="explanation">{e(doc.explanation)}</div>\n'
        "</div>\n"
        '<div class="side">\n<div>Prediction</div>\n'
        f'<div class="prediction">{e(doc.prediction.value)}</div>\n'
        "<div>Confidence</div>\n"
        f'<div class="confidence">{format_confidence(doc.confidence)}</div>\n'
        "</div>\n</div>\n</body>\n</html>\n"
    )


def render_dashboard(doc: DashboardDocument, out_dir) -> tuple:
    """Write ``dashboard.html`` and ``dashboard.json`` into ``out_dir``."""
    doc.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    html_path = out_dir / "dashboard.html"
    json_path = out_dir / "dashboard.json"
    html_path.write_text(render_html(doc), encoding="utf-8")
    json_path.write_text(json.dumps(doc.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return html_path, json_path


class ExplanationStore:
    """Per-(user, block) explanation cache; an entry is reused only when the
    prompt that produced it is unchanged."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def _path(self, user_id, block) -> Path:
        safe = hashlib.sha256(str(user_id).encode()).hexdigest()[:16]
        return self.directory / safe / f"{block}.json"

    def get(self, user_id, block, prompt, backend_name) -> Optional[str]:
        path = self._path(user_id, block)
        if not path.exists():
            return None
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except ValueError:
            log.warning("ignoring corrupt explanation cache %s", path)
            return None
        if record.get("prompt_sha256") != _sha(prompt) or record.get("backend") != backend_name:
            return None
        return record["text"]

    def put(self, user_id, block, prompt, backend_name, text) -> None:
        path = self._path(user_id, block)
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {"user_id": user_id, "block": block, "backend": backend_name,
                  "prompt_sha256": _sha(prompt), "text": text}
        path.write_text(json.dumps(record, sort_keys=True), encoding="utf-8")


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def explain_block(backend, ctx: ExplanationContext, store: ExplanationStore = None,
                  user_id=None, block=None) -> tuple:
    """Explanation text plus flags; backend failures degrade to the placeholder."""
    flags = ["short_history"] if ctx.short_history else []
    prompt = build_explanation_prompt(ctx)
    if store is not None:
        cached = store.get(user_id, block, prompt, backend.name)
        if cached is not None:
            return cached, flags
    try:
        text = truncate_explanation(backend.complete(prompt, temperature=0.0))
    except BackendError as exc:
        log.warning("explanation for %s/%s unavailable: %s", user_id, block, exc)
        return PLACEHOLDER, flags + ["explanation_unavailable"]
    if store is not None:
        store.put(user_id, block, prompt, backend.name, text)
    return text, flags
