"""Benchmark runner, scoring, and report rendering.

Scoring rules: an unparseable answer counts as incorrect for accuracy but is
tracked in parse_rate; age MAE averages parsed answers only and reports how
many were excluded; F1 is computed on the "Yes" class over parsed items.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .batch import BatchLimits, run_ordered
from .endpoint import Endpoint, EndpointResponse
from .parsers import ParsedAnswer, parse_answer, unparseable
from .schema import QAPair, Record, SchemaError, _require, register_kind


@dataclass(frozen=True)
class EvalRecord(Record):
    qa: QAPair
    response_text: str
    latency_ms: float
    parsed: ParsedAnswer
    endpoint_id: str = ""
    attempts: int = 1
    error: str = ""
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "eval"

    def unique_key(self):
        return self.qa.id

    def validate(self) -> None:
        self.qa.validate()
        self.parsed.validate()
        if self.parsed.variant == "letter" and self.qa.option_text(self.parsed.value) is None:
            raise SchemaError("parsed", f"letter {self.parsed.value} is not an option")

    @property
    def correct(self) -> bool:
        return is_correct(self.qa, self.parsed)

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "EvalRecord":
        known, unknown = cls._split(d, strict)
        return cls(QAPair.from_dict(_require(known, "qa"), strict), _require(known, "response_text"),
                   _require(known, "latency_ms"),
                   ParsedAnswer.from_dict(_require(known, "parsed"), strict),
                   known.get("endpoint_id", ""), known.get("attempts", 1), known.get("error", ""),
                   unknown)


register_kind(EvalRecord)


def is_correct(qa: QAPair, parsed: ParsedAnswer) -> bool:
    if not parsed.parsed:
        return False
    if qa.task == "yes_no":
        return parsed.variant == "yes_no" and parsed.value == qa.gold.value
    if qa.task == "multiple_choice":
        return parsed.variant == "letter" and parsed.value == qa.gold.value
    if qa.task == "age":
        return parsed.variant == "number" and parsed.value == qa.gold.value
    return False


def run_benchmark(qa: Iterable[QAPair], endpoint: Endpoint, limits: BatchLimits = BatchLimits(),
                  system: str | None = None, sleep=None) -> Iterator[EvalRecord]:
    """Send each question verbatim with its image; one EvalRecord per pair, input order."""

    def call(pair: QAPair):
        return endpoint.complete(pair.image, pair.question, system)

    kwargs = {"sleep": sleep} if sleep is not None else {}
    for oc in run_ordered(qa, call, limits, **kwargs):
        pair: QAPair = oc.item
        if oc.ok:
            text = oc.response.text
            yield EvalRecord(pair, text, oc.latency_ms,
                             parse_answer(text, pair.task, pair.options), endpoint.endpoint_id,
                             oc.attempts)
        else:
            yield EvalRecord(pair, "", 0.0, unparseable("transport"), endpoint.endpoint_id,
                             oc.attempts, str(oc.error))


class GoldEchoEndpoint:
    """Mock that answers every known question with its gold answer."""

    def __init__(self, pairs: Iterable[QAPair], endpoint_id: str = "mock-gold"):
        self.answers = {(p.image.id, p.question): p.gold.answer_text() for p in pairs}
        self.endpoint_id = endpoint_id

    def complete(self, image, prompt, system=None):
        return EndpointResponse(self.answers.get((image.id, prompt), ""), 0.0)


# ── metrics ─────────────────────────────────────────────────────────────────


@dataclass
class TaskMetrics:
    n: int = 0
    n_parsed: int = 0
    n_correct: int = 0
    abs_error_sum: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    task_kind: str = ""

    def add(self, qa: QAPair, parsed: ParsedAnswer) -> None:
        self.task_kind = self.task_kind or qa.task
        self.n += 1
        if not parsed.parsed:
            return
        self.n_parsed += 1
        if is_correct(qa, parsed):
            self.n_correct += 1
        if qa.task == "age" and parsed.variant == "number":
            self.abs_error_sum += abs(parsed.value - qa.gold.value)
        if qa.task == "yes_no" and parsed.variant == "yes_no":
            gold, pred = qa.gold.value, parsed.value
            if pred and gold:
                self.tp += 1
            elif pred:
                self.fp += 1
            elif gold:
                self.fn += 1
            else:
                self.tn += 1

    def merge(self, other: "TaskMetrics") -> "TaskMetrics":
        return TaskMetrics(self.n + other.n, self.n_parsed + other.n_parsed,
                           self.n_correct + other.n_correct,
                           self.abs_error_sum + other.abs_error_sum, self.tp + other.tp,
                           self.fp + other.fp, self.fn + other.fn, self.tn + other.tn,
                           self.task_kind or other.task_kind)

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n if self.n else 0.0

    @property
    def parse_rate(self) -> float:
        return self.n_parsed / self.n if self.n else 0.0

    @property
    def mae(self) -> float | None:
        if self.task_kind != "age" or not self.n_parsed:
            return None
        return self.abs_error_sum / self.n_parsed

    @property
    def f1(self) -> float | None:
        if self.task_kind != "yes_no":
            return None
        precision = self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0
        recall = self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0
        return 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    def summary(self) -> dict:
        d = {
            "task_kind": self.task_kind,
            "n": self.n,
            "n_parsed": self.n_parsed,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "parse_rate": self.parse_rate,
        }
        if self.task_kind == "age":
            d["mae"] = self.mae
            d["mae_excluded"] = self.n - self.n_parsed
            d["abs_error_sum"] = self.abs_error_sum
        if self.task_kind == "yes_no":
            d["f1"] = self.f1
            d["confusion"] = {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}
        return d


@dataclass
class MetricsReport:
    tasks: dict[str, TaskMetrics]
    metadata: dict = field(default_factory=dict)

    @property
    def overall(self) -> dict:
        total = TaskMetrics()
        for m in self.tasks.values():
            total = total.merge(m)
        return {"n": total.n, "n_parsed": total.n_parsed, "n_correct": total.n_correct,
                "accuracy": total.accuracy, "parse_rate": total.parse_rate}

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "overall": self.overall,
            "tasks": {name: self.tasks[name].summary() for name in sorted(self.tasks)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        tasks = {}
        for name, s in d["tasks"].items():
            conf = s.get("confusion", {})
            mae = s.get("mae")
            tasks[name] = TaskMetrics(
                s["n"], s["n_parsed"], s["n_correct"],
                s.get("abs_error_sum", (mae or 0.0) * s["n_parsed"]), conf.get("tp", 0), conf.get("fp", 0),
                conf.get("fn", 0), conf.get("tn", 0), s.get("task_kind", ""))
        return cls(tasks, d.get("metadata", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def score(records: Iterable[EvalRecord], metadata: dict | None = None) -> MetricsReport:
    """Fold eval records into per-category metrics (category falls back to task kind)."""
    tasks: dict[str, TaskMetrics] = {}
    endpoints = set()
    for rec in records:
        key = rec.qa.category or rec.qa.task
        if rec.qa.task == "description":
            continue
        tasks.setdefault(key, TaskMetrics()).add(rec.qa, rec.parsed)
        endpoints.add(rec.endpoint_id)
    if not tasks:
        raise ValueError("no scorable evaluation records")
    meta = {"endpoint_id": ",".join(sorted(e for e in endpoints if e)) or None,
            "seed": None, "timestamp": None}
    meta.update(metadata or {})
    return MetricsReport(tasks, meta)


# ── report layouts ──────────────────────────────────────────────────────────

TABLE2_COLUMNS = (
    ("Expression (Acc)", "expression", "accuracy"),
    ("Attribute (Acc)", "attribute", "accuracy"),
    ("AU (Acc)", "au", "accuracy"),
    ("Gender (Acc)", "gender", "accuracy"),
    ("Age (MAE)", "age", "mae"),
)

TABLE3_COLUMNS = (
    ("Eyelid type", "zs_eyelid_type"),
    ("Eye shape", "zs_eye_shape"),
    ("Nose shape", "zs_nose_shape"),
    ("Lip shape", "zs_lip_shape"),
)

LAYOUTS = ("table2", "table3", "parse_fig")


def _model_name(report: MetricsReport) -> str:
    return report.metadata.get("model") or report.metadata.get("endpoint_id") or "model"


def _render(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    line = lambda cells: " | ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(header), sep, *(line(r) for r in rows)]) + "\n"


def zero_shot_mean(report: MetricsReport) -> float | None:
    accs = [report.tasks[key].accuracy for _, key in TABLE3_COLUMNS if key in report.tasks]
    if len(accs) != len(TABLE3_COLUMNS):
        return None
    return sum(accs) / len(accs)


def emit_report(reports: MetricsReport | Sequence[MetricsReport],
                layout: str = "table2") -> tuple[str, dict]:
    """Render one or more reports; returns (table text, machine-readable summary).

    Accuracies print as percentages with one decimal, MAE with two; tasks a
    report lacks print as "-".
    """
    if isinstance(reports, MetricsReport):
        reports = [reports]
    if not reports:
        raise ValueError("no reports to render")
    for r in reports:
        if not r.tasks:
            raise ValueError("report has no tasks")
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}; choose from {LAYOUTS}")

    rows, summary = [], {"layout": layout, "rows": []}
    if layout == "table2":
        header = ["Model", *(c[0] for c in TABLE2_COLUMNS)]
        for r in reports:
            cells, values = [_model_name(r)], {}
            for title, key, metric in TABLE2_COLUMNS:
                m = r.tasks.get(key)
                v = None if m is None else (m.mae if metric == "mae" else m.accuracy)
                values[key] = v
                if v is None:
                    cells.append("-")
                else:
                    cells.append(f"{v:.2f}" if metric == "mae" else f"{100 * v:.1f}")
            rows.append(cells)
            summary["rows"].append({"model": cells[0], **values})
    elif layout == "table3":
        header = ["Model", *(c[0] for c in TABLE3_COLUMNS), "Mean accuracy"]
        for r in reports:
            cells, values = [_model_name(r)], {}
            for title, key in TABLE3_COLUMNS:
                m = r.tasks.get(key)
                values[key] = None if m is None else m.accuracy
                cells.append("-" if m is None else f"{100 * m.accuracy:.1f}")
            mean = zero_shot_mean(r)
            values["mean"] = mean
            cells.append("-" if mean is None else f"{100 * mean:.1f}")
            rows.append(cells)
            summary["rows"].append({"model": cells[0], **values})
    else:
        header = ["Model", "Parse probability (%)"]
        ranked = sorted(reports, key=lambda r: r.overall["parse_rate"])
        for r in ranked:
            p = r.overall["parse_rate"]
            rows.append([_model_name(r), f"{100 * p:.1f}"])
            summary["rows"].append({"model": _model_name(r), "parse_rate": p})
    return _render(header, rows), summary
