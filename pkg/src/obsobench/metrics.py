"""Confusion matrices and the binary classification metric suite."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .dataset import State
from .errors import LengthMismatch, UndefinedMetric, UnknownRowAlignment
from .parsing import Verdict

EXCLUDE_ABSTAIN = "exclude_abstain"
ABSTAIN_AS_NEGATIVE = "abstain_as_negative"
ABSTAIN_AS_POSITIVE = "abstain_as_positive"

POLICIES = (EXCLUDE_ABSTAIN, ABSTAIN_AS_NEGATIVE, ABSTAIN_AS_POSITIVE)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int
    abstentions: int = 0
    positive_class: State = State.AVAILABLE

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn", "abstentions"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def n_scored(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def n_total(self) -> int:
        return self.n_scored + self.abstentions


def build_confusion(
    verdicts: Sequence[Verdict],
    labels: Sequence[State],
    positive_class: State,
    policy: str = EXCLUDE_ABSTAIN,
) -> ConfusionMatrix:
    """Score verdicts against ground truth under an abstention policy."""
    if policy not in POLICIES:
        raise ValueError(f"unknown abstention policy {policy!r}")
    if len(verdicts) != len(labels):
        raise LengthMismatch(len(verdicts), len(labels))
    seen_rows = set()
    for v in verdicts:
        if v.row_id in seen_rows:
            raise UnknownRowAlignment(f"duplicate row_id {v.row_id!r} in verdicts")
        seen_rows.add(v.row_id)

    negative_class = (
        State.OBSOLETE if positive_class is State.AVAILABLE else State.AVAILABLE
    )
    tp = fp = fn = tn = abstentions = 0
    for verdict, label in zip(verdicts, labels):
        if verdict.is_abstain:
            if policy == EXCLUDE_ABSTAIN:
                abstentions += 1
                continue
            predicted = positive_class if policy == ABSTAIN_AS_POSITIVE else negative_class
        else:
            predicted = verdict.state
        if predicted is positive_class:
            if label is positive_class:
                tp += 1
            else:
                fp += 1
        else:
            if label is positive_class:
                fn += 1
            else:
                tn += 1
    return ConfusionMatrix(tp, fp, fn, tn, abstentions, positive_class)


def _ratio(num: int, den: int, name: str) -> float:
    if den == 0:
        raise UndefinedMetric(name)
    return num / den


def accuracy(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.tn, cm.n_scored, "accuracy")


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp, "precision")


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn, "recall")


def f1(cm: ConfusionMatrix) -> float:
    p = precision(cm)
    r = recall(cm)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def fpr(cm: ConfusionMatrix) -> float:
    return _ratio(cm.fp, cm.fp + cm.tn, "fpr")


def auc_single_point(cm: ConfusionMatrix) -> float:
    """Trapezoidal area under the three-point ROC polyline of a hard classifier."""
    tpr_value = recall(cm)
    fpr_value = fpr(cm)
    return (tpr_value + 1.0 - fpr_value) / 2.0


def roc_points(cm: ConfusionMatrix) -> list[tuple[float, float]]:
    return [(0.0, 0.0), (fpr(cm), recall(cm)), (1.0, 1.0)]


@dataclass(frozen=True)
class MetricsReport:
    """Per-(model, dataset) metric bundle. None marks an undefined metric."""

    model_id: str
    dataset_name: str
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    fpr: float | None
    auc: float | None
    abstention_rate: float
    roc_points: tuple[tuple[float, float], ...] | None
    cm: ConfusionMatrix
    abstentions_by_reason: dict[str, int] = field(default_factory=dict)


def _try(metric, cm: ConfusionMatrix) -> float | None:
    try:
        return metric(cm)
    except UndefinedMetric:
        return None


def compute_report(
    model_id: str,
    dataset_name: str,
    verdicts: Sequence[Verdict],
    labels: Sequence[State],
    positive_class: State,
    policy: str = EXCLUDE_ABSTAIN,
) -> MetricsReport:
    cm = build_confusion(verdicts, labels, positive_class, policy)
    by_reason: dict[str, int] = {}
    for v in verdicts:
        if v.is_abstain:
            by_reason[v.reason] = by_reason.get(v.reason, 0) + 1
    n_abstain = sum(by_reason.values())
    rate = n_abstain / len(verdicts) if verdicts else 0.0
    try:
        roc = tuple(roc_points(cm))
    except UndefinedMetric:
        roc = None
    return MetricsReport(
        model_id=model_id,
        dataset_name=dataset_name,
        accuracy=_try(accuracy, cm),
        precision=_try(precision, cm),
        recall=_try(recall, cm),
        f1=_try(f1, cm),
        fpr=_try(fpr, cm),
        auc=_try(auc_single_point, cm),
        abstention_rate=rate,
        roc_points=roc,
        cm=cm,
        abstentions_by_reason=by_reason,
    )


def write_roc_csv(report: MetricsReport, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["fpr", "tpr"])
        for x, y in report.roc_points or ():
            writer.writerow([repr(x), repr(y)])
