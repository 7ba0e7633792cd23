"""Stratified cross-validation, confusion metrics, and report rendering.

Class 1 is "positive" unless stated otherwise.  Precision/recall/F1 use the
zero-denominator convention (return 0 and flag the fold as degenerate), and
ROC-AUC is the rank statistic: the probability that a random positive
outscores a random negative, ties at half credit.
"""

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import TrainConfig, predict, train
from .dataio import KnowledgeBase, SampleSet
from .errors import DataError
from .rng import Rng

METRIC_FIELDS = ("accuracy", "precision", "recall", "f1", "roc_auc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: tuple[int, ...]

    def fold_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f == fold]


def stratified_folds(labels, k: int, seed: int) -> FoldAssignment:
    """Assign samples to k folds, balancing each class to within one.

    Within each class the indices are shuffled by the seeded generator
    (class 0 first, then class 1, one stream) and dealt round-robin.
    """
    labels = list(labels)
    if k < 2:
        raise ValueError("fold count must be >= 2")
    bad = [l for l in labels if l not in (0, 1)]
    if bad:
        raise DataError(f"labels must be 0/1, got {bad[0]!r}")
    rng = Rng(seed)
    fold_of = [0] * len(labels)
    for cls in (0, 1):
        idxs = [i for i, l in enumerate(labels) if l == cls]
        if len(idxs) < k:
            raise DataError(
                f"class {cls} has only {len(idxs)} samples, fewer than {k} folds"
            )
        rng.shuffle(idxs)
        for j, i in enumerate(idxs):
            fold_of[i] = j % k
    return FoldAssignment(k=k, fold_of=tuple(fold_of))


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} labels vs {len(y_pred)} predictions")
    if not y_true:
        raise ValueError("empty evaluation set")
    tp = tn = fp = fn = 0
    for t, p in zip(y_true, y_pred):
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 0:
            tn += 1
        elif t == 0 and p == 1:
            fp += 1
        else:
            fn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    degenerate: bool = False  # some denominator was zero


def prf1(m: ConfusionMatrix, positive_class: int = 1) -> ClassMetrics:
    """Precision/recall/F1 for the chosen positive class, plus accuracy."""
    if m.total == 0:
        raise ValueError("empty confusion matrix")
    if positive_class == 1:
        tp, fp, fn = m.tp, m.fp, m.fn
    elif positive_class == 0:
        tp, fp, fn = m.tn, m.fn, m.fp
    else:
        raise ValueError("positive_class must be 0 or 1")
    degenerate = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    accuracy = (m.tp + m.tn) / m.total
    return ClassMetrics(precision, recall, f1, accuracy, degenerate)


def roc_auc(y_true, scores) -> float:
    """Rank-based AUC; exact, with tied scores taking half credit."""
    y = np.asarray(list(y_true))
    s = np.asarray(list(scores), dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1 or y.shape[0] == 0:
        raise ValueError("labels and scores must be equal-length non-empty vectors")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC-AUC is undefined when only one class is present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(y.shape[0], dtype=np.float64)
    i = 0
    while i < order.shape[0]:
        j = i
        while j + 1 < order.shape[0] and s[order[j + 1]] == s[order[i]]:
            j += 1
        # 1-based mid-rank for the tie group [i, j]
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# Cross-validation

@dataclass(frozen=True)
class FoldResult:
    fold: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    confusion: ConfusionMatrix
    degenerate: bool = False

    def to_dict(self) -> dict:
        d = {
            "fold": self.fold,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "roc_auc": self.roc_auc,
            "confusion": self.confusion.to_dict(),
        }
        if self.degenerate:
            d["degenerate"] = True
        return d


@dataclass
class CVReport:
    folds: list[FoldResult]
    config: dict = field(default_factory=dict)

    def averages(self) -> dict:
        out = {}
        for name in METRIC_FIELDS:
            out[name] = float(np.mean([getattr(f, name) for f in self.folds]))
        return out

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "average": self.averages(),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CVReport":
        folds = []
        for fd in d["folds"]:
            folds.append(
                FoldResult(
                    fold=fd["fold"],
                    accuracy=fd["accuracy"],
                    precision=fd["precision"],
                    recall=fd["recall"],
                    f1=fd["f1"],
                    roc_auc=fd["roc_auc"],
                    confusion=ConfusionMatrix(**fd["confusion"]),
                    degenerate=fd.get("degenerate", False),
                )
            )
        return cls(folds=folds, config=d.get("config", {}))


def evaluate_model(
    params, data: SampleSet, kb: KnowledgeBase, cfg: TrainConfig
) -> tuple[list[int], list[int], list[float]]:
    """Labels, argmax predictions, and class-1 scores over a dataset."""
    y_true, y_pred, scores = [], [], []
    for s in data.samples:
        p1, pred = predict(params, s, kb, cfg)
        y_true.append(s.label)
        y_pred.append(int(pred.probs.argmax()))
        scores.append(p1)
    return y_true, y_pred, scores


def _fold_metrics(fold: int, y_true, y_pred, scores) -> FoldResult:
    m = confusion(y_true, y_pred)
    cm = prf1(m, positive_class=1)
    return FoldResult(
        fold=fold,
        accuracy=cm.accuracy,
        precision=cm.precision,
        recall=cm.recall,
        f1=cm.f1,
        roc_auc=roc_auc(y_true, scores),
        confusion=m,
        degenerate=cm.degenerate,
    )


def cross_validate(
    data: SampleSet, kb: KnowledgeBase, cfg: TrainConfig, folds: int = 5
) -> CVReport:
    """Train/evaluate once per held-out fold; deterministic in cfg.seed.

    Fold f trains with seed cfg.seed + f so folds have independent streams.
    """
    cfg.validate()
    assignment = stratified_folds(data.labels(), folds, cfg.seed)
    results = []
    for f in range(folds):
        held = set(assignment.fold_indices(f))
        train_set = SampleSet(
            data.d_t, data.d_v,
            [s for i, s in enumerate(data.samples) if i not in held],
        )
        eval_set = [data.samples[i] for i in sorted(held)]
        fold_cfg = replace(cfg, seed=cfg.seed + f)
        params, _ = train(train_set, kb, fold_cfg)
        y_true, y_pred, scores = evaluate_model(
            params, SampleSet(data.d_t, data.d_v, eval_set), kb, fold_cfg
        )
        results.append(_fold_metrics(f, y_true, y_pred, scores))
    config = dict(cfg.to_dict(), folds=folds)
    return CVReport(folds=results, config=config)


# ---------------------------------------------------------------------------
# Rendering

def render_report(report: CVReport, fmt: str) -> str:
    """Serialize a report as canonical JSON, a 4-decimal text table, or CSV."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt == "text":
        lines = ["fold  accuracy  precision  recall  f1      roc_auc"]
        for f in report.folds:
            lines.append(
                f"{f.fold:<4d}  {f.accuracy:.4f}    {f.precision:.4f}     "
                f"{f.recall:.4f}  {f.f1:.4f}  {f.roc_auc:.4f}"
            )
        avg = report.averages()
        lines.append(
            f"avg   {avg['accuracy']:.4f}    {avg['precision']:.4f}     "
            f"{avg['recall']:.4f}  {avg['f1']:.4f}  {avg['roc_auc']:.4f}"
        )
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["fold", *METRIC_FIELDS])
        for f in report.folds:
            writer.writerow([f.fold] + [repr(getattr(f, name)) for name in METRIC_FIELDS])
        avg = report.averages()
        writer.writerow(["average"] + [repr(avg[name]) for name in METRIC_FIELDS])
        return buf.getvalue()
    raise ValueError(f"format must be json, text, or csv, got {fmt!r}")


def render_confusion_csv(report: CVReport) -> str:
    """Per-fold confusion counts: fold,tp,tn,fp,fn."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fold", "tp", "tn", "fp", "fn"])
    for f in report.folds:
        c = f.confusion
        writer.writerow([f.fold, c.tp, c.tn, c.fp, c.fn])
    return buf.getvalue()
