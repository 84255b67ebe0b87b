"""Confusion-matrix metrics and the repeated-split benchmark.

``auc`` here is the single-threshold score ``(sensitivity + specificity) / 2``
(balanced accuracy), not the area under a ROC curve.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, EncoderState, encode, fit_encoder, stratified_split
from .ensemble import PipelineConfig, fit_superensemble, predict_superensemble
from .rbfn import RbfTrainConfig, predict_rbfn, train_rbfn
from .tree import Criterion, default_minsplit, grow_tree, predict_tree

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def sensitivity(self) -> float:
        return self.tp / (self.tp + self.fn)

    @property
    def specificity(self) -> float:
        return self.tn / (self.fp + self.tn)

    def __str__(self):
        return (f"                 pred positive  pred negative\n"
                f"actual positive  {self.tp:>13d}  {self.fn:>13d}\n"
                f"actual negative  {self.fp:>13d}  {self.tn:>13d}")


def confusion(actual, predicted) -> ConfusionMatrix:
    """Counts with label 1 as positive (the majority class)."""
    actual = np.asarray(actual).astype(bool)
    predicted = np.asarray(predicted).astype(bool)
    if actual.shape != predicted.shape:
        raise ValueError(f"length mismatch: {actual.size} actual vs {predicted.size} predicted")
    if actual.size == 0:
        raise ValueError("cannot build a confusion matrix from zero labels")
    tp = int(np.count_nonzero(actual & predicted))
    fn = int(np.count_nonzero(actual & ~predicted))
    fp = int(np.count_nonzero(~actual & predicted))
    tn = int(np.count_nonzero(~actual & ~predicted))
    return ConfusionMatrix(tp, fn, fp, tn)


def auc(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn < 1 or cm.fp + cm.tn < 1:
        raise ValueError("both classes must be present among the actual labels")
    return (cm.sensitivity + cm.specificity) / 2.0


# ---------------------------------------------------------------------------
# seeds


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit seed for the stream identified by ``keys``."""
    s = splitmix64(int(seed) & _MASK64)
    for key in keys:
        s = splitmix64(s ^ (int(key) & _MASK64))
    return s >> 1


# ---------------------------------------------------------------------------
# classifiers under test


class TreeClassifier:
    def __init__(self, criterion=Criterion.HELLINGER, minsplit_fraction: float = 0.1, name: Optional[str] = None):
        self.criterion = Criterion.parse(criterion)
        self.minsplit_fraction = minsplit_fraction
        self.name = name or {
            Criterion.HELLINGER: "HDDT",
            Criterion.HELLINGER_AS_PRINTED: "HDDT (as printed)",
            Criterion.GINI: "CT (gini)",
            Criterion.ENTROPY: "CT (entropy)",
        }[self.criterion]

    def fit_predict(self, dataset: Dataset, split, seed: int) -> np.ndarray:
        tr = split.train
        tree = grow_tree(dataset.X[tr], dataset.y[tr], dataset.categorical_mask, self.criterion,
                         default_minsplit(tr.size, self.minsplit_fraction))
        return predict_tree(tree, dataset.X[split.test])


class RbfClassifier:
    """The network alone on every standardized / one-hot feature."""

    def __init__(self, config: RbfTrainConfig = RbfTrainConfig(), name: str = "RBFN"):
        self.config = config
        self.name = name

    def fit_predict(self, dataset: Dataset, split, seed: int) -> np.ndarray:
        enc: EncoderState = fit_encoder(dataset, split.train)
        val = (encode(dataset, split.validation, enc), dataset.y[split.validation])
        net = train_rbfn(encode(dataset, split.train, enc), dataset.y[split.train], self.config.with_seed(seed), val)
        return predict_rbfn(net, encode(dataset, split.test, enc))


class SuperensembleClassifier:
    def __init__(self, config: PipelineConfig = PipelineConfig(), name: str = "Superensemble"):
        self.config = config
        self.name = name

    def fit_predict(self, dataset: Dataset, split, seed: int) -> np.ndarray:
        cfg = PipelineConfig(self.config.criterion, self.config.minsplit_fraction, self.config.top_m,
                             self.config.rbfn, seed)
        model = fit_superensemble(dataset, split.train, split.validation, cfg)
        return predict_superensemble(model, dataset, split.test)


def default_classifiers(config: PipelineConfig = PipelineConfig(), criteria: Sequence = (Criterion.HELLINGER,)) -> list:
    out = [TreeClassifier(c, config.minsplit_fraction) for c in criteria]
    out.append(RbfClassifier(config.rbfn))
    out.append(SuperensembleClassifier(config))
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass
class RepeatResults:
    aucs: list = field(default_factory=list)
    confusions: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.aucs)

    @property
    def sd(self) -> float:
        return statistics.stdev(self.aucs) if len(self.aucs) > 1 else 0.0


@dataclass
class EvalReport:
    classifiers: list = field(default_factory=list)
    datasets: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def add(self, classifier: str, dataset: str, value: float, cm: ConfusionMatrix):
        if classifier not in self.classifiers:
            self.classifiers.append(classifier)
        if dataset not in self.datasets:
            self.datasets.append(dataset)
        entry = self.results.setdefault((classifier, dataset), RepeatResults())
        entry.aucs.append(value)
        entry.confusions.append(cm)

    def get(self, classifier: str, dataset: str) -> RepeatResults:
        return self.results[(classifier, dataset)]

    def merge(self, other: "EvalReport") -> "EvalReport":
        for (c, d), res in other.results.items():
            for v, cm in zip(res.aucs, res.confusions):
                self.add(c, d, v, cm)
        return self


def run_benchmark(dataset: Dataset, classifiers=None, repeats: int = 5, seed: int = 0,
                  name: Optional[str] = None) -> EvalReport:
    """Repeated stratified 50:25:25 splits; test-set AUC per classifier and repeat.

    Split seeds depend only on ``(seed, repeat)``, so adding or removing a
    classifier never changes the splits the others see.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, got {repeats}")
    classifiers = default_classifiers() if classifiers is None else list(classifiers)
    name = name or dataset.name
    report = EvalReport()
    for r in range(repeats):
        split = stratified_split(dataset, seed=derive_seed(seed, r, 0))
        fit_seed = derive_seed(seed, r, 1)
        y_test = dataset.y[split.test]
        for clf in classifiers:
            cm = confusion(y_test, clf.fit_predict(dataset, split, fit_seed))
            report.add(clf.name, name, auc(cm), cm)
    return report


def _cell(report: EvalReport, clf: str, ds: str) -> str:
    if (clf, ds) not in report.results:
        return "-"
    res = report.get(clf, ds)
    return f"{res.mean:.3f} ({res.sd:.3f})"


def emit_report(report: EvalReport, fmt: str = "table") -> str:
    """Render one row per classifier and one ``mean (sd)`` column per dataset."""
    if not report.results:
        raise ValueError("report is empty")
    header = ["Classifier", *report.datasets]
    rows = [[clf, *(_cell(report, clf, ds) for ds in report.datasets)] for clf in report.classifiers]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()
             for r in [header, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
