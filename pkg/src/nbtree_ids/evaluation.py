"""Confusion matrices, per-class detection / false-positive rates, and the
five-way model comparison (proposed pipeline against naive-Bayes and
information-gain-tree baselines on the full and reduced attribute sets).

Detection rate of a class is the percentage of its true examples predicted
as that class. The per-class false-positive rate is the percentage of all
examples *not* of the class that are predicted as it; the classic scalar
variant (misclassified normal traffic over all normal traffic) is reported
separately as ``normal_fp``. Rates with an empty denominator are reported
as undefined ("n/a"), never as 0.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attribute_weighting import (
    SelectionParams,
    SelectionReport,
    build_weighted_tree,
    select_attributes,
)
from .dataset import WeightedDataset, project_attributes
from .exceptions import EvaluationError, SchemaError
from .nbtree import NBTreeParams, build_nbtree
from .probability import fit_naive_bayes


@dataclass
class ConfusionMatrix:
    """Counts indexed (true class, predicted class) in schema class order."""

    classes: tuple[str, ...]
    counts: np.ndarray

    @classmethod
    def from_indices(cls, truth: np.ndarray, predicted: np.ndarray,
                     classes: tuple[str, ...]) -> "ConfusionMatrix":
        k = len(classes)
        counts = np.bincount(truth * k + predicted, minlength=k * k).reshape(k, k)
        return cls(classes, counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def column_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def index(self, class_name: str) -> int:
        try:
            return self.classes.index(class_name)
        except ValueError:
            raise SchemaError(f"unknown class {class_name!r}") from None

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "counts": [[int(c) for c in row] for row in self.counts],
        }


def confusion(truth, predicted, classes: tuple[str, ...]) -> ConfusionMatrix:
    """Build a confusion matrix from parallel label sequences (class names
    or class indices)."""
    if len(truth) != len(predicted):
        raise EvaluationError(
            f"length mismatch: {len(truth)} truths vs {len(predicted)} predictions"
        )
    index = {c: i for i, c in enumerate(classes)}

    def to_idx(seq) -> np.ndarray:
        arr = np.asarray(seq)
        if arr.dtype.kind in "iu":
            return arr.astype(np.int64)
        try:
            return np.array([index[x] for x in seq], dtype=np.int64)
        except KeyError as exc:
            raise SchemaError(f"unknown class {exc.args[0]!r}") from None

    return ConfusionMatrix.from_indices(to_idx(truth), to_idx(predicted), tuple(classes))


def detection_rate(matrix: ConfusionMatrix, class_name: str) -> float | None:
    """Percentage of true class examples predicted as that class; None when
    the class has no true examples."""
    i = matrix.index(class_name)
    support = int(matrix.counts[i].sum())
    if support == 0:
        return None
    return float(matrix.counts[i, i]) / support * 100.0


def false_positive_rate(matrix: ConfusionMatrix, class_name: str) -> float | None:
    """Percentage of non-class examples predicted as the class; None when
    every example truly belongs to the class."""
    i = matrix.index(class_name)
    others = np.delete(np.arange(len(matrix.classes)), i)
    denom = int(matrix.counts[others].sum())
    if denom == 0:
        return None
    return float(matrix.counts[others, i].sum()) / denom * 100.0


def normal_false_positive(matrix: ConfusionMatrix, normal_class: str = "Normal") -> float | None:
    """Misclassified normal traffic over all normal traffic, as a percent."""
    i = matrix.index(normal_class)
    denom = int(matrix.counts[i].sum())
    if denom == 0:
        return None
    wrong = denom - int(matrix.counts[i, i])
    return wrong / denom * 100.0


def accuracy(matrix: ConfusionMatrix) -> float:
    return float(np.trace(matrix.counts)) / matrix.total if matrix.total else 0.0


@dataclass
class EvalReport:
    """One model evaluated on one test set."""

    model_id: str
    dataset_id: str
    attribute_count: int
    classes: tuple[str, ...]
    matrix: ConfusionMatrix
    per_class: list[dict]
    accuracy: float
    normal_fp: float | None
    wall_clock_sec: float

    def to_dict(self) -> dict:
        return {
            "format": "eval-report/1",
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "attribute_count": self.attribute_count,
            "classes": list(self.classes),
            "per_class": self.per_class,
            "accuracy": self.accuracy,
            "normal_fp": self.normal_fp,
            "confusion": self.matrix.to_dict(),
            "wall_clock_sec": self.wall_clock_sec,
        }

    def to_text(self) -> str:
        def fmt(x: float | None) -> str:
            return "n/a" if x is None else f"{x:.2f}"

        lines = [
            f"model: {self.model_id}   test: {self.dataset_id}   "
            f"attributes: {self.attribute_count}",
            f"{'class':<10} {'DR (%)':>8} {'FP (%)':>8} {'support':>9}",
        ]
        for row in self.per_class:
            lines.append(
                f"{row['class']:<10} {fmt(row['dr']):>8} {fmt(row['fp']):>8} "
                f"{row['support']:>9}"
            )
        lines.append(
            f"accuracy: {self.accuracy * 100:.2f}%   normal-fp: {fmt(self.normal_fp)}%   "
            f"wall: {self.wall_clock_sec:.2f}s"
        )
        return "\n".join(lines) + "\n"

    def dr(self, class_name: str) -> float | None:
        for row in self.per_class:
            if row["class"] == class_name:
                return row["dr"]
        raise SchemaError(f"unknown class {class_name!r}")

    def macro_dr(self) -> float:
        vals = [r["dr"] for r in self.per_class if r["dr"] is not None]
        return float(np.mean(vals)) if vals else 0.0


def evaluate(model, test: WeightedDataset, model_id: str | None = None) -> EvalReport:
    """Classify every test example and assemble the per-class report.

    ``model`` is anything with ``predict_dataset``, ``schema_hash``,
    ``classes`` and ``attribute_count`` (naive-Bayes models, gain trees,
    NB-trees). Test labels must be the load-time labels; a relabeled
    working copy is rejected.
    """
    if model.schema_hash != test.schema.structural_hash():
        raise EvaluationError(
            f"model schema ({model.schema_hash}) does not match test schema "
            f"({test.schema.structural_hash()})"
        )
    if np.any(test.labels != test.true_labels):
        raise EvaluationError("test set carries relabeled working labels; "
                              "evaluate against the load-time labels")
    start = time.perf_counter()
    pred = model.predict_dataset(test)
    elapsed = time.perf_counter() - start
    classes = tuple(model.classes)
    matrix = ConfusionMatrix.from_indices(test.labels, pred, classes)
    per_class = []
    for i, c in enumerate(classes):
        per_class.append({
            "class": c,
            "dr": detection_rate(matrix, c),
            "fp": false_positive_rate(matrix, c),
            "support": int(matrix.counts[i].sum()),
        })
    return EvalReport(
        model_id=model_id or getattr(model, "model_id", model.__class__.__name__),
        dataset_id=test.dataset_id,
        attribute_count=model.attribute_count,
        classes=classes,
        matrix=matrix,
        per_class=per_class,
        accuracy=accuracy(matrix),
        normal_fp=normal_false_positive(
            matrix, "Normal" if "Normal" in classes else classes[0]
        ),
        wall_clock_sec=elapsed,
    )


# -- the five-way comparison ---------------------------------------------------


@dataclass
class ComparisonConfig:
    """What to train and how."""

    selection: SelectionParams = field(default_factory=SelectionParams)
    nbtree: NBTreeParams = field(default_factory=NBTreeParams)
    smoothing_k: float = 1.0
    bins: int = 10
    baselines: bool = True
    train_on_relabeled: bool = False
    tree_max_depth: int | None = None
    tree_min_leaf_examples: float | None = None
    workers: int = 1


@dataclass
class ComparisonBundle:
    """Reports for the proposed pipeline and any baselines, plus the
    attribute-selection audit trail."""

    selection: SelectionReport
    kept_attributes: list[str]
    reports: list[EvalReport]
    models: dict = field(default_factory=dict)

    def report(self, model_id: str) -> EvalReport:
        for r in self.reports:
            if r.model_id == model_id:
                return r
        raise KeyError(model_id)

    def to_dict(self) -> dict:
        return {
            "format": "comparison/1",
            "selection": self.selection.to_dict(),
            "kept_attributes": self.kept_attributes,
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_text(self) -> str:
        parts = [self.selection.to_text()]
        parts.extend(r.to_text() for r in self.reports)
        return "\n".join(parts)


def train_models(train: WeightedDataset, config: ComparisonConfig | None = None):
    """Run the attribute weighting once and train the proposed NB-tree on
    the reduced attributes (carrying the posterior weights), plus plain NB
    and gain-tree baselines on the full and reduced attribute sets unless
    baselines are disabled.

    The NB-tree trains on load-time labels by default; set
    ``train_on_relabeled`` to hand it the relabeled working labels instead.
    Baselines always train on uniformly weighted, load-time-labeled data.
    Returns (selection result, ordered {model_id: model}).
    """
    config = config or ComparisonConfig()
    selection = select_attributes(train, config.selection)
    kept = selection.weights.kept_names()
    reduced_train = selection.reduced
    if not config.train_on_relabeled:
        reduced_train = reduced_train.with_true_labels()

    def leaf_floor(ds: WeightedDataset) -> float | None:
        if config.tree_min_leaf_examples is None:
            return None
        return config.tree_min_leaf_examples * ds.total_weight / ds.n

    nbt = build_nbtree(reduced_train, selection.weights.as_array(kept), config.nbtree)
    nbt.model_id = "proposed-nbtree"
    models: dict[str, object] = {"proposed-nbtree": nbt}

    if config.baselines:
        k, bins = config.smoothing_k, config.bins
        nb_full = fit_naive_bayes(train, k=k, bins=bins)
        nb_full.model_id = "nb-full"
        tree_full = build_weighted_tree(
            train, max_depth=config.tree_max_depth, min_weight_leaf=leaf_floor(train)
        )
        tree_full.model_id = "tree-full"
        plain_reduced = project_attributes(train, kept)
        nb_reduced = fit_naive_bayes(plain_reduced, k=k, bins=bins)
        nb_reduced.model_id = "nb-reduced"
        tree_reduced = build_weighted_tree(
            plain_reduced, max_depth=config.tree_max_depth,
            min_weight_leaf=leaf_floor(plain_reduced),
        )
        tree_reduced.model_id = "tree-reduced"
        models.update({
            "nb-full": nb_full, "tree-full": tree_full,
            "nb-reduced": nb_reduced, "tree-reduced": tree_reduced,
        })
    return selection, models


def run_comparison(
    train: WeightedDataset,
    test: WeightedDataset,
    config: ComparisonConfig | None = None,
) -> ComparisonBundle:
    """Train the proposed pipeline and any baselines, then evaluate each on
    the test set (reduced-attribute models see the test set projected onto
    the kept attributes)."""
    config = config or ComparisonConfig()
    selection, models = train_models(train, config)
    kept = selection.weights.kept_names()
    reduced_test = project_attributes(test, kept)
    full_ids = {"nb-full", "tree-full"}
    jobs = [
        (model, test if mid in full_ids else reduced_test)
        for mid, model in models.items()
    ]

    def run_one(job):
        model, testset = job
        return evaluate(model, testset, model_id=model.model_id)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            reports = list(pool.map(run_one, jobs))
    else:
        reports = [run_one(j) for j in jobs]

    return ComparisonBundle(
        selection=selection.report,
        kept_attributes=list(kept),
        reports=reports,
        models=models,
    )
