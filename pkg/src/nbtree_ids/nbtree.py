"""Adaptive naive-Bayes tree.

A hybrid classifier: internal nodes split like a decision tree (multi-way
on discrete attributes, binary threshold on continuous ones) and every
leaf holds a naive-Bayes model fitted on exactly the examples routed to
it, classified with the attribute-weight exponents from the weighting
pass. A node stays a leaf when its own NB model already classifies the
node's examples perfectly, or when no candidate split is significantly
better than not splitting.

Split utility follows the classic NBTree protocol: the utility of a split
is the weighted average, over the child partitions it induces, of
stratified cross-validated NB accuracy inside each child; a split is
accepted only if it cuts the node's cross-validated error by more than
``significance`` (relative) and the node carries at least
``min_split_examples`` examples' worth of weight. Cross-validation folds
are assigned by a deterministic hash of (example row, node path), so
builds are exactly reproducible.

Continuous attributes are re-binned on each node's partition, so the
perfect-classification check matches what that node's leaf model would
actually see; candidate children are scored with their parent node's bins
and the final leaf models refit their own edges.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attribute_weighting import _threshold_candidates
from .dataset import Example, WeightedDataset
from .exceptions import DataFormatError, SchemaError, TrainingError
from .probability import (
    NaiveBayesModel,
    as_weight_array,
    bin_codes,
    equal_frequency_edges,
    fit_naive_bayes,
    _normalise_rows,
)

NBTREE_FORMAT = "nbtree/1"


@dataclass
class NBTreeParams:
    """Construction knobs."""

    folds: int = 5
    significance: float = 0.05        # required relative error reduction
    min_split_examples: float = 30.0  # node weight floor, in example-mass units
    max_depth: int = 10
    smoothing_k: float = 1.0
    bins: int = 10
    carry_weights: bool = True        # False resets example weights to 1/n

    def validate(self) -> None:
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not (0.0 <= self.significance < 1.0):
            raise ValueError("significance must be in [0, 1)")


@dataclass(frozen=True)
class SplitUtility:
    """Estimated post-split accuracy for one attribute."""

    attribute: str
    utility: float
    threshold: float | None = None


# -- deterministic fold assignment --------------------------------------------


def _mix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def _path_salt(path: str) -> np.uint64:
    return np.uint64(zlib.crc32(path.encode()))


def _fold_assign(labels: np.ndarray, keys: np.ndarray, folds: int) -> np.ndarray:
    """Round-robin folds within each class, ordered by hash key: stratified
    and a pure function of (row identity, node path)."""
    fold = np.empty(len(keys), dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        order = np.argsort(keys[idx], kind="stable")
        fold[idx[order]] = np.arange(len(idx)) % folds
    return fold


# -- encoded view used during construction -------------------------------------


class _NodeView:
    """One node's partition, encoded with bins fitted on the partition
    itself (discrete codes are global; continuous columns are re-binned so
    the node sees exactly what its own leaf model would see)."""

    __slots__ = ("rows", "codes", "V", "labels", "weights")

    def __init__(self, rows, codes, V, labels, weights):
        self.rows = rows          # global row ids (fold hashing key)
        self.codes = codes        # (m, A) node-level codes
        self.V = V
        self.labels = labels
        self.weights = weights

    def subset(self, pos: np.ndarray) -> "_NodeView":
        """Child view sharing the parent's binning."""
        return _NodeView(self.rows[pos], self.codes[pos], self.V,
                         self.labels[pos], self.weights[pos])


class _BuildContext:
    """Training data plus the knobs shared by every node evaluation."""

    def __init__(self, ds: WeightedDataset, attr_weights, params: NBTreeParams):
        params.validate()
        self.ds = ds
        self.params = params
        self.schema = ds.schema
        self.C = ds.schema.n_classes
        self.labels = ds.labels
        self.weights = ds.weights
        self.folds = params.folds
        self.attr_w = as_weight_array(attr_weights, ds.schema.attribute_names)
        self.example_mass = ds.total_weight / ds.n
        # smoothing in example-mass units, like fit_naive_bayes
        self.k = params.smoothing_k * self.example_mass
        self.raw = ds.columns

    def node_view(self, rows: np.ndarray) -> _NodeView:
        A = self.schema.n_attributes
        m = len(rows)
        codes = np.empty((m, A), dtype=np.int64)
        V = np.empty(A, dtype=np.int64)
        for j, (spec, col) in enumerate(zip(self.schema.attributes, self.raw)):
            if spec.is_discrete:
                codes[:, j] = col[rows]
                V[j] = len(spec.domain)
            else:
                edges = equal_frequency_edges(col[rows], self.params.bins)
                codes[:, j] = bin_codes(col[rows], edges)
                V[j] = len(edges) + 1
        return _NodeView(rows, codes, V, self.labels[rows], self.weights[rows])

    # priors with the usual rule: raw ratios unless a class has no weight
    def _log_priors(self, cw: np.ndarray) -> np.ndarray:
        totals = cw.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            raw = np.where(totals > 0, cw / np.where(totals > 0, totals, 1.0), 0.0)
            if self.k > 0:
                smoothed = (cw + self.k) / (totals + self.k * self.C)
                need = (cw.min(axis=-1, keepdims=True) <= 0) | (totals <= 0)
                raw = np.where(need, smoothed, raw)
            return np.log(raw)

    def train_scores(self, view: _NodeView) -> np.ndarray:
        """(m, C) weighted log scores of an NB model fitted on the view and
        applied to the same examples."""
        lab, w = view.labels, view.weights
        cw = np.bincount(lab, weights=w, minlength=self.C)
        scores = np.tile(self._log_priors(cw), (len(lab), 1))
        k = self.k
        for j, wa in enumerate(self.attr_w):
            if wa == 0.0:
                continue
            V = int(view.V[j])
            code = view.codes[:, j]
            cnt = np.bincount(lab * V + code, weights=w, minlength=self.C * V)
            cnt = cnt.reshape(self.C, V)
            denom = cw[:, None] + k * V
            with np.errstate(invalid="ignore", divide="ignore"):
                cond = np.where(denom > 0, (cnt + k) / np.where(denom > 0, denom, 1.0), 0.0)
                logc = np.log(cond)
            scores += wa * logc[:, code].T
        return scores

    def misclassified(self, view: _NodeView) -> int:
        pred = np.argmax(self.train_scores(view), axis=1)
        return int(np.count_nonzero(pred != view.labels))

    def cv_accuracy(self, view: _NodeView, salt: np.uint64) -> float:
        """Stratified k-fold cross-validated, weight-averaged NB accuracy;
        folds keyed by (global row id, salt)."""
        m = len(view.rows)
        if m == 0:
            return 0.0
        lab, w = view.labels, view.weights
        keys = _mix64(view.rows.astype(np.uint64) ^ salt)
        f = _fold_assign(lab, keys, self.folds)
        F, C, k = self.folds, self.C, self.k
        cw_fold = np.bincount(f * C + lab, weights=w, minlength=F * C).reshape(F, C)
        cw_train = cw_fold.sum(axis=0)[None, :] - cw_fold
        scores = self._log_priors(cw_train)[f]
        for j, wa in enumerate(self.attr_w):
            if wa == 0.0:
                continue
            V = int(view.V[j])
            code = view.codes[:, j]
            cnt = np.bincount((f * C + lab) * V + code, weights=w, minlength=F * C * V)
            cnt = cnt.reshape(F, C, V)
            train_cnt = cnt.sum(axis=0)[None, :, :] - cnt
            denom = cw_train[:, :, None] + k * V
            with np.errstate(invalid="ignore", divide="ignore"):
                cond = np.where(denom > 0, (train_cnt + k) / np.where(denom > 0, denom, 1.0), 0.0)
                logc = np.log(cond)
            scores += wa * logc[f, :, code]
        pred = np.argmax(scores, axis=1)
        total = w.sum()
        return float(min(1.0, max(0.0, (w * (pred == lab)).sum() / total)))

    def children_for(self, view: _NodeView, j: int, threshold: float | None):
        """(branch key, child positions) pairs; discrete branches only for
        values present in the partition."""
        if threshold is None:
            codes = view.codes[:, j]
            domain = self.schema.attributes[j].domain
            return [(domain[c], np.flatnonzero(codes == c)) for c in np.unique(codes)]
        vals = self.raw[j][view.rows]
        mask = vals <= threshold
        return [("le", np.flatnonzero(mask)), ("gt", np.flatnonzero(~mask))]

    def split_utility_value(self, view: _NodeView, j: int, salt: np.uint64,
                            node_accuracy: float) -> tuple[float, float | None]:
        """Best utility for attribute j (searching thresholds when
        continuous). Children lighter than one example's mass fall back to
        the node's own accuracy."""
        spec = self.schema.attributes[j]
        if spec.is_discrete:
            candidates = [None]
        else:
            thr = _threshold_candidates(self.raw[j][view.rows], view.weights)
            if thr.size == 0:
                return node_accuracy, None
            candidates = list(thr)
        total = float(view.weights.sum())
        best_u, best_t = -1.0, None
        for t in candidates:
            groups = self.children_for(view, j, t)
            u = 0.0
            for key, pos in groups:
                wch = float(view.weights[pos].sum())
                if wch <= 0:
                    continue
                if wch < self.example_mass:
                    acc = node_accuracy
                else:
                    acc = self.cv_accuracy(view.subset(pos), salt ^ _path_salt(f"{j}:{key}:{t}"))
                u += (wch / total) * acc
            u = min(1.0, max(0.0, u))
            if u > best_u:
                best_u, best_t = u, t
        return best_u, (None if best_t is None else float(best_t))

    def best_split(self, view: _NodeView, salt: np.uint64) -> SplitUtility | None:
        node_weight = float(view.weights.sum())
        if node_weight < self.params.min_split_examples * self.example_mass:
            return None
        node_acc = self.cv_accuracy(view, salt)
        node_err = 1.0 - node_acc
        if node_err <= 0:
            return None
        best: SplitUtility | None = None
        for j, spec in enumerate(self.schema.attributes):
            u, t = self.split_utility_value(view, j, salt, node_acc)
            if best is None or u > best.utility:
                best = SplitUtility(spec.name, u, t)
        if best is None:
            return None
        reduction = (node_err - (1.0 - best.utility)) / node_err
        if reduction <= self.params.significance:
            return None
        return best


# -- public node-level operations ----------------------------------------------


def node_misclassification_check(
    partition: WeightedDataset,
    attr_weights,
    k: float = 1.0,
    bins: int = 10,
) -> int:
    """Fit an NB model on the partition, classify the partition with the
    attribute-weight exponents, and count the examples whose prediction
    differs from their label. Zero means the caller should keep this node
    as a leaf without evaluating any split."""
    if partition.n == 0:
        raise TrainingError("empty partition")
    ctx = _BuildContext(partition, attr_weights,
                        NBTreeParams(smoothing_k=k, bins=bins))
    return ctx.misclassified(ctx.node_view(np.arange(partition.n)))


def split_utility(
    partition: WeightedDataset,
    attribute: str,
    attr_weights=None,
    params: NBTreeParams | None = None,
) -> SplitUtility:
    """Utility of splitting the partition on one attribute: the weighted
    average over the induced children of cross-validated NB accuracy.
    ``attr_weights`` defaults to all ones."""
    params = params or NBTreeParams()
    if attr_weights is None:
        attr_weights = np.ones(partition.schema.n_attributes)
    ctx = _BuildContext(partition, attr_weights, params)
    j = partition.schema.attribute_index(attribute)
    view = ctx.node_view(np.arange(partition.n))
    salt = _path_salt("root")
    node_acc = ctx.cv_accuracy(view, salt)
    u, t = ctx.split_utility_value(view, j, salt, node_acc)
    return SplitUtility(attribute, u, t)


def best_split(
    partition: WeightedDataset,
    attr_weights=None,
    params: NBTreeParams | None = None,
) -> SplitUtility | None:
    """Highest-utility split, or None when no split passes the significance
    test (better relative error reduction than ``significance`` on a node
    carrying at least ``min_split_examples`` examples' weight)."""
    params = params or NBTreeParams()
    if attr_weights is None:
        attr_weights = np.ones(partition.schema.n_attributes)
    ctx = _BuildContext(partition, attr_weights, params)
    view = ctx.node_view(np.arange(partition.n))
    return ctx.best_split(view, _path_salt("root"))


# -- the tree -------------------------------------------------------------------


@dataclass
class NBTreeNode:
    depth: int
    weight: float
    n: int
    model: NaiveBayesModel | None = None          # leaves (and fallbacks)
    attribute: str | None = None
    threshold: float | None = None
    children: dict[str, "NBTreeNode"] | None = None
    left: "NBTreeNode | None" = None
    right: "NBTreeNode | None" = None
    empty_branches: tuple[str, ...] = ()
    fallback_model: NaiveBayesModel | None = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None

    def heaviest_child(self) -> "NBTreeNode":
        if self.threshold is not None:
            return self.left if self.left.weight >= self.right.weight else self.right
        best = None
        for child in self.children.values():
            if best is None or child.weight > best.weight:
                best = child
        return best


@dataclass
class NBTree:
    """A built naive-Bayes tree plus the attribute weights its leaves use."""

    schema_hash: str
    classes: tuple[str, ...]
    attribute_names: tuple[str, ...]
    attr_weights: np.ndarray
    root: NBTreeNode
    model_id: str = "nbtree"

    @property
    def attribute_count(self) -> int:
        return len(self.attribute_names)

    # -- classification -----------------------------------------------------

    def _route_terminal(self, values_by_attr: dict[str, object]) -> NaiveBayesModel:
        node = self.root
        while not node.is_leaf:
            v = values_by_attr[node.attribute]
            if node.threshold is not None:
                node = node.left if float(v) <= node.threshold else node.right
            else:
                child = node.children.get(str(v))
                if child is not None:
                    node = child
                elif str(v) in node.empty_branches:
                    return node.fallback_model   # branch existed but was empty
                else:
                    node = node.heaviest_child() # value unseen at training time
        return node.model

    def classify_example(self, example: Example) -> tuple[str, np.ndarray]:
        values = dict(zip(self.attribute_names, example.values))
        model = self._route_terminal(values)
        w = self.attr_weights
        scores = model.log_scores(model.encode_example(example)[None, :], w)
        probs = _normalise_rows(scores)[0]
        return self.classes[int(np.argmax(scores[0]))], probs

    def predict_dataset(self, dataset: WeightedDataset) -> np.ndarray:
        if dataset.schema.structural_hash() != self.schema_hash:
            raise SchemaError("dataset schema does not match the tree schema")
        attr_index = {n: i for i, n in enumerate(dataset.schema.attribute_names)}
        decoded: dict[int, np.ndarray] = {}
        for j, spec in enumerate(dataset.schema.attributes):
            if spec.is_discrete:
                decoded[j] = np.asarray(spec.domain, dtype=object)[dataset.columns[j]]
            else:
                decoded[j] = dataset.columns[j]
        groups: dict[int, tuple[NaiveBayesModel, list[int]]] = {}
        for i in range(dataset.n):
            model = self._terminal_model(attr_index, decoded, i)
            groups.setdefault(id(model), (model, []))[1].append(i)
        out = np.empty(dataset.n, dtype=np.int64)
        for model, idx in groups.values():
            sub = dataset.take(np.asarray(idx))
            scores = model.log_scores(model.encode_dataset(sub), self.attr_weights)
            out[np.asarray(idx)] = np.argmax(scores, axis=1)
        return out

    def _terminal_model(self, attr_index, decoded, i) -> NaiveBayesModel:
        node = self.root
        while not node.is_leaf:
            j = attr_index[node.attribute]
            if node.threshold is not None:
                node = node.left if decoded[j][i] <= node.threshold else node.right
            else:
                v = decoded[j][i]
                child = node.children.get(v)
                if child is not None:
                    node = child
                elif v in node.empty_branches:
                    return node.fallback_model
                else:
                    node = node.heaviest_child()
        return node.model

    # -- inspection ----------------------------------------------------------

    def leaf_sizes(self) -> list[int]:
        sizes = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                sizes.append(node.n)
            elif node.threshold is not None:
                stack.extend([node.left, node.right])
            else:
                stack.extend(node.children.values())
        return sizes

    def node_count(self) -> int:
        count = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            count += 1
            if not node.is_leaf:
                if node.threshold is not None:
                    stack.extend([node.left, node.right])
                else:
                    stack.extend(node.children.values())
        return count

    def dump(self) -> str:
        lines: list[str] = []

        def walk(node: NBTreeNode, branch: str) -> None:
            pad = "  " * (node.depth - 1)
            if node.is_leaf:
                lines.append(f"{pad}{node.depth} {branch}nb-leaf (n={node.n}, w={node.weight:.6g})")
                return
            if node.threshold is not None:
                lines.append(f"{pad}{node.depth} {branch}split {node.attribute} @ {node.threshold!r}")
                walk(node.left, f"<= {node.threshold!r} -> ")
                walk(node.right, f"> {node.threshold!r} -> ")
            else:
                lines.append(f"{pad}{node.depth} {branch}split {node.attribute}")
                for sym, child in node.children.items():
                    walk(child, f"= {sym} -> ")
                if node.empty_branches:
                    pad2 = "  " * node.depth
                    lines.append(
                        f"{pad2}{node.depth + 1} empty branches {list(node.empty_branches)} -> parent nb"
                    )

        walk(self.root, "")
        return "\n".join(lines) + "\n"

    # -- serialisation ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": NBTREE_FORMAT,
            "model_id": self.model_id,
            "schema_hash": self.schema_hash,
            "classes": list(self.classes),
            "attributes": list(self.attribute_names),
            "attr_weights": [float(w) for w in self.attr_weights],
            "root": _nbnode_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NBTree":
        if doc.get("format") != NBTREE_FORMAT:
            raise DataFormatError(f"not a {NBTREE_FORMAT} document")
        return cls(
            doc["schema_hash"], tuple(doc["classes"]), tuple(doc["attributes"]),
            np.asarray(doc["attr_weights"], dtype=np.float64),
            _nbnode_from_dict(doc["root"]), doc.get("model_id", "nbtree"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NBTree":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NBTree":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _nbnode_to_dict(node: NBTreeNode) -> dict:
    doc: dict = {"depth": node.depth, "weight": node.weight, "n": node.n}
    if node.is_leaf:
        doc["model"] = node.model.to_dict()
        return doc
    doc["attribute"] = node.attribute
    if node.threshold is not None:
        doc["threshold"] = node.threshold
        doc["left"] = _nbnode_to_dict(node.left)
        doc["right"] = _nbnode_to_dict(node.right)
    else:
        doc["children"] = {s: _nbnode_to_dict(c) for s, c in node.children.items()}
        if node.empty_branches:
            doc["empty_branches"] = list(node.empty_branches)
            doc["fallback_model"] = node.fallback_model.to_dict()
    return doc


def _nbnode_from_dict(doc: dict) -> NBTreeNode:
    node = NBTreeNode(depth=doc["depth"], weight=doc["weight"], n=doc["n"])
    if "attribute" not in doc:
        node.model = NaiveBayesModel.from_dict(doc["model"])
        return node
    node.attribute = doc["attribute"]
    if "threshold" in doc:
        node.threshold = doc["threshold"]
        node.left = _nbnode_from_dict(doc["left"])
        node.right = _nbnode_from_dict(doc["right"])
    else:
        node.children = {s: _nbnode_from_dict(c) for s, c in doc["children"].items()}
        if "empty_branches" in doc:
            node.empty_branches = tuple(doc["empty_branches"])
            node.fallback_model = NaiveBayesModel.from_dict(doc["fallback_model"])
    return node


def build_nbtree(
    train: WeightedDataset,
    attr_weights=None,
    params: NBTreeParams | None = None,
) -> NBTree:
    """Grow the tree recursively.

    Each node first checks whether its own NB model classifies the node's
    examples perfectly; if so (or at max depth, or when no split passes
    the significance test) the node becomes an NB leaf. Otherwise the data
    is partitioned on the best-utility attribute and each child is grown
    the same way. Discrete splits branch on every domain value; values
    with no examples become fallback leaves that reuse the parent's model.
    """
    params = params or NBTreeParams()
    if train.n == 0:
        raise TrainingError("cannot build a tree from an empty dataset")
    if attr_weights is None:
        attr_weights = np.ones(train.schema.n_attributes)
    ds = train if params.carry_weights else train.with_uniform_weights()
    ctx = _BuildContext(ds, attr_weights, params)
    schema = ds.schema

    def fit_leaf_model(rows: np.ndarray) -> NaiveBayesModel:
        return fit_naive_bayes(ds.take(rows), k=params.smoothing_k, bins=params.bins)

    def leaf(rows: np.ndarray, depth: int) -> NBTreeNode:
        return NBTreeNode(
            depth=depth, weight=float(ds.weights[rows].sum()), n=len(rows),
            model=fit_leaf_model(rows),
        )

    def grow(rows: np.ndarray, path: str, depth: int) -> NBTreeNode:
        view = ctx.node_view(rows)
        if depth >= params.max_depth or ctx.misclassified(view) == 0:
            return leaf(rows, depth)
        found = ctx.best_split(view, _path_salt(path))
        if found is None:
            return leaf(rows, depth)
        j = schema.attribute_index(found.attribute)
        node = NBTreeNode(
            depth=depth, weight=float(ds.weights[rows].sum()), n=len(rows),
            attribute=found.attribute, threshold=found.threshold,
        )
        if found.threshold is not None:
            mask = ctx.raw[j][rows] <= found.threshold
            node.left = grow(rows[mask], f"{path}/{found.attribute}<=", depth + 1)
            node.right = grow(rows[~mask], f"{path}/{found.attribute}>", depth + 1)
        else:
            codes = ctx.raw[j][rows]
            domain = schema.attributes[j].domain
            node.children = {}
            empty = []
            for code, sym in enumerate(domain):
                child_rows = rows[codes == code]
                if len(child_rows) == 0:
                    empty.append(sym)
                    continue
                node.children[sym] = grow(
                    child_rows, f"{path}/{found.attribute}={sym}", depth + 1
                )
            if empty:
                node.empty_branches = tuple(empty)
                node.fallback_model = fit_leaf_model(rows)
        return node

    root = grow(np.arange(ds.n), "root", 1)
    return NBTree(
        schema.structural_hash(), schema.class_names, schema.attribute_names,
        ctx.attr_w, root,
    )


def classify_nbtree(tree: NBTree, example: Example) -> tuple[str, np.ndarray]:
    """Route one example to its leaf and classify with the leaf model under
    the tree's attribute weights. Returns (label, normalised per-class
    probabilities)."""
    return tree.classify_example(example)
