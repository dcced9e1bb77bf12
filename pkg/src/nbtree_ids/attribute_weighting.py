"""Posterior-driven attribute weighting.

The full procedure: initialise example weights to 1/n, fit a naive-Bayes
model, replace each example's weight with its highest normalised posterior
(optionally relabeling the example to the argmax class), grow a decision
tree by weighted information gain on the updated data, then weight each
attribute 1/sqrt(d) where d is the smallest depth at which the tree tests
it (absent attributes get 0) and drop the zero-weight attributes.

The tree here exists to rank attributes; it is also usable directly as a
plain information-gain classifier, which is the tree baseline elsewhere in
the toolkit (with uniform example weights it is an ordinary ID3-style
tree: multi-way splits on discrete attributes, binary threshold splits on
continuous ones).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Schema, WeightedDataset, project_attributes
from .exceptions import DataFormatError, DegenerateTreeError, SchemaError, TrainingError
from .probability import NaiveBayesModel, fit_naive_bayes

TREE_FORMAT = "gain-tree/1"

_THRESHOLD_CAP = 32     # candidate cut points per continuous attribute
_GAIN_TOL = 1e-12       # below this a split is considered useless


# -- entropy and gain ---------------------------------------------------------


def _entropy_rows(class_weights: np.ndarray) -> np.ndarray:
    """Entropy in bits for each row of a (rows, classes) weight matrix."""
    totals = class_weights.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = class_weights / totals
    plogp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def _entropy(class_weights: np.ndarray) -> float:
    return float(_entropy_rows(class_weights[None, :])[0])


def weighted_entropy(dataset: WeightedDataset) -> float:
    """Entropy (bits) of the class distribution by weight share."""
    if dataset.total_weight <= 0:
        raise TrainingError("cannot compute entropy: zero total weight")
    cw = np.bincount(dataset.labels, weights=dataset.weights,
                     minlength=dataset.schema.n_classes)
    return _entropy(cw)


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, levels: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    sv = values[order]
    cw = np.cumsum(weights[order])
    cw /= cw[-1]
    idx = np.searchsorted(cw, levels, side="left")
    return sv[np.clip(idx, 0, len(sv) - 1)]


def _threshold_candidates(values: np.ndarray, weights: np.ndarray,
                          cap: int = _THRESHOLD_CAP) -> np.ndarray:
    """Candidate thresholds: midpoints between consecutive distinct values,
    capped by taking midpoints between weighted-quantile cut points when
    there are more than ``cap`` gaps."""
    u = np.unique(values)
    if u.size < 2:
        return np.empty(0)
    if u.size - 1 <= cap:
        return (u[1:] + u[:-1]) / 2.0
    levels = np.arange(1, cap + 1) / (cap + 1)
    qv = np.unique(_weighted_quantile(values, weights, levels))
    if qv.size < 2:
        # weight mass collapsed onto one value: fall back to evenly spaced cuts
        qv = np.unique(u[np.linspace(0, u.size - 1, cap + 1).astype(int)])
    return (qv[1:] + qv[:-1]) / 2.0


def _gain_discrete(codes: np.ndarray, labels: np.ndarray, weights: np.ndarray,
                   n_values: int, n_classes: int) -> float:
    total = weights.sum()
    child = np.bincount(
        codes.astype(np.int64) * n_classes + labels,
        weights=weights, minlength=n_values * n_classes,
    ).reshape(n_values, n_classes)
    node_h = _entropy(child.sum(axis=0))
    shares = child.sum(axis=1) / total
    return node_h - float((shares * _entropy_rows(child)).sum())


def _gain_continuous(values: np.ndarray, labels: np.ndarray, weights: np.ndarray,
                     n_classes: int, cap: int = _THRESHOLD_CAP) -> tuple[float, float | None]:
    thresholds = _threshold_candidates(values, weights, cap)
    if thresholds.size == 0:
        return 0.0, None
    order = np.argsort(values, kind="stable")
    sv = values[order]
    onehot = np.zeros((len(values), n_classes))
    onehot[np.arange(len(values)), labels[order]] = weights[order]
    cum = np.cumsum(onehot, axis=0)
    total_cw = cum[-1]
    total = total_cw.sum()
    node_h = _entropy(total_cw)
    idx = np.searchsorted(sv, thresholds, side="right")
    left = cum[idx - 1]
    right = total_cw[None, :] - left
    wl = left.sum(axis=1) / total
    wr = right.sum(axis=1) / total
    gains = node_h - wl * _entropy_rows(left) - wr * _entropy_rows(right)
    best = int(np.argmax(gains))
    return float(gains[best]), float(thresholds[best])


@dataclass(frozen=True)
class GainResult:
    attribute: str
    gain: float
    threshold: float | None = None


def weighted_info_gain(dataset: WeightedDataset, attribute: str) -> GainResult:
    """Weighted information gain of splitting on one attribute.

    Discrete attributes partition by value; continuous attributes report
    the best binary threshold among the candidate cut points. A constant
    attribute has gain 0. Gains within 1e-12 below zero are clamped.
    """
    if dataset.total_weight <= 0:
        raise TrainingError("cannot compute gain: zero total weight")
    j = dataset.schema.attribute_index(attribute)
    spec = dataset.schema.attributes[j]
    col = dataset.columns[j]
    C = dataset.schema.n_classes
    if spec.is_discrete:
        gain = _gain_discrete(col, dataset.labels, dataset.weights, len(spec.domain), C)
        thr = None
    else:
        gain, thr = _gain_continuous(col, dataset.labels, dataset.weights, C)
    if gain < 0:
        gain = 0.0 if gain > -_GAIN_TOL else gain
    return GainResult(attribute, gain, thr)


# -- decision tree ------------------------------------------------------------


@dataclass
class TreeNode:
    """One tree node. Internal nodes carry a split attribute (and for
    continuous splits a threshold); leaves carry a majority class label.
    Root depth is 1."""

    depth: int
    weight: float
    n: int
    label: str | None = None
    attribute: str | None = None
    threshold: float | None = None
    children: dict[str, "TreeNode"] | None = None   # discrete branches by symbol
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None

    def heaviest_child(self) -> "TreeNode":
        if self.threshold is not None:
            return self.left if self.left.weight >= self.right.weight else self.right
        best = None
        for child in self.children.values():
            if child is not None and (best is None or child.weight > best.weight):
                best = child
        return best


@dataclass
class DecisionTree:
    """Weighted information-gain tree bound to a schema."""

    schema_hash: str
    classes: tuple[str, ...]
    attribute_names: tuple[str, ...]
    root: TreeNode
    model_id: str = "gain-tree"

    @property
    def attribute_count(self) -> int:
        return len(self.attribute_names)

    def _route(self, node: TreeNode, sym_cols: dict[int, np.ndarray],
               cont_cols: dict[int, np.ndarray], attr_index: dict[str, int], i: int) -> TreeNode:
        while not node.is_leaf:
            j = attr_index[node.attribute]
            if node.threshold is not None:
                node = node.left if cont_cols[j][i] <= node.threshold else node.right
            else:
                child = node.children.get(sym_cols[j][i])
                if child is None:
                    child = node.heaviest_child()   # unseen branch value
                node = child
        return node

    def predict_dataset(self, dataset: WeightedDataset) -> np.ndarray:
        if dataset.schema.structural_hash() != self.schema_hash:
            raise SchemaError("dataset schema does not match the tree schema")
        attr_index = {n: i for i, n in enumerate(dataset.schema.attribute_names)}
        sym_cols: dict[int, np.ndarray] = {}
        cont_cols: dict[int, np.ndarray] = {}
        for j, spec in enumerate(dataset.schema.attributes):
            if spec.is_discrete:
                sym_cols[j] = np.asarray(spec.domain, dtype=object)[dataset.columns[j]]
            else:
                cont_cols[j] = dataset.columns[j]
        class_index = {c: i for i, c in enumerate(self.classes)}
        out = np.empty(dataset.n, dtype=np.int64)
        for i in range(dataset.n):
            leaf = self._route(self.root, sym_cols, cont_cols, attr_index, i)
            out[i] = class_index[leaf.label]
        return out

    def node_count(self) -> int:
        count = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            count += 1
            stack.extend(_child_nodes(node))
        return count

    def max_depth(self) -> int:
        deepest = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            deepest = max(deepest, node.depth)
            stack.extend(_child_nodes(node))
        return deepest

    def dump(self) -> str:
        """Indented audit text, one node per line."""
        lines: list[str] = []

        def walk(node: TreeNode, branch: str) -> None:
            pad = "  " * (node.depth - 1)
            if node.is_leaf:
                lines.append(f"{pad}{node.depth} {branch}leaf {node.label} (n={node.n}, w={node.weight:.6g})")
                return
            if node.threshold is not None:
                lines.append(f"{pad}{node.depth} {branch}split {node.attribute} @ {node.threshold!r}")
                walk(node.left, f"<= {node.threshold!r} -> ")
                walk(node.right, f"> {node.threshold!r} -> ")
            else:
                lines.append(f"{pad}{node.depth} {branch}split {node.attribute}")
                for sym, child in node.children.items():
                    if child is not None:
                        walk(child, f"= {sym} -> ")

        walk(self.root, "")
        return "\n".join(lines) + "\n"

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": TREE_FORMAT,
            "model_id": self.model_id,
            "schema_hash": self.schema_hash,
            "classes": list(self.classes),
            "attributes": list(self.attribute_names),
            "root": _node_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        if doc.get("format") != TREE_FORMAT:
            raise DataFormatError(f"not a {TREE_FORMAT} document")
        return cls(
            doc["schema_hash"], tuple(doc["classes"]), tuple(doc["attributes"]),
            _node_from_dict(doc["root"]), doc.get("model_id", "gain-tree"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DecisionTree":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DecisionTree":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _child_nodes(node: TreeNode) -> list[TreeNode]:
    if node.is_leaf:
        return []
    if node.threshold is not None:
        return [node.left, node.right]
    return [c for c in node.children.values() if c is not None]


def _node_to_dict(node: TreeNode) -> dict:
    doc: dict = {"depth": node.depth, "weight": node.weight, "n": node.n}
    if node.is_leaf:
        doc["label"] = node.label
        return doc
    doc["attribute"] = node.attribute
    if node.threshold is not None:
        doc["threshold"] = node.threshold
        doc["left"] = _node_to_dict(node.left)
        doc["right"] = _node_to_dict(node.right)
    else:
        doc["children"] = {
            sym: _node_to_dict(c) for sym, c in node.children.items() if c is not None
        }
    return doc


def _node_from_dict(doc: dict) -> TreeNode:
    node = TreeNode(depth=doc["depth"], weight=doc["weight"], n=doc["n"])
    if "attribute" not in doc:
        node.label = doc["label"]
        return node
    node.attribute = doc["attribute"]
    if "threshold" in doc:
        node.threshold = doc["threshold"]
        node.left = _node_from_dict(doc["left"])
        node.right = _node_from_dict(doc["right"])
    else:
        node.children = {sym: _node_from_dict(c) for sym, c in doc["children"].items()}
    return node


def build_weighted_tree(
    dataset: WeightedDataset,
    max_depth: int | None = None,
    min_weight_leaf: float | None = None,
) -> DecisionTree:
    """Grow the weighted information-gain tree.

    Greedy recursion on the max-gain attribute (ties break by schema
    order). A node becomes a leaf when it is pure, when no attribute gives
    positive gain, at ``max_depth``, or when its weight mass drops below
    ``min_weight_leaf`` (default: the mass of two average examples).
    Discrete attributes are tested at most once per path; continuous
    attributes may recur with different thresholds.
    """
    if dataset.n == 0:
        raise TrainingError("cannot build a tree from an empty dataset")
    schema = dataset.schema
    C = schema.n_classes
    if min_weight_leaf is None:
        min_weight_leaf = 2.0 * dataset.total_weight / dataset.n
    labels = dataset.labels
    weights = dataset.weights
    columns = dataset.columns
    specs = schema.attributes

    def leaf(rows: np.ndarray, depth: int, cw: np.ndarray) -> TreeNode:
        label = schema.class_names[int(np.argmax(cw))]
        return TreeNode(depth=depth, weight=float(cw.sum()), n=len(rows), label=label)

    root_holder: dict[str, TreeNode] = {}

    def assign(container, key, node):
        if isinstance(container, dict):
            container[key] = node
        else:
            setattr(container, key, node)

    stack = [(np.arange(dataset.n), 1, frozenset(), root_holder, "root")]
    while stack:
        rows, depth, consumed, container, key = stack.pop()
        lab = labels[rows]
        w = weights[rows]
        cw = np.bincount(lab, weights=w, minlength=C)
        node_weight = float(cw.sum())
        pure = np.count_nonzero(cw > 0) <= 1
        depth_stop = max_depth is not None and depth >= max_depth
        if pure or depth_stop or node_weight < min_weight_leaf:
            assign(container, key, leaf(rows, depth, cw))
            continue
        best_gain = 0.0
        best_j = -1
        best_thr: float | None = None
        for j, spec in enumerate(specs):
            if spec.is_discrete:
                if j in consumed:
                    continue
                gain = _gain_discrete(columns[j][rows], lab, w, len(spec.domain), C)
                thr = None
            else:
                gain, thr = _gain_continuous(columns[j][rows], lab, w, C)
            if gain > best_gain + _GAIN_TOL:
                best_gain, best_j, best_thr = gain, j, thr
        if best_j < 0:
            assign(container, key, leaf(rows, depth, cw))
            continue
        node = TreeNode(
            depth=depth, weight=node_weight, n=len(rows),
            attribute=specs[best_j].name, threshold=best_thr,
        )
        assign(container, key, node)
        if best_thr is not None:
            mask = columns[best_j][rows] <= best_thr
            stack.append((rows[~mask], depth + 1, consumed, node, "right"))
            stack.append((rows[mask], depth + 1, consumed, node, "left"))
        else:
            codes = columns[best_j][rows]
            domain = specs[best_j].domain
            node.children = {}
            branches = []
            for code in np.unique(codes):
                node.children[domain[code]] = None   # fix branch order now
                branches.append((domain[code], rows[codes == code]))
            consumed_next = consumed | {best_j}
            for sym, child_rows in reversed(branches):
                stack.append((child_rows, depth + 1, consumed_next, node.children, sym))
    return DecisionTree(
        schema.structural_hash(), schema.class_names, schema.attribute_names,
        root_holder["root"],
    )


# -- attribute weights --------------------------------------------------------


@dataclass(frozen=True)
class AttributeWeights:
    """Per-attribute weights: 1/sqrt(min test depth), 0 when untested."""

    names: tuple[str, ...]
    weights: tuple[float, ...]
    min_depths: tuple[int | None, ...]

    def __getitem__(self, name: str) -> float:
        return self.weights[self.names.index(name)]

    def as_mapping(self) -> dict[str, float]:
        return dict(zip(self.names, self.weights))

    def as_array(self, names) -> np.ndarray:
        mapping = self.as_mapping()
        try:
            return np.array([mapping[n] for n in names], dtype=np.float64)
        except KeyError as exc:
            raise SchemaError(f"no weight for attribute {exc.args[0]!r}") from None

    def kept_names(self) -> tuple[str, ...]:
        return tuple(n for n, w in zip(self.names, self.weights) if w > 0)

    def rows(self) -> list[dict]:
        return [
            {"name": n, "min_depth": d, "weight": w, "kept": w > 0}
            for n, w, d in zip(self.names, self.weights, self.min_depths)
        ]


def compute_attribute_weights(tree: DecisionTree, schema: Schema) -> AttributeWeights:
    """Derive 1/sqrt(d) weights from the minimum depth at which the tree
    tests each attribute; attributes absent from the tree weigh 0."""
    min_depth: dict[str, int] = {}
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if not node.is_leaf:
            d = min_depth.get(node.attribute)
            if d is None or node.depth < d:
                min_depth[node.attribute] = node.depth
            stack.extend(_child_nodes(node))
    names = schema.attribute_names
    depths = tuple(min_depth.get(n) for n in names)
    weights = tuple(0.0 if d is None else 1.0 / math.sqrt(d) for d in depths)
    return AttributeWeights(names, weights, depths)


# -- the full weighting procedure ---------------------------------------------


def update_example_weights(
    dataset: WeightedDataset,
    model: NaiveBayesModel,
    relabel: bool = True,
) -> WeightedDataset:
    """Set each example's weight to its highest normalised posterior.

    With ``relabel`` on (the default) the example's working label also
    becomes the argmax class; the labels assigned at load time stay
    available as ``dataset.true_labels`` so evaluation is never polluted.
    """
    post = model.posteriors_dataset(dataset)
    new_weights = post.max(axis=1)
    out = dataset.with_weights(new_weights)
    if relabel:
        out = out.with_labels(np.argmax(post, axis=1))
    return out


@dataclass
class SelectionParams:
    """Knobs for the attribute-weighting pass.

    ``min_weight_leaf`` is an absolute weight mass; ``min_leaf_examples``
    expresses the same floor in average-example units and is converted at
    tree-build time (the absolute value wins when both are set).
    """

    smoothing_k: float = 1.0
    bins: int = 10
    relabel: bool = True
    iterations: int = 1
    max_depth: int | None = None
    min_weight_leaf: float | None = None
    min_leaf_examples: float | None = None


@dataclass
class SelectionReport:
    """Audit record of one attribute-weighting run."""

    n_examples: int
    iterations: int
    relabel: bool
    relabeled_count: int
    attributes: list[dict]
    kept: list[str]
    tree_dump: str = ""

    def to_dict(self) -> dict:
        return {
            "format": "attribute-weights/1",
            "n_examples": self.n_examples,
            "iterations": self.iterations,
            "relabel": self.relabel,
            "relabeled_count": self.relabeled_count,
            "attributes": self.attributes,
            "kept": self.kept,
        }

    def to_text(self) -> str:
        width = max(len(r["name"]) for r in self.attributes)
        lines = [f"{'attribute':<{width}}  min_depth  weight      kept"]
        for r in self.attributes:
            d = "-" if r["min_depth"] is None else str(r["min_depth"])
            lines.append(
                f"{r['name']:<{width}}  {d:>9}  {r['weight']:<10.6f}  {'yes' if r['kept'] else 'no'}"
            )
        lines.append(f"kept {len(self.kept)} of {len(self.attributes)} attributes")
        return "\n".join(lines) + "\n"


@dataclass
class SelectionResult:
    weights: AttributeWeights
    reduced: WeightedDataset
    tree: DecisionTree
    report: SelectionReport


def select_attributes(
    dataset: WeightedDataset,
    params: SelectionParams | None = None,
) -> SelectionResult:
    """Run the whole weighting procedure and drop zero-weight attributes.

    The returned reduced dataset carries the posterior-updated weights and
    (when relabeling is on) the relabeled working labels; callers that
    need the load-time labels take ``reduced.with_true_labels()``.
    """
    params = params or SelectionParams()
    if dataset.n == 0:
        raise TrainingError("cannot select attributes on an empty dataset")
    work = dataset.with_uniform_weights()
    for _ in range(max(1, params.iterations)):
        model = fit_naive_bayes(work, k=params.smoothing_k, bins=params.bins)
        work = update_example_weights(work, model, relabel=params.relabel)
    min_weight_leaf = params.min_weight_leaf
    if min_weight_leaf is None and params.min_leaf_examples is not None:
        min_weight_leaf = params.min_leaf_examples * work.total_weight / work.n
    tree = build_weighted_tree(
        work, max_depth=params.max_depth, min_weight_leaf=min_weight_leaf
    )
    weights = compute_attribute_weights(tree, dataset.schema)
    kept = weights.kept_names()
    if not kept:
        raise DegenerateTreeError(
            "the weighting tree is a single leaf, so every attribute would be "
            "dropped; lower min_weight_leaf, raise max_depth, or check that "
            "the data is not single-class"
        )
    reduced = project_attributes(work, kept)
    relabeled = int(np.count_nonzero(work.labels != work.true_labels))
    report = SelectionReport(
        n_examples=dataset.n,
        iterations=params.iterations,
        relabel=params.relabel,
        relabeled_count=relabeled,
        attributes=weights.rows(),
        kept=list(kept),
        tree_dump=tree.dump(),
    )
    return SelectionResult(weights, reduced, tree, report)
