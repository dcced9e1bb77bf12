"""Weighted naive-Bayes estimation and classification.

Class priors are weighted relative frequencies; per-attribute conditionals
are add-k smoothed weighted frequencies over the attribute's symbols (or
over equal-frequency bins for continuous attributes, fitted on the data
the model is estimated from). All scoring runs in the natural-log domain:
a class score is log P(C) plus the sum of per-attribute log conditionals,
each optionally raised to an attribute weight in [0, 1]. Probabilities
reported to callers are exponentiated after normalisation across classes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Example, Schema, WeightedDataset
from .exceptions import DataFormatError, SchemaError, TrainingError

MODEL_FORMAT = "nb-model/1"


def equal_frequency_edges(values: np.ndarray, bins: int) -> np.ndarray:
    """Interior cut points for equal-frequency binning.

    Edges are actual data values; ties collapse duplicated edges, so heavy-
    tailed columns may end up with fewer than ``bins`` bins. A constant
    column yields no edges (a single bin).
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0 or bins == 1:
        return np.empty(0)
    qs = np.quantile(values, np.arange(1, bins) / bins, method="lower")
    edges = np.unique(qs)
    return edges[edges < values.max()]


def bin_codes(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Map values to bin indices: bin i covers (edge[i-1], edge[i]]."""
    return np.searchsorted(edges, values, side="left").astype(np.int32)


@dataclass(frozen=True)
class ClassPriors:
    """Per-class prior probabilities in schema class order."""

    classes: tuple[str, ...]
    probs: np.ndarray

    def __getitem__(self, class_name: str) -> float:
        return float(self.probs[self.classes.index(class_name)])


@dataclass
class AttributeConditional:
    """Conditional table for one attribute: one row per class, one column
    per symbol/bin. Values never seen at fit time score the smoothing
    floor from :meth:`ConditionalModel.unseen_floor`."""

    name: str
    kind: str
    domain: tuple[str, ...]    # discrete only
    edges: np.ndarray          # continuous only
    cond: np.ndarray

    @property
    def n_values(self) -> int:
        return self.cond.shape[1]

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"


@dataclass
class ConditionalModel:
    """All per-(attribute, class) conditional distributions plus k.

    ``class_weights`` is the fit-time weight mass per class; it fixes the
    smoothing floor k / (class weight + k*V) used for values that never
    occurred at fit time.
    """

    attributes: list[AttributeConditional]
    smoothing_k: float
    class_weights: np.ndarray

    def by_name(self, name: str) -> AttributeConditional:
        for a in self.attributes:
            if a.name == name:
                return a
        raise SchemaError(f"no conditional table for attribute {name!r}")

    def unseen_floor(self, attr: AttributeConditional) -> np.ndarray:
        if self.smoothing_k <= 0:
            return np.zeros(len(self.class_weights))
        return self.smoothing_k / (self.class_weights + self.smoothing_k * attr.n_values)


@dataclass
class PosteriorVector:
    """Normalised per-class posterior probabilities."""

    classes: tuple[str, ...]
    probs: np.ndarray

    def best(self) -> str:
        return self.classes[int(np.argmax(self.probs))]

    def __getitem__(self, class_name: str) -> float:
        return float(self.probs[self.classes.index(class_name)])


def estimate_priors(dataset: WeightedDataset, k: float = 1.0) -> ClassPriors:
    """Weighted class priors: class weight mass over total mass.

    Plain ratios are used whenever every class carries weight; only when
    some class has zero mass does add-k smoothing over classes kick in, so
    the unsmoothed values stay exact in the common case.
    """
    total = dataset.total_weight
    if total <= 0:
        raise TrainingError("cannot estimate priors: zero total weight")
    cw = np.bincount(dataset.labels, weights=dataset.weights,
                     minlength=dataset.schema.n_classes)
    if cw.min() <= 0 and k > 0:
        probs = (cw + k) / (total + k * len(cw))
    else:
        probs = cw / total
    return ClassPriors(dataset.schema.class_names, probs)


def estimate_conditionals(
    dataset: WeightedDataset,
    k: float = 1.0,
    bins: int = 10,
    edges: dict[str, np.ndarray] | None = None,
) -> ConditionalModel:
    """Add-k weighted conditional tables for every attribute.

    P(value | class) = (weight of (value, class) + k) / (class weight + k*V)
    with V the attribute's symbol/bin count. Continuous attributes use the
    given bin edges, or fit equal-frequency edges on this dataset.
    """
    schema = dataset.schema
    C = schema.n_classes
    cw = np.bincount(dataset.labels, weights=dataset.weights, minlength=C)
    if k <= 0 and cw.min() <= 0:
        zero = schema.class_names[int(np.argmin(cw))]
        raise TrainingError(
            f"class {zero!r} has zero weight and smoothing is off (k=0)"
        )
    out: list[AttributeConditional] = []
    for spec, col in zip(schema.attributes, dataset.columns):
        if spec.is_discrete:
            codes = col.astype(np.int64)
            V = len(spec.domain)
            attr_edges = np.empty(0)
            domain = spec.domain
        else:
            if edges is not None and spec.name in edges:
                attr_edges = np.asarray(edges[spec.name], dtype=np.float64)
            else:
                attr_edges = equal_frequency_edges(col, bins)
            codes = bin_codes(col, attr_edges).astype(np.int64)
            V = len(attr_edges) + 1
            domain = ()
        counts = np.bincount(
            dataset.labels * V + codes, weights=dataset.weights, minlength=C * V
        ).reshape(C, V)
        denom = cw[:, None] + k * V
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = (counts + k) / denom
        cond = np.nan_to_num(cond, nan=0.0)
        out.append(AttributeConditional(spec.name, spec.kind, domain, attr_edges, cond))
    return ConditionalModel(out, k, cw)


class NaiveBayesModel:
    """A fitted naive-Bayes classifier bound to a schema.

    Immutable once fitted; safe to share across threads. ``predict_dataset``
    and friends align any dataset with a structurally identical schema to
    this model's symbol coding, so permissively extended domains still
    classify (unknown symbols fall back to the smoothing floor).
    """

    model_id = "nb"

    def __init__(self, schema: Schema, priors: ClassPriors, conditionals: ConditionalModel):
        if len(conditionals.attributes) != schema.n_attributes:
            raise SchemaError("conditional tables do not cover the schema")
        self.schema = schema
        self.priors = priors
        self.conditionals = conditionals
        self.classes = schema.class_names
        self.schema_hash = schema.structural_hash()
        with np.errstate(divide="ignore"):
            self._log_priors = np.log(priors.probs)
            self._log_cond = [np.log(a.cond) for a in conditionals.attributes]
            self._log_unseen = [
                np.log(conditionals.unseen_floor(a)) for a in conditionals.attributes
            ]

    # -- encoding ----------------------------------------------------------

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.conditionals.attributes)

    @property
    def attribute_count(self) -> int:
        return len(self.conditionals.attributes)

    def encode_example(self, example: Example) -> np.ndarray:
        """Codes per model attribute; -1 marks an unseen discrete symbol."""
        if len(example.values) != self.schema.n_attributes:
            raise SchemaError("example does not conform to the model schema")
        codes = np.empty(self.attribute_count, dtype=np.int64)
        for i, (a, v) in enumerate(zip(self.conditionals.attributes, example.values)):
            if a.is_discrete:
                try:
                    codes[i] = a.domain.index(str(v))
                except ValueError:
                    codes[i] = -1
            else:
                codes[i] = int(np.searchsorted(a.edges, float(v), side="left"))
        return codes

    def encode_dataset(self, dataset: WeightedDataset) -> np.ndarray:
        """(n, A) code matrix aligned to this model's coding."""
        if dataset.schema.structural_hash() != self.schema_hash:
            raise SchemaError("dataset schema does not match the model schema")
        n = dataset.n
        codes = np.empty((n, self.attribute_count), dtype=np.int64)
        for i, (a, spec, col) in enumerate(
            zip(self.conditionals.attributes, dataset.schema.attributes, dataset.columns)
        ):
            if a.is_discrete:
                model_index = {s: j for j, s in enumerate(a.domain)}
                trans = np.array(
                    [model_index.get(s, -1) for s in spec.domain], dtype=np.int64
                )
                codes[:, i] = trans[col]
            else:
                codes[:, i] = np.searchsorted(a.edges, col, side="left")
        return codes

    # -- scoring -----------------------------------------------------------

    def _attr_log_probs(self, i: int, codes_i: np.ndarray) -> np.ndarray:
        """(n, C) log conditionals for attribute i at the given codes."""
        lc = self._log_cond[i]
        V = lc.shape[1]
        ext = np.concatenate([lc, self._log_unseen[i][:, None]], axis=1)
        safe = np.where((codes_i < 0) | (codes_i >= V), V, codes_i)
        return ext[:, safe].T

    def log_scores(self, codes: np.ndarray, attr_weights: np.ndarray | None = None) -> np.ndarray:
        """(n, C) unnormalised log scores; ``attr_weights`` exponentiates
        each attribute's conditional (weight 0 skips the attribute)."""
        n = codes.shape[0]
        scores = np.tile(self._log_priors, (n, 1))
        for i in range(self.attribute_count):
            if attr_weights is not None:
                w = float(attr_weights[i])
                if w == 0.0:
                    continue
                scores += w * self._attr_log_probs(i, codes[:, i])
            else:
                scores += self._attr_log_probs(i, codes[:, i])
        return scores

    def predict_dataset(self, dataset: WeightedDataset,
                        attr_weights: np.ndarray | None = None) -> np.ndarray:
        """Argmax class index per example (ties: first class in order)."""
        scores = self.log_scores(self.encode_dataset(dataset), attr_weights)
        return np.argmax(scores, axis=1)

    def posteriors_dataset(self, dataset: WeightedDataset) -> np.ndarray:
        """(n, C) normalised posteriors."""
        scores = self.log_scores(self.encode_dataset(dataset))
        return _normalise_rows(scores)

    # -- serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "model_id": self.model_id,
            "schema_hash": self.schema_hash,
            "classes": list(self.classes),
            "smoothing_k": self.conditionals.smoothing_k,
            "class_weights": [float(w) for w in self.conditionals.class_weights],
            "priors": [float(p) for p in self.priors.probs],
            "attributes": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "domain": list(a.domain),
                    "edges": [float(e) for e in a.edges],
                    "cond": [[float(p) for p in row] for row in a.cond],
                }
                for a in self.conditionals.attributes
            ],
            "schema": _schema_to_dict(self.schema),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NaiveBayesModel":
        if doc.get("format") != MODEL_FORMAT:
            raise DataFormatError(f"not a {MODEL_FORMAT} document")
        schema = _schema_from_dict(doc["schema"])
        priors = ClassPriors(tuple(doc["classes"]), np.asarray(doc["priors"]))
        attrs = [
            AttributeConditional(
                a["name"], a["kind"], tuple(a["domain"]),
                np.asarray(a["edges"], dtype=np.float64),
                np.asarray(a["cond"], dtype=np.float64),
            )
            for a in doc["attributes"]
        ]
        conds = ConditionalModel(
            attrs, doc["smoothing_k"], np.asarray(doc["class_weights"], dtype=np.float64)
        )
        model = cls(schema, priors, conds)
        model.model_id = doc.get("model_id", "nb")
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NaiveBayesModel":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NaiveBayesModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _schema_to_dict(schema: Schema) -> dict:
    return {
        "classes": list(schema.class_names),
        "attributes": [
            {"name": a.name, "kind": a.kind, "domain": list(a.domain)}
            for a in schema.attributes
        ],
    }


def _schema_from_dict(doc: dict) -> Schema:
    from .dataset import AttributeSpec

    return Schema(
        tuple(
            AttributeSpec(a["name"], a["kind"], tuple(a["domain"]))
            for a in doc["attributes"]
        ),
        tuple(doc["classes"]),
    )


def fit_naive_bayes(dataset: WeightedDataset, k: float = 1.0, bins: int = 10) -> NaiveBayesModel:
    """Estimate priors and conditionals on one dataset.

    ``k`` is expressed in units of average example weight, so smoothing
    strength does not depend on the overall weight scale: on uniformly
    weighted data the fit is exactly the classic add-k estimate from
    counts, whether the weights are 1/n or 1.
    """
    k_eff = k * dataset.total_weight / dataset.n if dataset.n else k
    priors = estimate_priors(dataset, k_eff)
    conds = estimate_conditionals(dataset, k_eff, bins)
    return NaiveBayesModel(dataset.schema, priors, conds)


def _normalise_rows(log_scores: np.ndarray) -> np.ndarray:
    m = log_scores.max(axis=1, keepdims=True)
    bad = np.flatnonzero(~np.isfinite(m[:, 0]))
    if bad.size:
        raise TrainingError(
            f"all class scores are zero for example index {int(bad[0])} "
            "(smoothing k=0 left no mass); use k > 0"
        )
    p = np.exp(log_scores - m)
    return p / p.sum(axis=1, keepdims=True)


def posterior(example: Example, model: NaiveBayesModel) -> PosteriorVector:
    """Normalised per-class posterior for one example.

    The class-independent evidence term cancels in the normalisation, so
    this is the per-class prior-times-conditionals product rescaled to sum
    to one.
    """
    codes = model.encode_example(example)
    scores = model.log_scores(codes[None, :])
    return PosteriorVector(model.classes, _normalise_rows(scores)[0])


def classify_nb(example: Example, model: NaiveBayesModel) -> str:
    """Argmax-posterior class; ties go to the earlier class in schema order."""
    codes = model.encode_example(example)
    scores = model.log_scores(codes[None, :])[0]
    if not np.isfinite(scores.max()):
        raise TrainingError(
            "all class scores are zero for the given example (k=0); use k > 0"
        )
    return model.classes[int(np.argmax(scores))]


def weighted_class_score(
    example: Example,
    model: NaiveBayesModel,
    attr_weights,
    normalized: bool = False,
) -> np.ndarray:
    """Per-class scores with attribute-weight exponents.

    In the log domain the score is log P(C) + sum_i w_i * log P(v_i | C);
    a weight of zero removes the attribute entirely (x**0 == 1) and all
    weights equal to one reduce to the plain product rule. Returns log
    scores, or normalised probabilities when ``normalized`` is set.
    """
    w = as_weight_array(attr_weights, model.attribute_names)
    codes = model.encode_example(example)
    scores = model.log_scores(codes[None, :], w)
    if normalized:
        return _normalise_rows(scores)[0]
    return scores[0]


def as_weight_array(attr_weights, names) -> np.ndarray:
    """Coerce attribute weights (mapping, weight object, or vector) to an
    array aligned with ``names``; rejects negative weights."""
    names = tuple(names)
    if hasattr(attr_weights, "as_array"):
        w = attr_weights.as_array(names)
    elif isinstance(attr_weights, dict):
        try:
            w = np.array([attr_weights[n] for n in names], dtype=np.float64)
        except KeyError as exc:
            raise SchemaError(f"attribute weight missing for {exc.args[0]!r}") from None
    else:
        w = np.asarray(attr_weights, dtype=np.float64)
        if w.shape != (len(names),):
            raise SchemaError("attribute weight vector does not cover the schema")
    if np.any(w < 0):
        raise ValueError("attribute weights must be non-negative")
    return w
