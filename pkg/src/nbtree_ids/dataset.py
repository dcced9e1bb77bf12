"""KDD99-format record handling.

Connection records are comma-separated lines with one value per schema
attribute plus a trailing attack-name label (optionally period-terminated,
as in the published KDD99 files). Raw attack names are mapped to the five
traffic classes through an :class:`AttackTaxonomy`. Loading assigns every
example the uniform weight 1/n; everything downstream treats a loaded
dataset as immutable and derives new datasets instead of mutating.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import (
    DataFormatError,
    EmptyDatasetError,
    SchemaError,
    TaxonomyError,
)

DISCRETE = "discrete"
CONTINUOUS = "continuous"

_CHUNK_LINES = 65536


@dataclass(frozen=True)
class AttributeSpec:
    """One attribute: a name, a kind, and (for discrete kinds) its domain.

    A discrete attribute read from a schema file starts with an empty
    domain; the domain is then frozen from the data on first load.
    """

    name: str
    kind: str
    domain: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CONTINUOUS and self.domain:
            raise SchemaError(f"attribute {self.name!r}: continuous attributes take no domain")

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE


@dataclass(frozen=True)
class Schema:
    """Ordered attribute list plus the fixed class order.

    The attribute order is the record-field order; the class order is used
    for every argmax tie-break in the toolkit.
    """

    attributes: tuple[AttributeSpec, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names in schema")
        if len(set(self.class_names)) != len(self.class_names) or not self.class_names:
            raise SchemaError("class names must be non-empty and unique")
        object.__setattr__(self, "_attr_index", {n: i for i, n in enumerate(names)})
        object.__setattr__(self, "_class_index", {c: i for i, c in enumerate(self.class_names)})

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def attribute_index(self, name: str) -> int:
        try:
            return self._attr_index[name]
        except KeyError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def class_index(self, name: str) -> int:
        try:
            return self._class_index[name]
        except KeyError:
            raise SchemaError(f"unknown class {name!r}") from None

    def structural_hash(self) -> str:
        """Hash over names, kinds and class order (domains excluded, so a
        permissively extended domain still pairs with the same models)."""
        doc = {
            "attributes": [[a.name, a.kind] for a in self.attributes],
            "classes": list(self.class_names),
        }
        raw = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(raw).hexdigest()[:16]

    def with_domains(self, domains: dict[str, tuple[str, ...]]) -> "Schema":
        attrs = tuple(
            AttributeSpec(a.name, a.kind, domains.get(a.name, a.domain))
            for a in self.attributes
        )
        return Schema(attrs, self.class_names)


class AttackTaxonomy:
    """Total mapping from raw attack name to class label.

    ``normal`` is conventionally reserved for the Normal class. Lookups of
    unmapped names raise :class:`TaxonomyError` naming the unknown symbol.
    """

    def __init__(self, mapping: dict[str, str]):
        if not mapping:
            raise TaxonomyError("empty attack taxonomy")
        self.mapping = dict(mapping)

    def class_of(self, raw_name: str) -> str:
        try:
            return self.mapping[raw_name]
        except KeyError:
            raise TaxonomyError(f"unknown attack name {raw_name!r}") from None

    def __contains__(self, raw_name: str) -> bool:
        return raw_name in self.mapping

    def __len__(self) -> int:
        return len(self.mapping)


@dataclass
class Example:
    """A single record: one value per schema attribute, a class label, the
    raw attack name it came from, and a non-negative weight.

    ``parse_record`` leaves the weight at 0; ``load_dataset`` assigns 1/n.
    """

    values: tuple
    label: str
    raw_label: str
    weight: float = 0.0


@dataclass
class LoadReport:
    """What happened while ingesting a record stream."""

    n_loaded: int = 0
    skipped: int = 0
    skipped_lines: list[int] = field(default_factory=list)
    reasons: dict[str, int] = field(default_factory=dict)
    extended_domains: dict[str, list[str]] = field(default_factory=dict)

    def note_skip(self, line_number: int, reason: str) -> None:
        self.skipped += 1
        if len(self.skipped_lines) < 100:
            self.skipped_lines.append(line_number)
        self.reasons[reason] = self.reasons.get(reason, 0) + 1


class WeightedDataset:
    """Columnar store of weighted examples sharing one schema.

    Discrete columns hold int32 codes into the attribute domain, continuous
    columns hold float64 values. ``labels`` are class indices in schema
    order; ``true_labels`` preserve the labels assigned at load time even
    when a downstream step relabels the working copy.
    """

    def __init__(
        self,
        schema: Schema,
        columns: list[np.ndarray],
        labels: np.ndarray,
        weights: np.ndarray,
        raw_labels: list[str] | None = None,
        true_labels: np.ndarray | None = None,
        source: str | None = None,
        load_report: LoadReport | None = None,
    ):
        n = len(labels)
        if len(columns) != schema.n_attributes:
            raise SchemaError("column count does not match schema")
        for col in columns:
            if len(col) != n:
                raise SchemaError("ragged columns")
        if len(weights) != n:
            raise SchemaError("weight count does not match example count")
        if n and np.any(weights < 0):
            raise SchemaError("negative example weight")
        if n and float(weights.sum()) <= 0:
            raise SchemaError("non-empty dataset must carry positive total weight")
        self.schema = schema
        self.columns = columns
        self.labels = labels.astype(np.int64)
        self.weights = weights.astype(np.float64)
        self.raw_labels = raw_labels
        self.true_labels = (true_labels if true_labels is not None else labels).astype(np.int64)
        self.source = source
        self.load_report = load_report

    # -- construction -----------------------------------------------------

    @classmethod
    def from_rows(
        cls,
        schema: Schema,
        rows: Sequence[Sequence],
        labels: Sequence[str],
        weights: Sequence[float] | None = None,
        source: str | None = None,
    ) -> "WeightedDataset":
        """Build a dataset from in-memory value rows (mainly for tests and
        synthetic data). Discrete values must already be in the domain."""
        if len(rows) != len(labels):
            raise SchemaError("rows and labels differ in length")
        n = len(rows)
        if n == 0:
            raise EmptyDatasetError("no rows given")
        cols: list[np.ndarray] = []
        for j, spec in enumerate(schema.attributes):
            raw = [r[j] for r in rows]
            if spec.is_discrete:
                index = {s: i for i, s in enumerate(spec.domain)}
                try:
                    cols.append(np.array([index[str(v)] for v in raw], dtype=np.int32))
                except KeyError as exc:
                    raise SchemaError(
                        f"value {exc.args[0]!r} outside domain of {spec.name!r}"
                    ) from None
            else:
                cols.append(np.asarray(raw, dtype=np.float64))
        lab = np.array([schema.class_index(c) for c in labels], dtype=np.int64)
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(weights, dtype=np.float64)
        return cls(schema, cols, lab, w, raw_labels=list(labels), source=source)

    # -- basic views -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return self.n

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def example(self, i: int) -> Example:
        values = []
        for spec, col in zip(self.schema.attributes, self.columns):
            values.append(spec.domain[col[i]] if spec.is_discrete else float(col[i]))
        raw = self.raw_labels[i] if self.raw_labels is not None else self.schema.class_names[self.labels[i]]
        return Example(tuple(values), self.schema.class_names[self.labels[i]], raw, float(self.weights[i]))

    @property
    def examples(self) -> "_ExampleView":
        return _ExampleView(self)

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.schema.attribute_index(name)]

    @property
    def dataset_id(self) -> str:
        return self.source or f"<memory:{self.n} examples>"

    # -- derivations -------------------------------------------------------

    def take(self, rows: np.ndarray) -> "WeightedDataset":
        rows = np.asarray(rows)
        raw = [self.raw_labels[i] for i in rows] if self.raw_labels is not None else None
        return WeightedDataset(
            self.schema,
            [col[rows] for col in self.columns],
            self.labels[rows],
            self.weights[rows],
            raw_labels=raw,
            true_labels=self.true_labels[rows],
            source=self.source,
        )

    def with_weights(self, weights: np.ndarray) -> "WeightedDataset":
        return WeightedDataset(
            self.schema, self.columns, self.labels, np.asarray(weights, dtype=np.float64),
            raw_labels=self.raw_labels, true_labels=self.true_labels, source=self.source,
        )

    def with_labels(self, labels: np.ndarray) -> "WeightedDataset":
        return WeightedDataset(
            self.schema, self.columns, np.asarray(labels, dtype=np.int64), self.weights,
            raw_labels=self.raw_labels, true_labels=self.true_labels, source=self.source,
        )

    def with_uniform_weights(self) -> "WeightedDataset":
        return self.with_weights(np.full(self.n, 1.0 / self.n))

    def with_true_labels(self) -> "WeightedDataset":
        return self.with_labels(self.true_labels)


class _ExampleView(Sequence):
    """Lazy, ordered sequence of :class:`Example` objects."""

    def __init__(self, dataset: WeightedDataset):
        self._ds = dataset

    def __len__(self) -> int:
        return self._ds.n

    def __getitem__(self, i: int) -> Example:
        if isinstance(i, slice):
            return [self._ds.example(j) for j in range(*i.indices(self._ds.n))]
        return self._ds.example(int(i))

    def __iter__(self) -> Iterator[Example]:
        for i in range(self._ds.n):
            yield self._ds.example(i)


# -- record parsing ---------------------------------------------------------


def parse_record(
    line: str,
    schema: Schema,
    taxonomy: AttackTaxonomy,
    *,
    permissive: bool = False,
    line_number: int | None = None,
) -> Example:
    """Parse one comma-separated record into an :class:`Example`.

    The line must carry exactly one field per attribute plus the label; the
    label may end with a period. In permissive mode discrete values outside
    a non-empty domain are accepted rather than rejected (the load loop
    extends the domain); numbers and arity are never forgiven.
    """
    where = f" at line {line_number}" if line_number is not None else ""
    fields = line.rstrip("\r\n").split(",")
    expected = schema.n_attributes + 1
    if len(fields) != expected:
        raise DataFormatError(
            f"expected {expected} fields, got {len(fields)}{where}"
        )
    values: list = []
    for spec, raw in zip(schema.attributes, fields):
        if spec.is_discrete:
            if spec.domain and raw not in spec.domain and not permissive:
                raise DataFormatError(
                    f"value {raw!r} outside domain of attribute {spec.name!r}{where}"
                )
            values.append(raw)
        else:
            try:
                values.append(float(raw))
            except ValueError:
                raise DataFormatError(
                    f"unparseable number {raw!r} for attribute {spec.name!r}{where}"
                ) from None
    raw_label = fields[-1].rstrip(".")
    try:
        label = taxonomy.class_of(raw_label)
    except TaxonomyError as exc:
        raise TaxonomyError(f"{exc}{where}") from None
    if label not in schema.class_names:
        raise TaxonomyError(f"taxonomy maps {raw_label!r} to unknown class {label!r}{where}")
    return Example(tuple(values), label, raw_label, 0.0)


def serialize_record(example: Example, schema: Schema) -> str:
    """Render an example back to the comma-separated wire form (period-
    terminated label, integers written without a decimal point)."""
    parts = []
    for spec, v in zip(schema.attributes, example.values):
        if spec.is_discrete:
            parts.append(str(v))
        else:
            f = float(v)
            parts.append(str(int(f)) if f.is_integer() and abs(f) < 1e15 else repr(f))
    parts.append(example.raw_label + ".")
    return ",".join(parts)


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def load_dataset(
    source,
    schema: Schema,
    taxonomy: AttackTaxonomy,
    *,
    permissive: bool = False,
) -> WeightedDataset:
    """Ingest a record stream and return a uniformly weighted dataset.

    ``source`` may be a path or any iterable of lines. Every example gets
    weight 1/n and file order is preserved. In strict mode (default) any
    bad record aborts the load; in permissive mode bad records are skipped
    and counted in ``dataset.load_report``, and unseen discrete values
    extend the attribute domain. Attributes whose schema domain is empty
    have their domain defined by this load in either mode.
    """
    attrs = schema.attributes
    n_attrs = len(attrs)
    expected = n_attrs + 1
    cont_idx = [j for j, a in enumerate(attrs) if not a.is_discrete]
    disc_idx = [j for j, a in enumerate(attrs) if a.is_discrete]

    report = LoadReport()
    cont_parts: dict[int, list[np.ndarray]] = {j: [] for j in cont_idx}
    disc_parts: dict[int, list[list[str]]] = {j: [] for j in disc_idx}
    label_parts: list[np.ndarray] = []
    raw_labels: list[str] = []
    # per discrete attribute: symbol -> code, insertion-ordered
    sym_index: dict[int, dict[str, int]] = {
        j: {s: i for i, s in enumerate(attrs[j].domain)} for j in disc_idx
    }
    frozen = {j: bool(attrs[j].domain) for j in disc_idx}

    def fail_or_skip(line_number: int, exc: Exception, reason: str) -> None:
        if permissive:
            report.note_skip(line_number, reason)
        else:
            raise exc

    chunk: list[tuple[int, str]] = []
    line_number = 0

    def flush() -> None:
        if not chunk:
            return
        rows: list[list[str]] = []
        numbers: list[int] = []
        for ln, text in chunk:
            f = text.rstrip("\r\n").split(",")
            if len(f) != expected:
                fail_or_skip(
                    ln,
                    DataFormatError(f"expected {expected} fields, got {len(f)} at line {ln}"),
                    "field-count",
                )
                continue
            rows.append(f)
            numbers.append(ln)
        if not rows:
            chunk.clear()
            return
        cols = list(zip(*rows))
        keep = np.ones(len(rows), dtype=bool)
        converted: dict[int, np.ndarray] = {}
        for j in cont_idx:
            try:
                converted[j] = np.asarray(cols[j], dtype=np.float64)
            except ValueError:
                # locate offending rows one by one; keep the rest in permissive mode
                vals = np.empty(len(rows), dtype=np.float64)
                for i, raw in enumerate(cols[j]):
                    try:
                        vals[i] = float(raw)
                    except ValueError:
                        fail_or_skip(
                            numbers[i],
                            DataFormatError(
                                f"unparseable number {raw!r} for attribute "
                                f"{attrs[j].name!r} at line {numbers[i]}"
                            ),
                            "bad-number",
                        )
                        keep[i] = False
                        vals[i] = np.nan
                converted[j] = vals
        labels_chunk = np.empty(len(rows), dtype=np.int64)
        class_index = {c: i for i, c in enumerate(schema.class_names)}
        rl_chunk: list[str] = []
        for i, f in enumerate(rows):
            if not keep[i]:
                rl_chunk.append("")
                continue
            raw = f[-1].rstrip(".")
            cls = taxonomy.mapping.get(raw)
            if cls is None:
                fail_or_skip(
                    numbers[i],
                    TaxonomyError(f"unknown attack name {raw!r} at line {numbers[i]}"),
                    "unknown-attack",
                )
                keep[i] = False
                rl_chunk.append("")
                continue
            ci = class_index.get(cls)
            if ci is None:
                fail_or_skip(
                    numbers[i],
                    TaxonomyError(
                        f"taxonomy maps {raw!r} to unknown class {cls!r} at line {numbers[i]}"
                    ),
                    "unknown-class",
                )
                keep[i] = False
                rl_chunk.append("")
                continue
            labels_chunk[i] = ci
            rl_chunk.append(raw)
        for j in disc_idx:
            col = cols[j]
            index = sym_index[j]
            unseen = sorted(set(col) - index.keys())
            if unseen:
                if frozen[j] and not permissive:
                    # error on the first offending row for a precise report
                    for i, raw in enumerate(col):
                        if raw not in index and keep[i]:
                            raise DataFormatError(
                                f"value {raw!r} outside domain of attribute "
                                f"{attrs[j].name!r} at line {numbers[i]}"
                            )
                else:
                    added = []
                    for i, raw in enumerate(col):  # appearance order
                        if raw not in index:
                            index[raw] = len(index)
                            added.append(raw)
                    if frozen[j] and added:
                        report.extended_domains.setdefault(attrs[j].name, []).extend(added)
        kept = np.flatnonzero(keep)
        for j in cont_idx:
            cont_parts[j].append(converted[j][kept])
        for j in disc_idx:
            index = sym_index[j]
            disc_parts[j].append([cols[j][i] for i in kept])
        label_parts.append(labels_chunk[kept])
        raw_labels.extend(rl_chunk[i] for i in kept)
        chunk.clear()

    for text in _iter_lines(source):
        line_number += 1
        if not text.strip():
            continue
        chunk.append((line_number, text))
        if len(chunk) >= _CHUNK_LINES:
            flush()
    flush()

    labels = np.concatenate(label_parts) if label_parts else np.empty(0, dtype=np.int64)
    n = len(labels)
    if n == 0:
        raise EmptyDatasetError("record source yielded no usable examples")
    report.n_loaded = n

    domains = {
        attrs[j].name: tuple(sym_index[j].keys()) for j in disc_idx
    }
    final_schema = schema.with_domains(domains)
    columns: list[np.ndarray] = [None] * n_attrs  # type: ignore[list-item]
    for j in cont_idx:
        columns[j] = np.concatenate(cont_parts[j]) if cont_parts[j] else np.empty(0)
    for j in disc_idx:
        index = sym_index[j]
        out = np.empty(n, dtype=np.int32)
        pos = 0
        for part in disc_parts[j]:
            for s in part:
                out[pos] = index[s]
                pos += 1
        columns[j] = out

    weights = np.full(n, 1.0 / n)
    src = str(source) if isinstance(source, (str, Path)) else None
    return WeightedDataset(
        final_schema, columns, labels, weights,
        raw_labels=raw_labels, source=src, load_report=report,
    )


# -- dataset-level operations ------------------------------------------------


@dataclass
class ClassCounts:
    """Per-class unweighted and weighted totals, in schema class order."""

    classes: tuple[str, ...]
    counts: np.ndarray
    weighted: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def total_weight(self) -> float:
        return float(self.weighted.sum())

    def by_class(self) -> dict[str, tuple[int, float]]:
        return {
            c: (int(self.counts[i]), float(self.weighted[i]))
            for i, c in enumerate(self.classes)
        }


def class_counts(dataset: WeightedDataset) -> ClassCounts:
    """Count examples and weight mass per class (uses current labels)."""
    k = dataset.schema.n_classes
    counts = np.bincount(dataset.labels, minlength=k).astype(np.int64)
    weighted = np.bincount(dataset.labels, weights=dataset.weights, minlength=k)
    return ClassCounts(dataset.schema.class_names, counts, weighted)


def project_attributes(dataset: WeightedDataset, kept: Iterable[str]) -> WeightedDataset:
    """Restrict a dataset to a subset of attributes.

    The new schema keeps the original attribute order; labels, weights and
    example count are untouched. Column arrays are shared, not copied.
    """
    kept_set = set(kept)
    if not kept_set:
        raise SchemaError("empty attribute selection")
    for name in kept_set:
        dataset.schema.attribute_index(name)  # raises on unknown names
    keep_idx = [i for i, a in enumerate(dataset.schema.attributes) if a.name in kept_set]
    new_schema = Schema(
        tuple(dataset.schema.attributes[i] for i in keep_idx),
        dataset.schema.class_names,
    )
    return WeightedDataset(
        new_schema,
        [dataset.columns[i] for i in keep_idx],
        dataset.labels,
        dataset.weights,
        raw_labels=dataset.raw_labels,
        true_labels=dataset.true_labels,
        source=dataset.source,
    )


@dataclass
class SplitReport:
    """Bookkeeping for a stratified split."""

    test_fraction: float
    seed: int
    per_class: dict[str, tuple[int, int]] = field(default_factory=dict)
    flagged: list[str] = field(default_factory=list)


class Split:
    """Train/test pair; unpacks as ``train, test`` and carries a report."""

    def __init__(self, train: WeightedDataset, test: WeightedDataset, report: SplitReport):
        self.train = train
        self.test = test
        self.report = report

    def __iter__(self):
        return iter((self.train, self.test))


def stratified_split(dataset: WeightedDataset, test_fraction: float, seed: int) -> Split:
    """Deterministic per-class split preserving class proportions within
    one example. Weights are re-initialised to 1/n inside each part; file
    order is preserved within parts. Classes with fewer than two examples
    are flagged in the report rather than rejected.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"degenerate test fraction {test_fraction!r}")
    rng = np.random.default_rng(seed)
    report = SplitReport(test_fraction=test_fraction, seed=seed)
    test_mask = np.zeros(dataset.n, dtype=bool)
    for ci, cname in enumerate(dataset.schema.class_names):
        rows = np.flatnonzero(dataset.labels == ci)
        n_c = len(rows)
        if n_c == 0:
            continue
        if n_c < 2:
            report.flagged.append(cname)
        n_test = int(round(n_c * test_fraction))
        chosen = rng.permutation(rows)[:n_test]
        test_mask[chosen] = True
        report.per_class[cname] = (n_c - n_test, n_test)
    train_rows = np.flatnonzero(~test_mask)
    test_rows = np.flatnonzero(test_mask)
    if len(train_rows) == 0 or len(test_rows) == 0:
        raise ValueError("split produced an empty part; adjust the fraction")
    train = dataset.take(train_rows).with_uniform_weights()
    test = dataset.take(test_rows).with_uniform_weights()
    return Split(train, test, report)


def stratified_sample(dataset: WeightedDataset, fraction: float, seed: int) -> WeightedDataset:
    """Seeded per-class subsample (weights re-initialised to 1/n)."""
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"degenerate sample fraction {fraction!r}")
    return stratified_split(dataset, fraction, seed).test


# -- schema / taxonomy files --------------------------------------------------


def parse_schema_text(text: str) -> Schema:
    """Parse the schema file format: a ``classes:`` header line followed by
    one ``name: kind`` line per attribute. ``#`` starts a comment."""
    classes: tuple[str, ...] | None = None
    attrs: list[AttributeSpec] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if classes is None:
            if not line.lower().startswith("classes:"):
                raise DataFormatError(
                    f"schema file must start with a 'classes:' header (line {ln})"
                )
            names = line.split(":", 1)[1].replace(",", " ").split()
            if not names:
                raise DataFormatError(f"empty class list in schema header (line {ln})")
            classes = tuple(names)
            continue
        if ":" not in line:
            raise DataFormatError(f"expected 'name: kind' at line {ln} of schema file")
        name, kind = (part.strip() for part in line.split(":", 1))
        if kind not in (DISCRETE, CONTINUOUS):
            raise DataFormatError(
                f"attribute {name!r}: kind must be 'discrete' or 'continuous' (line {ln})"
            )
        attrs.append(AttributeSpec(name, kind))
    if classes is None:
        raise DataFormatError("schema file is empty")
    if not attrs:
        raise DataFormatError("schema file declares no attributes")
    return Schema(tuple(attrs), classes)


def load_schema_file(path) -> Schema:
    return parse_schema_text(Path(path).read_text(encoding="utf-8"))


def parse_taxonomy_text(text: str) -> AttackTaxonomy:
    """Parse ``raw_name class`` pairs, whitespace-separated, ``#`` comments."""
    mapping: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(
                f"expected 'raw_name class' at line {ln} of taxonomy file"
            )
        name, cls = parts
        if name in mapping and mapping[name] != cls:
            raise DataFormatError(f"conflicting mapping for {name!r} at line {ln}")
        mapping[name] = cls
    return AttackTaxonomy(mapping)


def load_taxonomy_file(path) -> AttackTaxonomy:
    return parse_taxonomy_text(Path(path).read_text(encoding="utf-8"))
