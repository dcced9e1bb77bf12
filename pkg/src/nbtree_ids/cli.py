"""Command-line driver.

Commands: ``inspect`` (dataset composition), ``select`` (attribute
weighting), ``train`` (proposed model plus baselines), ``eval`` (score
saved models on a labeled test set), ``compare`` (select, train and eval
in one run). Every run resolves its configuration from an optional JSON
config file plus flag overrides, hashes it, and writes all artifacts under
``<out>/run-<hash>/`` with the resolved config embedded, so identical
configurations re-produce identical artifacts (timing fields aside).

Exit codes: 0 success, 1 usage or configuration, 2 data format,
3 training failure, 4 evaluation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .attribute_weighting import (
    DecisionTree,
    SelectionParams,
    TREE_FORMAT,
    select_attributes,
)
from .dataset import (
    WeightedDataset,
    class_counts,
    load_dataset,
    load_schema_file,
    load_taxonomy_file,
    project_attributes,
    stratified_sample,
    stratified_split,
)
from .evaluation import ComparisonConfig, evaluate, run_comparison, train_models
from .exceptions import (
    ConfigError,
    DataFormatError,
    EvaluationError,
    NbtreeIdsError,
    SchemaError,
    TrainingError,
)
from .kdd99 import kdd99_schema, kdd99_taxonomy
from .nbtree import NBTREE_FORMAT, NBTree, NBTreeParams
from .probability import MODEL_FORMAT, NaiveBayesModel

DATA_DIR_ENV = "NBTREE_IDS_DATA"


@dataclass
class RunConfig:
    """Resolved run configuration; field names double as config-file keys."""

    train: str | None = None
    test: str | None = None
    schema: str | None = None        # schema file; default: built-in KDD99
    taxonomy: str | None = None      # taxonomy file; default: built-in KDD99
    out: str = "runs"
    seed: int | None = None
    smoothing_k: float = 1.0
    bins: int = 10
    folds: int = 5
    significance_pct: float = 5.0
    min_split_examples: float = 30.0
    nbtree_max_depth: int = 10
    relabel: bool = True
    iterations: int = 1
    weighting_max_depth: int | None = 15
    weighting_min_leaf_examples: float | None = 30.0
    baselines: bool = True
    sample_fraction: float | None = None
    test_fraction: float | None = None
    permissive: bool = False
    workers: int = 1
    carry_weights: bool = True
    train_on_relabeled: bool = False

    def validate(self) -> None:
        checks = [
            (self.bins >= 1, "bins must be >= 1"),
            (self.folds >= 2, "folds must be >= 2"),
            (self.smoothing_k >= 0, "smoothing_k must be >= 0"),
            (0 <= self.significance_pct < 100, "significance_pct must be in [0, 100)"),
            (self.min_split_examples >= 0, "min_split_examples must be >= 0"),
            (self.nbtree_max_depth >= 1, "nbtree_max_depth must be >= 1"),
            (self.iterations >= 1, "iterations must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
        ]
        if self.sample_fraction is not None:
            checks.append((0 < self.sample_fraction < 1,
                           "sample_fraction must be in (0, 1)"))
        if self.test_fraction is not None:
            checks.append((0 < self.test_fraction < 1,
                           "test_fraction must be in (0, 1)"))
        if self.weighting_max_depth is not None:
            checks.append((self.weighting_max_depth >= 1,
                           "weighting_max_depth must be >= 1"))
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def require_seed(self, why: str) -> int:
        if self.seed is None:
            raise ConfigError(f"--seed is required when {why}")
        return self.seed

    def resolved(self) -> dict:
        """Canonical dict for hashing and embedding; the output directory is
        excluded so runs into different directories stay comparable."""
        doc = dataclasses.asdict(self)
        doc.pop("out")
        return doc

    def config_hash(self) -> str:
        raw = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(raw).hexdigest()[:12]

    def selection_params(self) -> SelectionParams:
        return SelectionParams(
            smoothing_k=self.smoothing_k,
            bins=self.bins,
            relabel=self.relabel,
            iterations=self.iterations,
            max_depth=self.weighting_max_depth,
            min_leaf_examples=self.weighting_min_leaf_examples,
        )

    def nbtree_params(self) -> NBTreeParams:
        return NBTreeParams(
            folds=self.folds,
            significance=self.significance_pct / 100.0,
            min_split_examples=self.min_split_examples,
            max_depth=self.nbtree_max_depth,
            smoothing_k=self.smoothing_k,
            bins=self.bins,
            carry_weights=self.carry_weights,
        )

    def comparison_config(self) -> ComparisonConfig:
        return ComparisonConfig(
            selection=self.selection_params(),
            nbtree=self.nbtree_params(),
            smoothing_k=self.smoothing_k,
            bins=self.bins,
            baselines=self.baselines,
            train_on_relabeled=self.train_on_relabeled,
            tree_max_depth=self.weighting_max_depth,
            tree_min_leaf_examples=self.weighting_min_leaf_examples,
            workers=self.workers,
        )


def _resolve_path(path: str | None) -> str | None:
    """Paths resolve against $NBTREE_IDS_DATA when not found as given."""
    if path is None:
        return None
    base = os.environ.get(DATA_DIR_ENV)
    if base and not os.path.isabs(path) and not os.path.exists(path):
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _load_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    for f in dataclasses.fields(RunConfig):
        flag_value = getattr(args, f.name, None)
        if flag_value is not None:
            values[f.name] = flag_value
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    config.validate()
    return config


# -- shared run machinery ------------------------------------------------------


class _Run:
    """One run directory with config-stamped JSON/text writers."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.hash = config.config_hash()
        self.dir = Path(config.out) / f"run-{self.hash}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.write_json("config.json", {"format": "run-config/1"})
        (self.dir / "run_info.json").write_text(
            json.dumps({"started": time.strftime("%Y-%m-%dT%H:%M:%S"),
                        "config_hash": self.hash}, indent=1) + "\n",
            encoding="utf-8",
        )

    def write_json(self, rel: str, doc: dict) -> Path:
        doc = dict(doc)
        doc["config_hash"] = self.hash
        doc["config"] = self.config.resolved()
        path = self.dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        return path

    def write_text(self, rel: str, text: str) -> Path:
        path = self.dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(f"# config {self.hash}\n{text}", encoding="utf-8")
        return path


def _schema_and_taxonomy(config: RunConfig):
    schema = load_schema_file(_resolve_path(config.schema)) if config.schema else kdd99_schema()
    taxonomy = (load_taxonomy_file(_resolve_path(config.taxonomy))
                if config.taxonomy else kdd99_taxonomy())
    return schema, taxonomy


def _load_train(config: RunConfig) -> WeightedDataset:
    if not config.train:
        raise ConfigError("--train is required for this command")
    schema, taxonomy = _schema_and_taxonomy(config)
    ds = load_dataset(_resolve_path(config.train), schema, taxonomy,
                      permissive=config.permissive)
    if config.sample_fraction is not None:
        seed = config.require_seed("--sample-fraction is set")
        ds = stratified_sample(ds, config.sample_fraction, seed)
    return ds


def _train_test(config: RunConfig) -> tuple[WeightedDataset, WeightedDataset]:
    train = _load_train(config)
    if config.test:
        _, taxonomy = _schema_and_taxonomy(config)
        # test shares the train schema so symbol domains stay aligned
        test = load_dataset(_resolve_path(config.test), train.schema, taxonomy,
                            permissive=config.permissive)
        return train, test
    fraction = config.test_fraction
    if fraction is None:
        raise ConfigError("provide --test or --test-fraction")
    seed = config.require_seed("splitting the training file")
    split = stratified_split(train, fraction, seed)
    return split.train, split.test


def load_model_file(path) -> NaiveBayesModel | DecisionTree | NBTree:
    """Dispatch a saved model document on its format tag."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read model file {path}: {exc}") from None
    fmt = doc.get("format")
    if fmt == MODEL_FORMAT:
        return NaiveBayesModel.from_dict(doc)
    if fmt == TREE_FORMAT:
        return DecisionTree.from_dict(doc)
    if fmt == NBTREE_FORMAT:
        return NBTree.from_dict(doc)
    raise DataFormatError(f"unrecognised model format {fmt!r} in {path}")


def _composition_doc(ds: WeightedDataset) -> dict:
    counts = class_counts(ds)
    doc = {
        "format": "composition/1",
        "dataset": ds.dataset_id,
        "total": counts.total,
        "per_class": [
            {"class": c, "count": int(counts.counts[i]), "weight": float(counts.weighted[i])}
            for i, c in enumerate(counts.classes)
        ],
    }
    if ds.load_report is not None and ds.load_report.skipped:
        doc["skipped"] = ds.load_report.skipped
        doc["skip_reasons"] = ds.load_report.reasons
    return doc


def _composition_text(doc: dict) -> str:
    lines = [f"dataset: {doc['dataset']}", f"{'class':<10} {'count':>10}"]
    for row in doc["per_class"]:
        lines.append(f"{row['class']:<10} {row['count']:>10}")
    lines.append(f"{'total':<10} {doc['total']:>10}")
    if "skipped" in doc:
        lines.append(f"skipped {doc['skipped']} bad records")
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------------


def cmd_inspect(config: RunConfig) -> int:
    ds = _load_train(config)
    run = _Run(config)
    doc = _composition_doc(ds)
    run.write_json("composition.json", doc)
    text = _composition_text(doc)
    run.write_text("composition.txt", text)
    print(text, end="")
    return 0


def cmd_select(config: RunConfig) -> int:
    ds = _load_train(config)
    run = _Run(config)
    result = select_attributes(ds, config.selection_params())
    run.write_json("selection.json", result.report.to_dict())
    run.write_text("selection.txt", result.report.to_text())
    run.write_text("trees/weighting-tree.txt", result.report.tree_dump)
    run.write_json("kept.json", {
        "format": "kept-attributes/1",
        "kept": list(result.weights.kept_names()),
    })
    print(result.report.to_text(), end="")
    return 0


def _write_models(run: _Run, models: dict) -> None:
    for mid, model in models.items():
        doc = model.to_dict()
        run.write_json(f"models/{mid}.json", doc)
        if hasattr(model, "dump"):
            run.write_text(f"trees/{mid}.txt", model.dump())


def cmd_train(config: RunConfig) -> int:
    ds = _load_train(config)
    run = _Run(config)
    try:
        selection, models = train_models(ds, config.comparison_config())
    except NbtreeIdsError:
        raise
    except Exception as exc:  # surface unexpected failures as training errors
        raise TrainingError(str(exc)) from exc
    run.write_json("selection.json", selection.report.to_dict())
    run.write_text("selection.txt", selection.report.to_text())
    run.write_text("trees/weighting-tree.txt", selection.report.tree_dump)
    _write_models(run, models)
    print(f"trained {len(models)} model(s) into {run.dir}")
    return 0


def _project_for_model(model, test: WeightedDataset) -> WeightedDataset:
    if model.schema_hash == test.schema.structural_hash():
        return test
    names = set(model.attribute_names)
    if names.issubset(set(test.schema.attribute_names)):
        projected = project_attributes(test, model.attribute_names)
        if model.schema_hash == projected.schema.structural_hash():
            return projected
    raise EvaluationError(
        f"model {getattr(model, 'model_id', '?')!r} does not match the test "
        "schema (attribute names/kinds or class order differ)"
    )


def cmd_eval(config: RunConfig, model_paths: list[str]) -> int:
    if not model_paths:
        raise ConfigError("eval needs at least one --models path")
    if not config.test:
        raise ConfigError("--test is required for eval")
    schema, taxonomy = _schema_and_taxonomy(config)
    test = load_dataset(_resolve_path(config.test), schema, taxonomy,
                        permissive=config.permissive)
    run = _Run(config)
    reports = []
    for path in model_paths:
        model = load_model_file(_resolve_path(path))
        report = evaluate(model, _project_for_model(model, test))
        reports.append(report)
        run.write_json(f"reports/{report.model_id}.json", report.to_dict())
        run.write_text(f"reports/{report.model_id}.txt", report.to_text())
        print(report.to_text())
    run.write_json("bundle.json", {
        "format": "eval-bundle/1",
        "reports": [r.to_dict() for r in reports],
    })
    return 0


def cmd_compare(config: RunConfig) -> int:
    train, test = _train_test(config)
    run = _Run(config)
    run.write_json("composition.json", _composition_doc(train))
    bundle = run_comparison(train, test, config.comparison_config())
    run.write_json("selection.json", bundle.selection.to_dict())
    run.write_text("selection.txt", bundle.selection.to_text())
    run.write_text("trees/weighting-tree.txt", bundle.selection.tree_dump)
    _write_models(run, bundle.models)
    for report in bundle.reports:
        run.write_json(f"reports/{report.model_id}.json", report.to_dict())
        run.write_text(f"reports/{report.model_id}.txt", report.to_text())
    run.write_json("bundle.json", bundle.to_dict())
    print(bundle.to_text())
    print(f"artifacts in {run.dir}")
    return 0


# -- argument parsing --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--train", help="training records (comma-separated, 42 fields)")
    p.add_argument("--test", help="test records")
    p.add_argument("--schema", help="schema file (default: built-in KDD99 schema)")
    p.add_argument("--taxonomy", help="attack-name mapping file (default: built-in)")
    p.add_argument("--out", help="output root (default: runs)")
    p.add_argument("--seed", type=int, help="seed for sampling/splitting")
    p.add_argument("--smoothing-k", dest="smoothing_k", type=float,
                   help="add-k smoothing strength, in average-example units")
    p.add_argument("--bins", type=int, help="equal-frequency bins for continuous attributes")
    p.add_argument("--folds", type=int, help="cross-validation folds for split utility")
    p.add_argument("--significance-pct", dest="significance_pct", type=float,
                   help="required relative error reduction for a split (percent)")
    p.add_argument("--min-split-examples", dest="min_split_examples", type=float,
                   help="example-mass floor for trying a split")
    p.add_argument("--nbtree-max-depth", dest="nbtree_max_depth", type=int)
    p.add_argument("--relabel", action=argparse.BooleanOptionalAction, default=None,
                   help="relabel examples to their argmax posterior during weighting")
    p.add_argument("--iterations", type=int, help="reweighting passes before the tree")
    p.add_argument("--weighting-max-depth", dest="weighting_max_depth", type=int)
    p.add_argument("--weighting-min-leaf-examples", dest="weighting_min_leaf_examples",
                   type=float)
    p.add_argument("--baselines", action=argparse.BooleanOptionalAction, default=None,
                   help="train NB / gain-tree baselines alongside the pipeline")
    p.add_argument("--sample-fraction", dest="sample_fraction", type=float,
                   help="stratified subsample of the training file")
    p.add_argument("--test-fraction", dest="test_fraction", type=float,
                   help="hold out this fraction of train as test (when no --test)")
    p.add_argument("--permissive", action=argparse.BooleanOptionalAction, default=None,
                   help="skip bad records and extend domains instead of aborting")
    p.add_argument("--workers", type=int, help="parallel evaluation workers")
    p.add_argument("--carry-weights", dest="carry_weights",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="carry posterior weights into the NB-tree (default on)")
    p.add_argument("--train-on-relabeled", dest="train_on_relabeled",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="train the NB-tree on relabeled working labels")


def build_parser() -> _Parser:
    parser = _Parser(prog="nbtree-ids",
                     description="Attribute weighting + NB-tree intrusion detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("inspect", "per-class composition of a dataset"),
        ("select", "run attribute weighting and report kept attributes"),
        ("train", "train the proposed model and any baselines"),
        ("eval", "evaluate saved models on a test set"),
        ("compare", "select, train and evaluate in one run"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        if name == "eval":
            p.add_argument("--models", nargs="+", help="model files to evaluate")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args)
        if args.command == "inspect":
            return cmd_inspect(config)
        if args.command == "select":
            return cmd_select(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "eval":
            return cmd_eval(config, args.models or [])
        if args.command == "compare":
            return cmd_compare(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, SchemaError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
