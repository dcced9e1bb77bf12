import json
import math

import numpy as np
import pytest

import oracles
from nbtree_ids.dataset import AttributeSpec, Schema, WeightedDataset
from nbtree_ids.exceptions import TrainingError
from nbtree_ids.probability import (
    NaiveBayesModel,
    bin_codes,
    classify_nb,
    equal_frequency_edges,
    estimate_conditionals,
    estimate_priors,
    fit_naive_bayes,
    posterior,
    weighted_class_score,
)


def schema_ab(*attr_domains, classes=("A", "B")):
    attrs = tuple(
        AttributeSpec(f"f{i}", "discrete", dom) for i, dom in enumerate(attr_domains)
    )
    return Schema(attrs, classes)


def random_discrete_dataset(rng, n_max=30, a_max=4, c_max=3, random_weights=False):
    n = int(rng.integers(4, n_max + 1))
    n_attr = int(rng.integers(1, a_max + 1))
    n_cls = int(rng.integers(2, c_max + 1))
    domains = tuple(
        tuple(f"v{k}" for k in range(int(rng.integers(2, 4)))) for _ in range(n_attr)
    )
    classes = tuple(f"c{k}" for k in range(n_cls))
    schema = schema_ab(*domains, classes=classes)
    rows = [
        tuple(dom[int(rng.integers(len(dom)))] for dom in domains) for _ in range(n)
    ]
    labels = [classes[int(rng.integers(n_cls))] for _ in range(n)]
    # every class must appear so k=0 stays usable
    for k, c in enumerate(classes):
        labels[k % n] = c
    weights = rng.uniform(0.5, 1.5, size=n) if random_weights else None
    ds = WeightedDataset.from_rows(schema, rows, labels, weights)
    return ds, rows, labels, domains, classes


# -- priors ------------------------------------------------------------------------


def test_priors_symmetric():
    ds = WeightedDataset.from_rows(
        schema_ab(("x", "y")), [("x",)] * 4, ["A", "A", "B", "B"]
    )
    priors = estimate_priors(ds, k=0.0)
    assert priors["A"] == pytest.approx(0.5)
    assert priors["B"] == pytest.approx(0.5)


def test_priors_follow_weights():
    ds = WeightedDataset.from_rows(
        schema_ab(("x", "y")), [("x",)] * 4, ["A", "A", "B", "B"],
        weights=[0.6, 0.2, 0.1, 0.1],
    )
    priors = estimate_priors(ds, k=0.0)
    assert priors["A"] == pytest.approx(0.8)


def test_priors_scale_invariant():
    rng = np.random.default_rng(0)
    ds, *_ = random_discrete_dataset(rng, random_weights=True)
    p1 = estimate_priors(ds, k=0.0).probs
    p2 = estimate_priors(ds.with_weights(ds.weights * 7.0), k=0.0).probs
    np.testing.assert_allclose(p1, p2, rtol=1e-12)


def test_priors_zero_total_weight_errors():
    ds = WeightedDataset(
        schema_ab(("x", "y")),
        [np.zeros(0, np.int32)], np.zeros(0, np.int64), np.zeros(0),
    )
    with pytest.raises(TrainingError):
        estimate_priors(ds)


def test_priors_smoothed_only_when_class_missing():
    ds = WeightedDataset.from_rows(schema_ab(("x",)), [("x",)] * 3, ["A"] * 3)
    priors = estimate_priors(ds, k=1.0)  # class B absent -> smoothing kicks in
    assert 0 < priors["B"] < priors["A"] < 1
    assert priors.probs.sum() == pytest.approx(1.0)


# -- conditionals ---------------------------------------------------------------------


def test_conditionals_pure_column_k0():
    schema = Schema((AttributeSpec("f0", "discrete", ("0", "1")),), ("A",))
    ds = WeightedDataset.from_rows(schema, [("1",)] * 4, ["A"] * 4)
    cond = estimate_conditionals(ds, k=0.0)
    table = cond.by_name("f0").cond
    assert table[0, 1] == pytest.approx(1.0)
    assert table[0, 0] == pytest.approx(0.0)


def test_conditionals_add_k_exact_value():
    # class weight 1.0, V=2, k=1: (1 + 1) / (1 + 2) = 2/3
    schema = Schema((AttributeSpec("f0", "discrete", ("0", "1")),), ("A",))
    ds = WeightedDataset.from_rows(schema, [("1",)] * 4, ["A"] * 4)  # weights 0.25
    assert ds.total_weight == pytest.approx(1.0)
    cond = estimate_conditionals(ds, k=1.0)
    assert cond.by_name("f0").cond[0, 1] == pytest.approx(2.0 / 3.0)


def test_conditionals_match_counting_oracle():
    schema = schema_ab(("x", "y"), ("0", "1"))
    rows = [("x", "0"), ("x", "1"), ("y", "1"), ("y", "0"), ("x", "0"), ("y", "1")]
    labels = ["A", "A", "B", "B", "A", "B"]
    weights = [0.3, 0.1, 0.25, 0.05, 0.2, 0.1]
    ds = WeightedDataset.from_rows(schema, rows, labels, weights)
    for k in (0.0, 1.0, 0.5):
        cond = estimate_conditionals(ds, k=k)
        _, tables, _ = oracles.nb_reference(
            rows, labels, weights, ("A", "B"), [("x", "y"), ("0", "1")], k
        )
        for j, attr in enumerate(cond.attributes):
            for ci, c in enumerate(("A", "B")):
                for vi, v in enumerate(attr.domain):
                    assert attr.cond[ci, vi] == pytest.approx(
                        tables[j][(c, v)], rel=1e-12
                    )


def test_conditionals_zero_weight_class_k0_errors():
    ds = WeightedDataset.from_rows(schema_ab(("x",)), [("x",)] * 3, ["A"] * 3)
    with pytest.raises(TrainingError, match="zero weight"):
        estimate_conditionals(ds, k=0.0)


def test_conditional_rows_sum_to_one_and_avoid_extremes():
    rng = np.random.default_rng(5)
    for _ in range(20):
        ds, *_ = random_discrete_dataset(rng, random_weights=True)
        cond = estimate_conditionals(ds, k=1.0)
        for attr in cond.attributes:
            np.testing.assert_allclose(attr.cond.sum(axis=1), 1.0, atol=1e-9)
            if attr.n_values > 1:
                assert np.all(attr.cond > 0)
                assert np.all(attr.cond < 1)


# -- binning ----------------------------------------------------------------------------


def test_equal_frequency_edges_basic():
    values = np.arange(100, dtype=float)
    edges = equal_frequency_edges(values, 4)
    assert len(edges) == 3
    codes = bin_codes(values, edges)
    counts = np.bincount(codes)
    assert counts.min() >= 24 and counts.max() <= 26


def test_equal_frequency_edges_heavy_ties():
    values = np.array([0.0] * 90 + [1.0, 2.0, 3.0] * 3 + [5.0])
    edges = equal_frequency_edges(values, 10)
    assert len(edges) >= 1
    assert len(np.unique(edges)) == len(edges)
    codes = bin_codes(values, edges)
    assert codes.max() == len(edges)


def test_constant_column_is_single_bin():
    edges = equal_frequency_edges(np.full(50, 3.25), 10)
    assert len(edges) == 0
    assert np.all(bin_codes(np.full(50, 3.25), edges) == 0)


# -- posterior / classify ------------------------------------------------------------------


def test_posterior_uniform_under_symmetry():
    schema = schema_ab(("x", "y"))
    ds = WeightedDataset.from_rows(
        schema, [("x",), ("y",), ("x",), ("y",)], ["A", "A", "B", "B"]
    )
    model = fit_naive_bayes(ds, k=1.0)
    p = posterior(ds.example(0), model)
    np.testing.assert_allclose(p.probs, 0.5, atol=1e-12)


def test_posterior_equals_priors_with_no_attributes():
    schema = Schema((), ("A", "B"))
    ds = WeightedDataset(
        schema, [], np.array([0] * 9 + [1]), np.full(10, 0.1),
    )
    model = fit_naive_bayes(ds, k=1.0)
    from nbtree_ids.dataset import Example

    p = posterior(Example((), "A", "normal"), model)
    np.testing.assert_allclose(p.probs, [0.9, 0.1], atol=1e-12)


def test_posterior_matches_enumeration_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        ds, rows, labels, domains, classes = random_discrete_dataset(
            rng, random_weights=True
        )
        model = fit_naive_bayes(ds, k=1.0)
        k_eff = 1.0 * ds.total_weight / ds.n
        _, _, posts = oracles.nb_reference(
            rows, labels, list(ds.weights), classes, domains, k_eff
        )
        for i in range(ds.n):
            got = posterior(ds.example(i), model)
            want = np.array([posts[i][c] for c in classes])
            np.testing.assert_allclose(got.probs, want, rtol=1e-9)
            assert got.probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_posterior_k0_all_zero_vector_errors():
    schema = schema_ab(("x", "y"))
    # value "y" never seen: with k=0 every class gets probability 0
    ds = WeightedDataset.from_rows(schema, [("x",), ("x",)], ["A", "B"])
    model = fit_naive_bayes(ds, k=0.0)
    from nbtree_ids.dataset import Example

    with pytest.raises(TrainingError, match="zero"):
        posterior(Example(("y",), "A", "normal"), model)


def test_classify_argmax_and_tie_break():
    schema = schema_ab(("x", "y"))
    ds = WeightedDataset.from_rows(
        schema, [("x",), ("x",), ("y",), ("y",)], ["A", "A", "B", "B"]
    )
    model = fit_naive_bayes(ds, k=1.0)
    assert classify_nb(ds.example(0), model) == "A"
    # exact tie: symmetric data makes both classes score identically
    sym = WeightedDataset.from_rows(
        schema, [("x",), ("y",), ("x",), ("y",)], ["A", "A", "B", "B"]
    )
    tied = fit_naive_bayes(sym, k=1.0)
    assert classify_nb(sym.example(0), tied) == "A"  # first class in order wins


def test_classify_matches_oracle_argmax():
    rng = np.random.default_rng(23)
    ds, rows, labels, domains, classes = random_discrete_dataset(rng, n_max=20)
    model = fit_naive_bayes(ds, k=1.0)
    k_eff = 1.0 * ds.total_weight / ds.n
    priors, tables, _ = oracles.nb_reference(
        rows, labels, list(ds.weights), classes, domains, k_eff
    )
    for i, row in enumerate(rows):
        scores = oracles.nb_joint_scores(row, priors, tables, classes)
        assert classify_nb(ds.example(i), model) == oracles.argmax_class(scores, classes)


def test_log_and_direct_product_agree():
    rng = np.random.default_rng(31)
    for _ in range(10):
        ds, rows, labels, domains, classes = random_discrete_dataset(rng)
        model = fit_naive_bayes(ds, k=1.0)
        k_eff = 1.0 * ds.total_weight / ds.n
        priors, tables, _ = oracles.nb_reference(
            rows, labels, list(ds.weights), classes, domains, k_eff
        )
        for i, row in enumerate(rows):
            direct = oracles.nb_joint_scores(row, priors, tables, classes)
            codes = model.encode_example(ds.example(i))
            logs = model.log_scores(codes[None, :])[0]
            for ci, c in enumerate(classes):
                assert math.exp(logs[ci]) == pytest.approx(direct[c], rel=1e-9)


# -- weighted scores -------------------------------------------------------------------------


def test_weighted_score_reduces_to_plain_with_unit_weights():
    rng = np.random.default_rng(41)
    ds, *_ = random_discrete_dataset(rng)
    model = fit_naive_bayes(ds, k=1.0)
    ones = np.ones(model.attribute_count)
    for i in range(ds.n):
        ex = ds.example(i)
        plain = model.log_scores(model.encode_example(ex)[None, :])[0]
        weighted = weighted_class_score(ex, model, ones)
        np.testing.assert_allclose(weighted, plain, atol=1e-12)


def test_zero_weight_ignores_attribute():
    schema = schema_ab(("x", "y"), ("0", "1"))
    rows = [("x", "0"), ("x", "1"), ("y", "0"), ("y", "1")]
    ds = WeightedDataset.from_rows(schema, rows, ["A", "A", "B", "B"])
    model = fit_naive_bayes(ds, k=1.0)
    from nbtree_ids.dataset import project_attributes

    reduced = project_attributes(ds, ["f1"])
    reduced_model = fit_naive_bayes(reduced, k=1.0)
    for i in range(ds.n):
        full = weighted_class_score(ds.example(i), model, np.array([0.0, 1.0]))
        red = weighted_class_score(reduced.example(i), reduced_model, np.array([1.0]))
        np.testing.assert_allclose(full, red, atol=1e-12)


def test_weighted_score_hand_computed():
    schema = schema_ab(("x", "y"), ("0", "1"))
    rows = [("x", "0"), ("x", "1"), ("y", "0"), ("y", "1"), ("x", "0")]
    labels = ["A", "A", "B", "B", "B"]
    ds = WeightedDataset.from_rows(schema, rows, labels)
    model = fit_naive_bayes(ds, k=1.0)
    w = np.array([0.5, 1.0])
    for i in (0, 3):
        got = weighted_class_score(ds.example(i), model, w)
        codes = model.encode_example(ds.example(i))
        for ci in range(2):
            expected = math.log(model.priors.probs[ci])
            expected += 0.5 * math.log(model.conditionals.attributes[0].cond[ci, codes[0]])
            expected += 1.0 * math.log(model.conditionals.attributes[1].cond[ci, codes[1]])
            assert got[ci] == pytest.approx(expected, rel=1e-12)


def test_weighted_score_rejects_negative_weight():
    rng = np.random.default_rng(47)
    ds, *_ = random_discrete_dataset(rng)
    model = fit_naive_bayes(ds, k=1.0)
    with pytest.raises(ValueError):
        weighted_class_score(ds.example(0), model, np.full(model.attribute_count, -0.1))


def test_argmax_invariant_under_normalisation():
    rng = np.random.default_rng(53)
    for _ in range(10):
        ds, *_ = random_discrete_dataset(rng, random_weights=True)
        model = fit_naive_bayes(ds, k=1.0)
        ones = np.ones(model.attribute_count)
        for i in range(ds.n):
            raw = weighted_class_score(ds.example(i), model, ones)
            norm = weighted_class_score(ds.example(i), model, ones, normalized=True)
            assert int(np.argmax(raw)) == int(np.argmax(norm))
            assert norm.sum() == pytest.approx(1.0, abs=1e-9)


# -- serialisation ----------------------------------------------------------------------------


def test_model_json_round_trip_is_bit_stable():
    schema = Schema(
        (
            AttributeSpec("f0", "discrete", ("x", "y")),
            AttributeSpec("f1", "continuous"),
        ),
        ("A", "B"),
    )
    ds = WeightedDataset.from_rows(
        schema,
        [("x", 0.5), ("x", 1.5), ("y", 2.5), ("y", 3.5), ("x", 1.0)],
        ["A", "A", "B", "B", "A"],
    )
    model = fit_naive_bayes(ds, k=1.0)
    text = model.to_json()
    again = NaiveBayesModel.from_json(text)
    assert again.to_json() == text
    np.testing.assert_array_equal(again.predict_dataset(ds), model.predict_dataset(ds))


def test_batch_predictions_match_per_example():
    rng = np.random.default_rng(61)
    ds, *_ = random_discrete_dataset(rng, random_weights=True)
    model = fit_naive_bayes(ds, k=1.0)
    batch = model.predict_dataset(ds)
    for i in range(ds.n):
        assert model.classes[batch[i]] == classify_nb(ds.example(i), model)
