"""Boosted regression trees: gradients, tree growth and prediction."""

import math

import numpy as np
import pytest

from graphboost import (
    BoostedModel,
    FitParams,
    fit,
    logistic_loss,
    negative_gradient,
    squared_loss,
    write_model,
)

from conftest import path_graph, random_graph_set


def separable_toy():
    """Four graphs where one single-edge pattern separates the classes."""
    g_pos = path_graph([0, 1, 1])
    g_neg = path_graph([0, 0, 1])
    graphs = [g_neg, g_neg, g_pos, g_pos]
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    return graphs, y


# --- losses and gradients ---


def test_loss_fixed_values():
    y = np.array([1.0, -1.0])
    assert logistic_loss(y, np.zeros(2)) == pytest.approx(math.log(2.0))
    assert squared_loss(y, np.zeros(2)) == pytest.approx(0.5)
    assert squared_loss(y, y) == 0.0
    big = np.array([60.0, -60.0])
    assert logistic_loss(y, big) == pytest.approx(0.0, abs=1e-12)


def test_negative_gradient_matches_central_differences():
    h = 1e-6
    worst = 0.0
    for y in (-1.0, 1.0):
        for f in np.linspace(-3.0, 3.0, 25):
            def loss_one(v):
                return math.log1p(math.exp(-2.0 * y * v))

            want = -(loss_one(f + h) - loss_one(f - h)) / (2.0 * h)
            got = float(negative_gradient(np.array([y]), np.array([f]))[0])
            worst = max(worst, abs(got - want) / max(abs(want), 1e-12))
    assert worst < 1e-6


def test_negative_gradient_saturates_without_overflow():
    y = np.array([1.0, -1.0, 1.0])
    f = np.array([500.0, 500.0, -500.0])
    r = negative_gradient(y, f)
    assert np.all(np.isfinite(r))
    assert r[0] == pytest.approx(0.0, abs=1e-12)
    assert r[1] == pytest.approx(-2.0)
    assert r[2] == pytest.approx(2.0)


# --- FitParams ---


def test_fit_params_validation():
    for bad in (
        dict(max_depth=0),
        dict(eta=0.0),
        dict(eta=1.5),
        dict(n_trees=0),
        dict(min_support=0),
        dict(min_leaf=0),
        dict(loss="hinge"),
    ):
        with pytest.raises(ValueError):
            FitParams(**bad)
    budget = FitParams(max_edges=None).budget()
    assert budget.max_edges is None


# --- fitting ---


def test_squared_loss_stump_recovers_separable_labels():
    graphs, y = separable_toy()
    params = FitParams(n_trees=1, max_depth=1, eta=1.0, max_edges=1, loss="squared")
    model = fit(graphs, y, params)
    assert model.t0 == 0.0
    np.testing.assert_allclose(model.predict_score(graphs), y)
    tree = model.trees[0]
    assert tree.depth() == 1
    assert sorted(n.value for n in tree.nodes if n.is_leaf) == [-1.0, 1.0]


def test_logistic_fit_classifies_separable_toy():
    graphs, y = separable_toy()
    params = FitParams(n_trees=20, max_depth=1, eta=0.5, max_edges=1)
    model = fit(graphs, y, params)
    np.testing.assert_array_equal(model.predict_label(graphs), y)
    scores = model.predict_score(graphs)
    assert logistic_loss(y, scores) < logistic_loss(y, np.full(4, model.t0))


def test_t0_is_mean_response_and_eta_scales_first_round():
    graphs, y = separable_toy()
    y = np.array([-1.0, -1.0, 1.0, 3.0])
    params = FitParams(n_trees=1, max_depth=1, eta=0.25, max_edges=1, loss="squared")
    model = fit(graphs, y, params)
    assert model.t0 == y.mean()
    tree_pred = np.array([model.trees[0].predict_one(g) for g in graphs])
    np.testing.assert_allclose(model.predict_score(graphs), model.t0 + 0.25 * tree_pred)


def test_constant_responses_yield_constant_model():
    graphs, _ = separable_toy()
    y = np.full(4, 7.5)
    model = fit(graphs, y, FitParams(n_trees=3, max_depth=2, loss="squared", max_edges=2))
    np.testing.assert_allclose(model.predict_score(graphs), y)
    assert all(t.n_leaves == 1 for t in model.trees)


def test_depth_cap_holds_everywhere():
    rng = np.random.RandomState(61)
    graphs = random_graph_set(rng, 20, max_nodes=5)
    y = rng.randn(20)
    for d in (1, 2, 3):
        params = FitParams(n_trees=5, max_depth=d, eta=0.8, max_edges=2, loss="squared")
        model = fit(graphs, y, params)
        assert len(model.trees) == 5
        assert max(t.depth() for t in model.trees) <= d


def test_min_leaf_bounds_every_leaf():
    rng = np.random.RandomState(67)
    graphs = random_graph_set(rng, 24, max_nodes=5)
    y = rng.randn(24)
    params = FitParams(n_trees=4, max_depth=3, eta=1.0, max_edges=2, loss="squared", min_leaf=5)
    model = fit(graphs, y, params)
    for tree in model.trees:
        for node in tree.nodes:
            if node.is_leaf:
                assert node.n_train >= 5


def test_leaf_values_are_mean_routed_residuals():
    graphs, y = separable_toy()
    # one squared-loss round: residuals are y - mean(y), leaves their means
    model = fit(graphs, y, FitParams(n_trees=1, max_depth=2, eta=1.0, max_edges=1, loss="squared"))
    tree = model.trees[0]
    for node in tree.nodes:
        if node.is_leaf:
            routed = [g for g in graphs if tree.predict_one(g) == node.value]
            assert routed, "every leaf serves at least one training graph"
            vals = [y[i] - y.mean() for i, g in enumerate(graphs) if tree.predict_one(g) == node.value]
            assert node.value == pytest.approx(np.mean(vals))


def test_stump_routes_training_graphs_to_their_fitted_side():
    graphs, y = separable_toy()
    model = fit(graphs, y, FitParams(n_trees=1, max_depth=1, eta=1.0, max_edges=1, loss="squared"))
    tree = model.trees[0]
    root = tree.nodes[0]
    left, right = tree.nodes[root.left], tree.nodes[root.right]
    assert root.n_train == 4 and left.n_train + right.n_train == 4
    assert {tree.predict_one(g) for g in graphs} == {left.value, right.value}


def test_fit_is_deterministic():
    rng = np.random.RandomState(71)
    graphs = random_graph_set(rng, 15, max_nodes=4)
    y = np.where(rng.randn(15) > 0, 1.0, -1.0)
    params = FitParams(n_trees=8, max_depth=2, eta=0.6, max_edges=2)
    a = fit(graphs, y, params)
    b = fit(graphs, y, params)
    assert write_model(a) == write_model(b)
    np.testing.assert_array_equal(a.predict_score(graphs), b.predict_score(graphs))


def test_round_callback_sees_every_round():
    graphs, y = separable_toy()
    seen = []

    def cb(k, tree, scores):
        seen.append((k, len(tree.nodes), float(scores[0])))

    fit(graphs, y, FitParams(n_trees=6, max_depth=1, eta=0.5, max_edges=1), round_callback=cb)
    assert [k for k, _, _ in seen] == list(range(1, 7))


def test_predict_score_equals_per_tree_sum():
    rng = np.random.RandomState(73)
    graphs = random_graph_set(rng, 12, max_nodes=4)
    y = np.where(rng.randn(12) > 0, 1.0, -1.0)
    params = FitParams(n_trees=5, max_depth=2, eta=0.3, max_edges=2)
    model = fit(graphs, y, params)
    manual = model.t0 + params.eta * np.array(
        [sum(t.predict_one(g) for t in model.trees) for g in graphs]
    )
    np.testing.assert_allclose(model.predict_score(graphs), manual, rtol=0, atol=1e-12)


def test_predict_label_breaks_score_ties_positive():
    model = BoostedModel(t0=0.0, eta=0.5, trees=[], params=FitParams(n_trees=1))
    graphs, _ = separable_toy()
    np.testing.assert_array_equal(model.predict_label(graphs), np.ones(4))
