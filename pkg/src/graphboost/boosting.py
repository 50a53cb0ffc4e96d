"""Gradient tree boosting with subgraph-indicator regression trees.

Each boosting round fits one regression tree to the pointwise negative
gradient of the loss at the current scores.  Tree splits route a graph left
when it contains the split's pattern; leaves predict the mean residual of
the training graphs that reach them.  The final score is
``t0 + eta * sum(tree predictions)`` with ``t0`` the response mean.

Binary labels use the logistic loss log(1 + exp(-2 y f)); plain
least-squares regression runs behind the same interfaces with residuals
``y - f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .graphs import DfsCode, LabeledGraph, contains
from .mining import EnumBudget
from .splitting import (
    SearchStats,
    SplitSearcher,
    TssStats,
    tss,
)

LOSSES = ("logistic", "squared")


@dataclass(frozen=True)
class FitParams:
    """Hyperparameters of one boosting run.

    ``max_edges`` is the pattern-size budget x (None means unbounded),
    ``max_depth`` the tree depth d, ``eta`` the shrinkage, ``n_trees`` the
    round count k.  ``seed`` is recorded for provenance only: fitting is
    deterministic.
    """

    n_trees: int = 500
    max_depth: int = 3
    eta: float = 0.4
    max_edges: int | None = 6
    min_support: int = 1
    min_leaf: int = 1
    loss: str = "logistic"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must be in (0, 1]")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")

    def budget(self) -> EnumBudget:
        return EnumBudget(max_edges=self.max_edges, min_support=self.min_support)


def negative_gradient(y: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Pointwise negative gradient of the logistic loss, 2y / (1 + exp(2yf)).

    Evaluated through exp of a non-positive argument only, so large scores
    saturate to 0 instead of overflowing.
    """
    y = np.asarray(y, dtype=float)
    z = 2.0 * y * np.asarray(scores, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 2.0 * y * e / (1.0 + e), 2.0 * y / (1.0 + e))


def logistic_loss(y: np.ndarray, scores: np.ndarray) -> float:
    """Mean logistic loss log(1 + exp(-2 y f))."""
    y = np.asarray(y, dtype=float)
    s = np.asarray(scores, dtype=float)
    return float(np.mean(np.logaddexp(0.0, -2.0 * y * s)))


def squared_loss(y: np.ndarray, scores: np.ndarray) -> float:
    """Mean halved squared error."""
    y = np.asarray(y, dtype=float)
    s = np.asarray(scores, dtype=float)
    return float(np.mean(0.5 * (y - s) ** 2))


@dataclass
class TreeNode:
    """One tree node; leaves have ``pattern`` None and carry ``value``."""

    pattern: DfsCode | None = None
    left: int = -1
    right: int = -1
    value: float = 0.0
    gain: float = 0.0
    n_train: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.pattern is None


@lru_cache(maxsize=None)
def pattern_graph(code: DfsCode) -> LabeledGraph:
    """Materialized pattern for routing; cached since codes repeat heavily."""
    return code.to_graph()


ContainsFn = Callable[[LabeledGraph, DfsCode], bool]


def _default_contains(graph: LabeledGraph, code: DfsCode) -> bool:
    return contains(graph, pattern_graph(code))


@dataclass
class RegressionTree:
    """Regression tree over graphs, nodes in preorder with the root at 0."""

    nodes: list[TreeNode] = field(default_factory=list)

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.is_leaf)

    def depth(self) -> int:
        def go(idx: int) -> int:
            n = self.nodes[idx]
            if n.is_leaf:
                return 0
            return 1 + max(go(n.left), go(n.right))

        return go(0)

    def predict_one(self, graph: LabeledGraph, contains_fn: ContainsFn = _default_contains) -> float:
        idx = 0
        while True:
            node = self.nodes[idx]
            if node.is_leaf:
                return node.value
            idx = node.left if contains_fn(graph, node.pattern) else node.right

    def patterns(self) -> list[DfsCode]:
        return [n.pattern for n in self.nodes if not n.is_leaf]


def _build_tree(
    splitter,
    node_ids: np.ndarray,
    residuals: np.ndarray,
    params: FitParams,
) -> tuple[RegressionTree, np.ndarray, SearchStats]:
    """Fit one tree to the residuals; also return its training predictions."""
    nodes: list[TreeNode] = []
    pred = np.zeros(len(residuals))
    stats = SearchStats()

    def build(ids: np.ndarray, depth: int) -> int:
        idx = len(nodes)
        nodes.append(TreeNode())
        vals = residuals[ids]
        best = None
        terminal = (
            depth >= params.max_depth
            or len(ids) < 2 * params.min_leaf
            or float(np.min(vals)) == float(np.max(vals))
        )
        if not terminal:
            best, search_stats = splitter.find_best_split(ids, residuals)
            stats.merge(search_stats)
            if best is not None and (
                len(best.left_ids) < params.min_leaf or len(best.right_ids) < params.min_leaf
            ):
                best = None
        if best is None:
            value = float(np.mean(vals))
            nodes[idx] = TreeNode(value=value, n_train=len(ids))
            pred[ids] = value
        else:
            gain = tss(TssStats.from_values(vals)) - best.objective
            left = build(best.left_ids, depth + 1)
            right = build(best.right_ids, depth + 1)
            nodes[idx] = TreeNode(
                pattern=best.pattern,
                left=left,
                right=right,
                gain=gain,
                n_train=len(ids),
            )
        return idx

    build(np.asarray(node_ids, dtype=np.intp), 0)
    return RegressionTree(nodes), pred, stats


RoundCallback = Callable[[int, RegressionTree, np.ndarray], None]


@dataclass
class BoostedModel:
    """A fitted additive model: t0 plus eta times a sum of trees."""

    t0: float
    eta: float
    trees: list[RegressionTree]
    params: FitParams
    node_label_names: tuple[str, ...] = ()
    edge_label_names: tuple[str, ...] = ()

    def predict_score(self, graphs: Sequence[LabeledGraph]) -> np.ndarray:
        """Real-valued scores; containment checks are memoized per call."""
        memo: dict[tuple[int, DfsCode], bool] = {}
        out = np.full(len(graphs), self.t0)
        for gi, g in enumerate(graphs):

            def cfn(graph: LabeledGraph, code: DfsCode, _gi=gi) -> bool:
                key = (_gi, code)
                hit = memo.get(key)
                if hit is None:
                    hit = _default_contains(graph, code)
                    memo[key] = hit
                return hit

            out[gi] += self.eta * sum(t.predict_one(g, cfn) for t in self.trees)
        return out

    def predict_label(self, graphs: Sequence[LabeledGraph]) -> np.ndarray:
        """Hard labels in {-1, +1}; a score of exactly 0 maps to +1."""
        s = self.predict_score(graphs)
        return np.where(s >= 0.0, 1.0, -1.0)

    # aggregated split-search counters from fitting; not serialized
    fit_stats: SearchStats = field(default_factory=SearchStats)


def fit(
    graphs: Sequence[LabeledGraph],
    responses: np.ndarray,
    params: FitParams,
    splitter=None,
    round_callback: RoundCallback | None = None,
    node_label_names: Sequence[str] = (),
    edge_label_names: Sequence[str] = (),
) -> BoostedModel:
    """Fit a boosted model; deterministic for fixed inputs and params.

    ``splitter`` defaults to a fresh branch-and-bound
    :class:`~graphboost.splitting.SplitSearcher` over the training graphs;
    passing one in lets callers share a pattern cache across fits or swap
    in the materialized splitter.  ``round_callback(k, tree, train_scores)``
    fires after each round with the scores array - treat it as read-only.
    """
    y = np.asarray(responses, dtype=float)
    if len(graphs) != len(y):
        raise ValueError("graphs and responses disagree in length")
    if len(y) == 0:
        raise ValueError("cannot fit on an empty dataset")
    if splitter is None:
        splitter = SplitSearcher(graphs, params.budget())
    t0 = float(np.mean(y))
    f = np.full(len(y), t0)
    all_ids = np.arange(len(y), dtype=np.intp)
    trees: list[RegressionTree] = []
    total_stats = SearchStats()
    for k in range(1, params.n_trees + 1):
        if params.loss == "logistic":
            residuals = negative_gradient(y, f)
        else:
            residuals = y - f
        tree, train_pred, tree_stats = _build_tree(splitter, all_ids, residuals, params)
        total_stats.merge(tree_stats)
        trees.append(tree)
        f = f + params.eta * train_pred
        if round_callback is not None:
            round_callback(k, tree, f)
    return BoostedModel(
        t0=t0,
        eta=params.eta,
        trees=trees,
        params=params,
        node_label_names=tuple(node_label_names),
        edge_label_names=tuple(edge_label_names),
        fit_stats=total_stats,
    )
