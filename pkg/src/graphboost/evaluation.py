"""Cross-validation, metrics, learning curves, and route benchmarking.

The CV runner fits every configuration on every fold and scores the test
fold after each boosting round, so one fit at the largest round count
yields the whole learning curve.  Containment checks against test graphs
are memoized per fold and shared across configurations, and so is the
training-side pattern cache, which makes parameter grids far cheaper than
independent runs while producing identical numbers.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .boosting import (
    BoostedModel,
    FitParams,
    RegressionTree,
    fit,
    logistic_loss,
    pattern_graph,
    squared_loss,
)
from .dataio import Dataset
from .graphs import DfsCode, LabeledGraph, contains
from .splitting import (
    MaterializedSplitter,
    PatternCache,
    ResourceBudgetError,
    SearchStats,
    SplitSearcher,
)


def stratified_kfold(responses: np.ndarray, n_folds: int, seed: int = 0) -> np.ndarray:
    """Assign a fold index to every graph, stratified by response value.

    Each response class is shuffled with the seeded generator and dealt
    round-robin, so per-class fold sizes differ by at most one.
    """
    y = np.asarray(responses)
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    fold = np.empty(len(y), dtype=int)
    rng = np.random.default_rng(seed)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < n_folds:
            raise ValueError(f"class {cls} has fewer graphs ({len(idx)}) than folds")
        rng.shuffle(idx)
        fold[idx] = np.arange(len(idx)) % n_folds
    return fold


def accuracy(y: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of agreeing labels."""
    y = np.asarray(y, dtype=float)
    labels = np.asarray(labels, dtype=float)
    return float(np.mean(np.sign(y) == np.sign(labels)))


def auc(y: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve via the rank statistic, ties averaged."""
    y = np.asarray(y, dtype=float)
    s = np.asarray(scores, dtype=float)
    pos = y > 0
    n_pos = int(np.sum(pos))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    new_group = np.r_[True, ss[1:] != ss[:-1]]
    group_id = np.cumsum(new_group) - 1
    counts = np.bincount(group_id)
    starts = np.flatnonzero(new_group)
    avg_rank = starts[group_id] + (counts[group_id] + 1) / 2.0
    ranks = np.empty(len(s))
    ranks[order] = avg_rank
    u = float(np.sum(ranks[pos])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def feature_importance(model: BoostedModel) -> dict[DfsCode, float]:
    """Per-pattern importance from summed split gains, scaled so max is 1.

    Gains (node TSS minus split objective) are recorded on internal nodes
    at fit time, so no data pass is needed here.
    """
    raw: dict[DfsCode, float] = {}
    for tree in model.trees:
        for node in tree.nodes:
            if not node.is_leaf:
                raw[node.pattern] = raw.get(node.pattern, 0.0) + node.gain
    if not raw:
        return {}
    top = max(raw.values())
    if top <= 0.0:
        return raw
    return {code: g / top for code, g in raw.items()}


def _loss_fn(loss: str):
    return logistic_loss if loss == "logistic" else squared_loss


@dataclass
class FoldConfigResult:
    """Curves and counters of one configuration on one fold."""

    fold: int
    ks: list[int]
    test_accuracy: list[float]
    test_auc: list[float]
    test_loss: list[float]
    train_loss: list[float]
    seconds: float
    stats: SearchStats
    selected_nodes: int
    selected_by_size: dict[int, int]
    distinct_patterns: int
    width: int | None = None  # materialized route only


@dataclass
class ConfigResult:
    """One configuration aggregated across folds."""

    params: FitParams
    ks: list[int]
    mean_test_accuracy: list[float]
    mean_test_auc: list[float]
    mean_test_loss: list[float]
    mean_train_loss: list[float]
    best_k: int
    best_test_accuracy: float
    best_test_auc: float
    test_loss_at_best: float
    min_test_loss: float
    folds: list[FoldConfigResult]

    def to_json(self) -> dict:
        p = self.params
        visited_by_size: dict[int, int] = {}
        selected_by_size: dict[int, int] = {}
        for f in self.folds:
            for k, v in f.stats.visited_by_size.items():
                visited_by_size[k] = visited_by_size.get(k, 0) + v
            for k, v in f.selected_by_size.items():
                selected_by_size[k] = selected_by_size.get(k, 0) + v
        return {
            "x": p.max_edges,
            "d": p.max_depth,
            "eta": p.eta,
            "k_max": p.n_trees,
            "min_support": p.min_support,
            "min_leaf": p.min_leaf,
            "loss": p.loss,
            "ks": self.ks,
            "mean_test_accuracy": self.mean_test_accuracy,
            "mean_test_auc": self.mean_test_auc,
            "mean_test_loss": self.mean_test_loss,
            "mean_train_loss": self.mean_train_loss,
            "best_k": self.best_k,
            "best_test_accuracy": self.best_test_accuracy,
            "best_test_auc": self.best_test_auc,
            "test_loss_at_best": self.test_loss_at_best,
            "min_test_loss": self.min_test_loss,
            "search": {
                "visited": sum(f.stats.visited for f in self.folds),
                "pruned_subtrees": sum(f.stats.pruned_subtrees for f in self.folds),
                "selected_nodes": sum(f.selected_nodes for f in self.folds),
                "visited_by_size": {str(k): v for k, v in sorted(visited_by_size.items())},
                "selected_by_size": {str(k): v for k, v in sorted(selected_by_size.items())},
            },
            "folds": [
                {
                    "fold": f.fold,
                    "seconds": f.seconds,
                    "visited": f.stats.visited,
                    "pruned_subtrees": f.stats.pruned_subtrees,
                    "selected_nodes": f.selected_nodes,
                    "distinct_patterns": f.distinct_patterns,
                    "test_accuracy_final": f.test_accuracy[-1],
                    "width": f.width,
                }
                for f in self.folds
            ],
        }


@dataclass
class CvReport:
    """Full cross-validation report over a configuration list."""

    dataset: str
    n_graphs: int
    n_folds: int
    seed: int
    prune: bool
    naive: bool
    snapshot_every: int
    configs: list[ConfigResult]

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_graphs": self.n_graphs,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "prune": self.prune,
            "naive": self.naive,
            "snapshot_every": self.snapshot_every,
            "configs": [c.to_json() for c in self.configs],
        }

    def config(self, max_edges: int | None, max_depth: int, eta: float) -> ConfigResult:
        """Look up one configuration by its (x, d, eta) coordinates."""
        for c in self.configs:
            p = c.params
            if p.max_edges == max_edges and p.max_depth == max_depth and p.eta == eta:
                return c
        raise KeyError(f"no config x={max_edges} d={max_depth} eta={eta}")


def _snapshot_ks(n_trees: int, every: int) -> list[int]:
    ks = list(range(every, n_trees + 1, every))
    if not ks or ks[-1] != n_trees:
        ks.append(n_trees)
    return ks


class _TestScorer:
    """Incremental per-round scoring of held-out graphs.

    Containment results are memoized by (graph id, pattern code) and shared
    across configurations on the same fold.
    """

    def __init__(self, graphs: Sequence[LabeledGraph], memo: dict):
        self.graphs = graphs
        self.memo = memo

    def tree_values(self, tree: RegressionTree) -> np.ndarray:
        out = np.empty(len(self.graphs))
        memo = self.memo
        for gi, g in enumerate(self.graphs):
            idx = 0
            nodes = tree.nodes
            while True:
                node = nodes[idx]
                if node.is_leaf:
                    out[gi] = node.value
                    break
                key = (gi, node.pattern)
                hit = memo.get(key)
                if hit is None:
                    hit = contains(g, pattern_graph(node.pattern))
                    memo[key] = hit
                idx = node.left if hit else node.right
        return out


def _selected_counters(model: BoostedModel) -> tuple[int, dict[int, int], int]:
    selected = 0
    by_size: dict[int, int] = {}
    distinct: set[DfsCode] = set()
    for tree in model.trees:
        for node in tree.nodes:
            if node.is_leaf:
                continue
            selected += 1
            size = node.pattern.n_edges
            by_size[size] = by_size.get(size, 0) + 1
            distinct.add(node.pattern)
    return selected, by_size, len(distinct)


def _run_fold(
    dataset: Dataset,
    fold_assign: np.ndarray,
    fold_idx: int,
    params_list: Sequence[FitParams],
    prune: bool,
    snapshot_every: int,
    naive: bool,
    memory_budget: int | None,
) -> list[FoldConfigResult]:
    test_mask = fold_assign == fold_idx
    train_ids = np.flatnonzero(~test_mask)
    test_ids = np.flatnonzero(test_mask)
    train_graphs = [dataset.graphs[i] for i in train_ids]
    y_train = dataset.responses[train_ids]
    test_graphs = [dataset.graphs[i] for i in test_ids]
    y_test = dataset.responses[test_ids]

    cache = PatternCache(train_graphs)
    materialized: dict[tuple[int | None, int], MaterializedSplitter] = {}
    contains_memo: dict = {}
    scorer = _TestScorer(test_graphs, contains_memo)

    results: list[FoldConfigResult] = []
    for params in params_list:
        if naive:
            key = (params.max_edges, params.min_support)
            if key not in materialized:
                materialized[key] = MaterializedSplitter(
                    train_graphs, params.budget(), memory_budget_bytes=memory_budget
                )
            splitter = materialized[key]
        else:
            splitter = SplitSearcher(train_graphs, params.budget(), cache=cache, prune=prune)
        loss_fn = _loss_fn(params.loss)
        want_ks = set(_snapshot_ks(params.n_trees, snapshot_every))
        ks: list[int] = []
        test_acc: list[float] = []
        test_auc: list[float] = []
        test_loss: list[float] = []
        train_loss: list[float] = []
        test_scores = np.full(len(test_graphs), float(np.mean(y_train)))

        def on_round(k: int, tree: RegressionTree, train_scores: np.ndarray) -> None:
            test_scores[:] += params.eta * scorer.tree_values(tree)
            if k in want_ks:
                ks.append(k)
                labels = np.where(test_scores >= 0.0, 1.0, -1.0)
                test_acc.append(float(np.mean(labels == y_test)))
                test_auc.append(auc(y_test, test_scores))
                test_loss.append(loss_fn(y_test, test_scores))
                train_loss.append(loss_fn(y_train, train_scores))

        t_start = time.perf_counter()
        model = fit(train_graphs, y_train, params, splitter=splitter, round_callback=on_round)
        seconds = time.perf_counter() - t_start
        selected, by_size, distinct = _selected_counters(model)
        results.append(
            FoldConfigResult(
                fold=fold_idx,
                ks=ks,
                test_accuracy=test_acc,
                test_auc=test_auc,
                test_loss=test_loss,
                train_loss=train_loss,
                seconds=seconds,
                stats=model.fit_stats,
                selected_nodes=selected,
                selected_by_size=by_size,
                distinct_patterns=distinct,
                width=getattr(splitter, "width", None),
            )
        )
    return results


def run_cv(
    dataset: Dataset,
    params_list: Sequence[FitParams],
    n_folds: int = 2,
    seed: int = 0,
    prune: bool = True,
    snapshot_every: int = 1,
    naive: bool = False,
    memory_budget: int | None = None,
    jobs: int = 1,
) -> CvReport:
    """Cross-validate every configuration; deterministic for fixed inputs.

    ``jobs`` > 1 distributes folds over processes; results are identical to
    the sequential run.  With ``naive`` the materialized-matrix route
    replaces the branch-and-bound search (same models, different cost), and
    ``memory_budget`` caps the matrix size in bytes.
    """
    params_list = list(params_list)
    fold_assign = stratified_kfold(dataset.responses, n_folds, seed)
    per_fold: list[list[FoldConfigResult]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n_folds)) as pool:
            futures = [
                pool.submit(
                    _run_fold,
                    dataset,
                    fold_assign,
                    f,
                    params_list,
                    prune,
                    snapshot_every,
                    naive,
                    memory_budget,
                )
                for f in range(n_folds)
            ]
            per_fold = [fut.result() for fut in futures]
    else:
        per_fold = [
            _run_fold(
                dataset, fold_assign, f, params_list, prune, snapshot_every, naive, memory_budget
            )
            for f in range(n_folds)
        ]

    configs: list[ConfigResult] = []
    for ci, params in enumerate(params_list):
        folds = [per_fold[f][ci] for f in range(n_folds)]
        ks = folds[0].ks
        acc = np.mean([f.test_accuracy for f in folds], axis=0)
        aucs = np.mean([f.test_auc for f in folds], axis=0)
        tloss = np.mean([f.test_loss for f in folds], axis=0)
        trloss = np.mean([f.train_loss for f in folds], axis=0)
        if params.loss == "logistic":
            best_idx = int(np.argmax(acc))  # ties resolve to the smallest k
        else:
            best_idx = int(np.argmin(tloss))
        configs.append(
            ConfigResult(
                params=params,
                ks=ks,
                mean_test_accuracy=[float(v) for v in acc],
                mean_test_auc=[float(v) for v in aucs],
                mean_test_loss=[float(v) for v in tloss],
                mean_train_loss=[float(v) for v in trloss],
                best_k=ks[best_idx],
                best_test_accuracy=float(acc[best_idx]),
                best_test_auc=float(aucs[best_idx]),
                test_loss_at_best=float(tloss[best_idx]),
                min_test_loss=float(np.min(tloss)),
                folds=folds,
            )
        )
    return CvReport(
        dataset=dataset.name,
        n_graphs=dataset.n_graphs,
        n_folds=n_folds,
        seed=seed,
        prune=prune,
        naive=naive,
        snapshot_every=snapshot_every,
        configs=configs,
    )


def curves_tsv(report: CvReport) -> str:
    """Learning curves of every configuration as one TSV table."""
    rows = ["x\td\teta\tk\tmean_test_accuracy\tmean_test_auc\tmean_test_loss\tmean_train_loss"]
    for c in report.configs:
        x = "inf" if c.params.max_edges is None else str(c.params.max_edges)
        for i, k in enumerate(c.ks):
            rows.append(
                f"{x}\t{c.params.max_depth}\t{c.params.eta:g}\t{k}\t"
                f"{c.mean_test_accuracy[i]:.6f}\t{c.mean_test_auc[i]:.6f}\t"
                f"{c.mean_test_loss[i]:.6f}\t{c.mean_train_loss[i]:.6f}"
            )
    return "\n".join(rows) + "\n"


def sizes_tsv(report: CvReport) -> str:
    """Per-size searched/selected counters of every configuration as TSV."""
    rows = ["x\td\teta\tpattern_edges\tvisited\tselected"]
    for c in report.configs:
        x = "inf" if c.params.max_edges is None else str(c.params.max_edges)
        visited: dict[int, int] = {}
        selected: dict[int, int] = {}
        for f in c.folds:
            for k, v in f.stats.visited_by_size.items():
                visited[k] = visited.get(k, 0) + v
            for k, v in f.selected_by_size.items():
                selected[k] = selected.get(k, 0) + v
        for size in sorted(set(visited) | set(selected)):
            rows.append(
                f"{x}\t{c.params.max_depth}\t{c.params.eta:g}\t{size}\t"
                f"{visited.get(size, 0)}\t{selected.get(size, 0)}"
            )
    return "\n".join(rows) + "\n"


@dataclass
class BenchRow:
    """One benchmark measurement: a route at one pattern-size budget."""

    max_edges: int | None
    mode: str  # "search" or "materialize"
    status: str  # "ok" or "budget-exceeded"
    seconds_enumerate: float
    seconds_fit: float
    width: int | None
    visited: int

    def to_json(self) -> dict:
        return {
            "x": self.max_edges,
            "mode": self.mode,
            "status": self.status,
            "seconds_enumerate": self.seconds_enumerate,
            "seconds_fit": self.seconds_fit,
            "width": self.width,
            "visited": self.visited,
        }


def run_bench(
    dataset: Dataset,
    sizes: Sequence[int | None],
    params: FitParams,
    memory_budget: int | None = None,
    modes: Sequence[str] = ("search", "materialize"),
) -> list[BenchRow]:
    """Time full fits per pattern-size budget for both split-search routes.

    The materialized route separates enumeration time from fitting time and
    reports the matrix width; exceeding the memory budget yields a
    ``budget-exceeded`` row instead of an exception.
    """
    rows: list[BenchRow] = []
    for size in sizes:
        p = replace(params, max_edges=size)
        for mode in modes:
            if mode == "search":
                t0 = time.perf_counter()
                splitter = SplitSearcher(dataset.graphs, p.budget())
                model = fit(dataset.graphs, dataset.responses, p, splitter=splitter)
                rows.append(
                    BenchRow(
                        max_edges=size,
                        mode="search",
                        status="ok",
                        seconds_enumerate=0.0,
                        seconds_fit=time.perf_counter() - t0,
                        width=None,
                        visited=model.fit_stats.visited,
                    )
                )
            elif mode == "materialize":
                t0 = time.perf_counter()
                try:
                    splitter = MaterializedSplitter(
                        dataset.graphs, p.budget(), memory_budget_bytes=memory_budget
                    )
                except ResourceBudgetError:
                    rows.append(
                        BenchRow(
                            max_edges=size,
                            mode="materialize",
                            status="budget-exceeded",
                            seconds_enumerate=time.perf_counter() - t0,
                            seconds_fit=0.0,
                            width=None,
                            visited=0,
                        )
                    )
                    continue
                t1 = time.perf_counter()
                model = fit(dataset.graphs, dataset.responses, p, splitter=splitter)
                rows.append(
                    BenchRow(
                        max_edges=size,
                        mode="materialize",
                        status="ok",
                        seconds_enumerate=t1 - t0,
                        seconds_fit=time.perf_counter() - t1,
                        width=splitter.width,
                        visited=model.fit_stats.visited,
                    )
                )
            else:
                raise ValueError(f"unknown bench mode {mode!r}")
    return rows
