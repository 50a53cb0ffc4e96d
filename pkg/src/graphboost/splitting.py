"""Regression-tree split search over subgraph-indicator tests.

A split candidate is a pattern g: the node's graphs go left when they
contain g and right otherwise, and the candidate's objective is the summed
squared residual deviation (TSS) of the two sides.  ``find_best_split``
scans the canonical pattern enumeration forest with branch and bound: a
child pattern only ever shrinks the containing side, so a lower bound over
all subsets of the current containing side prunes whole subtrees.

Two independent routes to the same optimum live here on purpose.
:class:`SplitSearcher` walks the enumeration forest (optionally pruning);
:class:`MaterializedSplitter` scans pre-enumerated columns.  Both feed the
same residual slices through :func:`_parts_objective`, so agreeing models
agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graphs import CodeTuple, DfsCode, LabeledGraph
from .mining import (
    EnumBudget,
    EnumStats,
    OccurrenceSet,
    VisitDecision,
    enumerate_patterns,
    extend,
    roots,
)

class ResourceBudgetError(RuntimeError):
    """Raised when materializing the feature space would exceed a byte budget."""


@dataclass(frozen=True)
class TssStats:
    """Count, sum and sum of squares of a residual multiset.

    Enough to evaluate TSS, and mergeable, so partition objectives and
    bounds never re-scan raw values.
    """

    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    @staticmethod
    def from_values(values: np.ndarray) -> "TssStats":
        v = np.asarray(values, dtype=float)
        return TssStats(int(v.size), float(np.sum(v)), float(np.sum(v * v)))

    def merge(self, other: "TssStats") -> "TssStats":
        return TssStats(self.n + other.n, self.total + other.total, self.total_sq + other.total_sq)


def tss(stats: TssStats) -> float:
    """Halved total squared deviation from the mean; 0 for empty input.

    Evaluates 0.5 * (sum_sq - sum^2 / n).  The 1/2 keeps the quantity on
    the same scale as the squared-error loss whose second-order expansion
    it comes from; negative rounding residue is clamped to 0.
    """
    if stats.n == 0:
        return 0.0
    return max(0.0, 0.5 * (stats.total_sq - stats.total * stats.total / stats.n))


@dataclass(frozen=True)
class SplitCandidate:
    """One evaluated split: pattern, partition and objective.

    ``left_ids`` are the node's graphs containing the pattern, ascending;
    ``right_ids`` the rest.  A candidate is valid only when both sides are
    non-empty.
    """

    pattern: DfsCode
    objective: float
    left_ids: np.ndarray
    right_ids: np.ndarray

    @property
    def valid(self) -> bool:
        return len(self.left_ids) > 0 and len(self.right_ids) > 0


@dataclass
class SearchStats:
    """Counters from one split search."""

    visited: int = 0
    pruned_subtrees: int = 0
    max_size: int = 0
    visited_by_size: dict[int, int] = field(default_factory=dict)

    def count_visit(self, n_edges: int) -> None:
        self.visited += 1
        self.max_size = max(self.max_size, n_edges)
        self.visited_by_size[n_edges] = self.visited_by_size.get(n_edges, 0) + 1

    def merge(self, other: "SearchStats") -> None:
        self.visited += other.visited
        self.pruned_subtrees += other.pruned_subtrees
        self.max_size = max(self.max_size, other.max_size)
        for k, v in other.visited_by_size.items():
            self.visited_by_size[k] = self.visited_by_size.get(k, 0) + v


def _parts_objective(
    left_vals: np.ndarray, right_vals: np.ndarray
) -> tuple[float, TssStats, TssStats]:
    """Objective of a two-way partition given the residual slices."""
    ls = TssStats.from_values(left_vals)
    rs = TssStats.from_values(right_vals)
    return tss(ls) + tss(rs), ls, rs


def split_objective(
    node_ids: np.ndarray,
    residuals: np.ndarray,
    pattern: DfsCode,
    pattern_graph_ids: Iterable[int] | np.ndarray,
) -> SplitCandidate:
    """Evaluate the partition a pattern induces on a node's graphs.

    ``pattern_graph_ids`` may be an id collection or a boolean mask over all
    graphs; ``residuals`` is indexed by graph id.
    """
    node_ids = np.asarray(node_ids, dtype=np.intp)
    mask = np.asarray(pattern_graph_ids)
    if mask.dtype != np.bool_:
        m = np.zeros(len(residuals), dtype=bool)
        m[np.asarray(list(pattern_graph_ids), dtype=np.intp)] = True
        mask = m
    inside = mask[node_ids]
    left = node_ids[inside]
    right = node_ids[~inside]
    obj, _, _ = _parts_objective(residuals[left], residuals[right])
    return SplitCandidate(pattern=pattern, objective=obj, left_ids=left, right_ids=right)


def _tss_terms(n: np.ndarray, s: np.ndarray, q: np.ndarray) -> np.ndarray:
    safe_n = np.maximum(n, 1)
    return np.maximum(0.0, 0.5 * (q - s * s / safe_n)) * (n > 0)


def _bound_from_sorted(v: np.ndarray, d0_stats: TssStats) -> float:
    # v must already be sorted descending; see lower_bound for the contract
    n1 = v.size
    n0, s0, q0 = d0_stats.n, d0_stats.total, d0_stats.total_sq
    best = np.inf
    for picked in (v, v[::-1]):  # remove-largest-first and remove-smallest-first
        cs = np.concatenate(([0.0], np.cumsum(picked)))
        cq = np.concatenate(([0.0], np.cumsum(picked * picked)))
        k = np.arange(n1 + 1)  # how many residuals leave D1
        kept = _tss_terms(n1 - k, cs[n1] - cs, cq[n1] - cq)
        moved = _tss_terms(n0 + k, s0 + cs, q0 + cq)
        best = min(best, float(np.min(kept + moved)))
    return best


def lower_bound(d1_residuals: np.ndarray, d0_stats: TssStats) -> float:
    """Lower bound on the objective of every refinement of a split.

    Any pattern extending the current one keeps some subset S of the
    containing side D1 and pushes the rest to the other side D0.  The true
    objective of such a refinement is tss(S) + tss(D0 + (D1 - S)), and for a
    fixed subset size k the minimizing subsets keep either the k largest or
    the k smallest residuals (moving interior values can only help the side
    they leave and hurt the side they join less).  Minimizing over all k and
    both directions therefore bounds every descendant's objective from
    below, including k = 0 (pattern vanishes from the node) and k = |D1|
    (pattern keeps covering everything it covers now).
    """
    v = np.sort(np.asarray(d1_residuals, dtype=float))[::-1]
    return _bound_from_sorted(v, d0_stats)


class PatternCache:
    """Shared memo of the pattern enumeration forest over one graph list.

    Stores, per discovered pattern, the boolean containment mask over all
    graphs plus the expansion frontier (embeddings until a node's children
    are built, then the children).  Searches through the cache see exactly
    the results they would compute from scratch; only the work is shared.
    """

    def __init__(self, graphs: Sequence[LabeledGraph]):
        self._graphs = list(graphs)
        self.n_graphs = len(self._graphs)
        self._roots: list[tuple[DfsCode, _CacheNode]] | None = None
        self.expansions = 0

    def _mask(self, graph_ids: tuple[int, ...]) -> np.ndarray:
        m = np.zeros(self.n_graphs, dtype=bool)
        m[list(graph_ids)] = True
        return m

    def root_nodes(self) -> list[tuple[DfsCode, "_CacheNode"]]:
        if self._roots is None:
            self._roots = [
                (occ.code, _CacheNode(self._mask(occ.graph_ids), occ.code.n_edges, occ.embeddings))
                for occ in roots(self._graphs)
            ]
            self.expansions += 1
        return self._roots

    def children(self, code: DfsCode, node: "_CacheNode") -> list[tuple[DfsCode, "_CacheNode"]]:
        if node.children is None:
            occ = OccurrenceSet(
                code=code,
                graph_ids=tuple(int(i) for i in np.nonzero(node.mask)[0]),
                embeddings=node.embeddings,
            )
            node.children = [
                (c.code, _CacheNode(self._mask(c.graph_ids), c.code.n_edges, c.embeddings))
                for c in extend(occ, self._graphs, min_support=1)
            ]
            node.embeddings = None  # frontier moved one level down
            self.expansions += 1
        return node.children

    def graph_ids(self, code: DfsCode) -> tuple[int, ...]:
        """Sorted ids of the graphs containing the pattern (empty if none)."""
        level = self.root_nodes()
        node = None
        for k in range(1, code.n_edges + 1):
            prefix = code.tuples[:k]
            hit = None
            for c, cn in level:
                if c.tuples == prefix:
                    hit = cn
                    break
            if hit is None:
                return ()
            node = hit
            if k < code.n_edges:
                level = self.children(DfsCode(prefix), node)
        assert node is not None
        return tuple(int(i) for i in np.nonzero(node.mask)[0])


@dataclass
class _CacheNode:
    mask: np.ndarray
    size: int
    embeddings: tuple | None
    children: list[tuple[DfsCode, "_CacheNode"]] | None = None


class SplitSearcher:
    """Branch-and-bound split search over a shared :class:`PatternCache`.

    One searcher binds a budget and prune flag; many searchers may share a
    cache (the cache is budget-agnostic and stores children unfiltered).
    """

    def __init__(
        self,
        graphs: Sequence[LabeledGraph],
        budget: EnumBudget,
        cache: PatternCache | None = None,
        prune: bool = True,
    ):
        self.graphs = list(graphs)
        self.budget = budget
        self.cache = cache if cache is not None else PatternCache(self.graphs)
        self.prune = prune

    def find_best_split(
        self, node_ids: np.ndarray, residuals: np.ndarray
    ) -> tuple[SplitCandidate | None, SearchStats]:
        """Exact minimizer of the split objective over all patterns in budget.

        Returns (None, stats) when no valid split strictly improves on the
        unsplit node's TSS.  With pruning on, subtrees whose lower bound
        cannot beat the incumbent are skipped; the returned optimum is
        unchanged.
        """
        node_ids = np.asarray(node_ids, dtype=np.intp)
        residuals = np.asarray(residuals, dtype=float)
        stats = SearchStats()
        node_tss = tss(TssStats.from_values(residuals[node_ids]))
        mt = node_tss
        best: SplitCandidate | None = None
        n_node = len(node_ids)
        # ids ordered by descending residual: a mask slice of this array is
        # itself sorted, so per-pattern bounds need no per-visit sort
        by_res_desc = node_ids[np.argsort(-residuals[node_ids], kind="stable")]
        budget = self.budget
        cache = self.cache
        min_sup = budget.min_support
        stack: list[tuple[DfsCode, _CacheNode]] = []
        if budget.allows_size(1):
            for item in reversed(cache.root_nodes()):
                if min_sup <= 1 or int(np.count_nonzero(item[1].mask)) >= min_sup:
                    stack.append(item)
        while stack:
            code, cnode = stack.pop()
            stats.count_visit(cnode.size)
            inside = cnode.mask[node_ids]
            left = node_ids[inside]
            right = node_ids[~inside]
            obj, left_stats, right_stats = _parts_objective(residuals[left], residuals[right])
            if 0 < len(left) < n_node and obj < mt:
                mt = obj
                best = SplitCandidate(
                    pattern=code, objective=obj, left_ids=left, right_ids=right
                )
            if self.prune:
                d1_sorted = residuals[by_res_desc[cnode.mask[by_res_desc]]]
                # equality prunes: a subtree whose bound ties the incumbent
                # cannot strictly improve it, and updates are strict
                if _bound_from_sorted(d1_sorted, right_stats) >= mt:
                    stats.pruned_subtrees += 1
                    continue
            if not budget.allows_size(cnode.size + 1):
                continue
            for item in reversed(cache.children(code, cnode)):
                if min_sup <= 1 or int(np.count_nonzero(item[1].mask)) >= min_sup:
                    stack.append(item)
        return best, stats


def find_best_split(
    graphs: Sequence[LabeledGraph],
    node_ids: np.ndarray,
    residuals: np.ndarray,
    budget: EnumBudget,
    cache: PatternCache | None = None,
    prune: bool = True,
) -> tuple[SplitCandidate | None, SearchStats]:
    """One-shot form of :meth:`SplitSearcher.find_best_split`."""
    return SplitSearcher(graphs, budget, cache=cache, prune=prune).find_best_split(
        node_ids, residuals
    )


class MaterializedSplitter:
    """Split search over a fully enumerated pattern-indicator matrix.

    Enumerates every pattern within budget up front (in enumeration order)
    and answers split queries by scanning all columns.  Column order equals
    the searcher's visit order, so best-split ties resolve identically and
    the two routes produce the same trees.
    """

    def __init__(
        self,
        graphs: Sequence[LabeledGraph],
        budget: EnumBudget,
        memory_budget_bytes: int | None = None,
    ):
        self.graphs = list(graphs)
        self.budget = budget
        n = len(self.graphs)
        columns: list[tuple[DfsCode, np.ndarray]] = []

        def collect(occ: OccurrenceSet) -> VisitDecision:
            if memory_budget_bytes is not None and (len(columns) + 1) * n > memory_budget_bytes:
                raise ResourceBudgetError(
                    f"feature matrix would exceed {memory_budget_bytes} bytes "
                    f"at {len(columns) + 1} columns x {n} graphs"
                )
            mask = np.zeros(n, dtype=bool)
            mask[list(occ.graph_ids)] = True
            columns.append((occ.code, mask))
            return VisitDecision.CONTINUE

        self.enum_stats: EnumStats = enumerate_patterns(self.graphs, budget, collect)
        self.columns = columns

    @property
    def width(self) -> int:
        return len(self.columns)

    def find_best_split(
        self, node_ids: np.ndarray, residuals: np.ndarray
    ) -> tuple[SplitCandidate | None, SearchStats]:
        node_ids = np.asarray(node_ids, dtype=np.intp)
        residuals = np.asarray(residuals, dtype=float)
        stats = SearchStats()
        mt = tss(TssStats.from_values(residuals[node_ids]))
        best: SplitCandidate | None = None
        n_node = len(node_ids)
        for code, mask in self.columns:
            stats.count_visit(code.n_edges)
            inside = mask[node_ids]
            left = node_ids[inside]
            right = node_ids[~inside]
            obj, _, _ = _parts_objective(residuals[left], residuals[right])
            if 0 < len(left) < n_node and obj < mt:
                mt = obj
                best = SplitCandidate(
                    pattern=code, objective=obj, left_ids=left, right_ids=right
                )
        return best, stats
