"""Canonical enumeration of connected subgraph patterns across a graph list.

Patterns are enumerated as minimum DFS codes and grow one edge at a time by
rightmost-path extension, so every pattern in the search forest is visited
exactly once and each node's children extend its code by a single tuple.
Occurrence lists carry every embedding of a pattern, stored as linked
chains of oriented edge instances to share prefixes between siblings.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .graphs import (
    CodeTuple,
    DfsCode,
    LabeledGraph,
    is_minimal,
    rightmost_path,
)


class VisitDecision(enum.Enum):
    """Visitor verdict for one enumerated pattern."""

    CONTINUE = "continue"
    PRUNE_CHILDREN = "prune_children"
    STOP = "stop"


@dataclass(frozen=True)
class EnumBudget:
    """Limits for an enumeration walk.

    ``max_edges`` of None means unbounded pattern size; ``min_support``
    counts distinct graphs containing the pattern (occurrences within one
    graph count once).
    """

    max_edges: int | None = None
    min_support: int = 1

    def __post_init__(self) -> None:
        if self.max_edges is not None and self.max_edges < 1:
            raise ValueError("max_edges must be >= 1 or None")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")

    def allows_size(self, n_edges: int) -> bool:
        return self.max_edges is None or n_edges <= self.max_edges


@dataclass
class EnumStats:
    """Counters collected during one enumeration or search walk."""

    visited: int = 0
    pruned_subtrees: int = 0
    max_size: int = 0
    visited_by_size: dict[int, int] = field(default_factory=dict)

    def count_visit(self, n_edges: int) -> None:
        self.visited += 1
        self.max_size = max(self.max_size, n_edges)
        self.visited_by_size[n_edges] = self.visited_by_size.get(n_edges, 0) + 1


# An embedding is a linked chain of oriented edge instances, one per code
# tuple: (previous chain or None, source graph vertex, target graph vertex).
# Chains share prefixes, so extending an occurrence list allocates one cell
# per new embedding.
_Chain = tuple


@dataclass(frozen=True)
class OccurrenceSet:
    """A pattern together with everywhere it embeds.

    ``graph_ids`` is the sorted tuple of graphs containing the pattern;
    ``embeddings`` holds (graph id, chain) pairs covering every embedding,
    which extension consumes to build the children's occurrence lists.
    """

    code: DfsCode
    graph_ids: tuple[int, ...]
    embeddings: tuple[tuple[int, _Chain], ...]

    @property
    def support(self) -> int:
        return len(self.graph_ids)


def _replay(chain: _Chain, tuples: Sequence[CodeTuple]) -> tuple[list[int], set]:
    """Recover the vertex map and used-edge set of one embedding."""
    steps: list[_Chain] = []
    c = chain
    while c is not None:
        steps.append(c)
        c = c[0]
    steps.reverse()
    vmap: list[int] = [-1] * (1 + max(max(t[0], t[1]) for t in tuples))
    used = set()
    for (i, j, _li, _le, _lj), (_, gu, gv) in zip(tuples, steps):
        if i < j:
            vmap[i] = gu
            vmap[j] = gv
        used.add((gu, gv) if gu < gv else (gv, gu))
    return vmap, used


def roots(graphs: Sequence[LabeledGraph]) -> list[OccurrenceSet]:
    """All single-edge patterns with their occurrence lists, sorted by code."""
    groups: dict[CodeTuple, list[tuple[int, _Chain]]] = {}
    ids: dict[CodeTuple, set[int]] = {}
    for gid, g in enumerate(graphs):
        labels = g.node_labels
        for u, v, lab in g.edges:
            for a, b in ((u, v), (v, u)):
                if labels[a] > labels[b]:
                    continue
                t = (0, 1, labels[a], lab, labels[b])
                groups.setdefault(t, []).append((gid, (None, a, b)))
                ids.setdefault(t, set()).add(gid)
    out = []
    for t in sorted(groups):
        out.append(
            OccurrenceSet(
                code=DfsCode((t,)),
                graph_ids=tuple(sorted(ids[t])),
                embeddings=tuple(groups[t]),
            )
        )
    return out


def extend(
    parent: OccurrenceSet,
    graphs: Sequence[LabeledGraph],
    min_support: int = 1,
) -> list[OccurrenceSet]:
    """Children of ``parent`` in the enumeration forest, sorted by extension tuple.

    Grows every embedding by one rightmost-path extension, groups the
    results by extension tuple, and keeps the groups whose appended code is
    minimal (each isomorphism class survives in exactly one branch) and
    whose support clears ``min_support``.
    """
    tuples = parent.code.tuples
    path = rightmost_path(tuples)
    rmv = path[-1]
    last_b = -1
    for t in tuples:
        if t[0] == rmv and t[0] > t[1]:
            last_b = t[1]
    back_targets = [v for v in path[:-1] if v > last_b]
    nv = parent.code.n_nodes
    groups: dict[CodeTuple, list[tuple[int, _Chain]]] = {}
    for gid, chain in parent.embeddings:
        g = graphs[gid]
        labels = g.node_labels
        vmap, used = _replay(chain, tuples)
        g_rm = vmap[rmv]
        for j in back_targets:
            g_t = vmap[j]
            lab = g.edge_label(g_rm, g_t)
            if lab is None:
                continue
            key = (g_rm, g_t) if g_rm < g_t else (g_t, g_rm)
            if key in used:
                continue
            ext = (rmv, j, labels[g_rm], lab, labels[g_t])
            groups.setdefault(ext, []).append((gid, (chain, g_rm, g_t)))
        mapped = set(vmap)
        for pv in path:
            g_v = vmap[pv]
            for nbr, lab in g.adjacency[g_v]:
                if nbr in mapped:
                    continue
                ext = (pv, nv, labels[g_v], lab, labels[nbr])
                groups.setdefault(ext, []).append((gid, (chain, g_v, nbr)))
    out = []
    for ext in sorted(groups):
        embs = groups[ext]
        gids = tuple(sorted({gid for gid, _ in embs}))
        if len(gids) < min_support:
            continue
        child = parent.code.child(ext)
        if not is_minimal(child):
            continue
        out.append(OccurrenceSet(code=child, graph_ids=gids, embeddings=tuple(embs)))
    return out


class _StopWalk(Exception):
    pass


def enumerate_patterns(
    graphs: Sequence[LabeledGraph],
    budget: EnumBudget,
    visitor: Callable[[OccurrenceSet], VisitDecision],
) -> EnumStats:
    """Depth-first walk over every pattern within budget, in code order.

    The visitor sees each pattern exactly once.  PRUNE_CHILDREN skips the
    subtree below the current pattern; STOP abandons the whole walk.
    Patterns below ``min_support`` are skipped together with their subtrees
    (support never grows along an extension).
    """
    stats = EnumStats()

    def walk(occ: OccurrenceSet) -> None:
        stats.count_visit(occ.code.n_edges)
        decision = visitor(occ)
        if decision is VisitDecision.STOP:
            raise _StopWalk
        if decision is VisitDecision.PRUNE_CHILDREN:
            stats.pruned_subtrees += 1
            return
        if not budget.allows_size(occ.code.n_edges + 1):
            return
        for child in extend(occ, graphs, budget.min_support):
            walk(child)

    try:
        for root in roots(graphs):
            if root.support < budget.min_support:
                continue
            if not budget.allows_size(1):
                continue
            walk(root)
    except _StopWalk:
        pass
    return stats
