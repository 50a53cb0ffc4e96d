"""Undirected labeled graphs, canonical DFS codes, and subgraph matching.

A pattern is a connected graph with at least one edge.  Its canonical form
is the minimum DFS code: the lexicographically smallest sequence of edge
tuples ``(i, j, label_i, label_edge, label_j)`` over all depth-first
traversals, under the edge order defined by :func:`edge_tuple_less`.
Two patterns are isomorphic exactly when their minimum DFS codes are equal,
so codes double as dictionary keys for pattern sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

EdgeTuple = tuple[int, int, int]
CodeTuple = tuple[int, int, int, int, int]


class GraphError(ValueError):
    """Raised for structurally invalid graphs (bad endpoints, self loops, ...)."""


class PatternError(ValueError):
    """Raised when a graph cannot act as a pattern (empty or disconnected)."""


class CodeError(ValueError):
    """Raised for sequences that are not well-formed DFS codes."""


@dataclass(frozen=True)
class LabeledGraph:
    """Immutable undirected graph with integer node and edge labels.

    Edges are stored as ``(u, v, label)`` with ``u < v`` and sorted, so two
    equal graphs compare and hash equal regardless of construction order.
    Self loops and parallel edges are rejected.
    """

    node_labels: tuple[int, ...]
    edges: tuple[EdgeTuple, ...]

    def __post_init__(self) -> None:
        n = len(self.node_labels)
        norm = []
        for u, v, lab in self.edges:
            if u == v:
                raise GraphError(f"self loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references undeclared vertex")
            if u > v:
                u, v = v, u
            norm.append((u, v, lab))
        norm.sort()
        for a, b in zip(norm, norm[1:]):
            if a[:2] == b[:2]:
                raise GraphError(f"parallel edge between {a[0]} and {a[1]}")
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-vertex tuple of ``(neighbor, edge_label)`` pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for u, v, lab in self.edges:
            adj[u].append((v, lab))
            adj[v].append((u, lab))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def _edge_label_map(self) -> dict[tuple[int, int], int]:
        return {(u, v): lab for u, v, lab in self.edges}

    def edge_label(self, u: int, v: int) -> int | None:
        """Label of the edge between u and v, or None if absent."""
        if u > v:
            u, v = v, u
        return self._edge_label_map.get((u, v))

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def _incident_label_counts(self) -> tuple[dict[tuple[int, int], int], ...]:
        # per vertex: multiset of (edge label, neighbor label) on incident edges
        counts: list[dict[tuple[int, int], int]] = [{} for _ in range(self.n_nodes)]
        for u, v, lab in self.edges:
            ku = (lab, self.node_labels[v])
            kv = (lab, self.node_labels[u])
            counts[u][ku] = counts[u].get(ku, 0) + 1
            counts[v][kv] = counts[v].get(kv, 0) + 1
        return tuple(counts)

    def is_connected(self) -> bool:
        if self.n_nodes == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w, _ in self.adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_nodes


@dataclass(frozen=True)
class DfsCode:
    """A well-formed DFS code: a sequence of (i, j, L_i, L_e, L_j) tuples.

    Well-formed means the sequence describes an actual depth-first
    traversal: the first tuple is a forward edge (0, 1, ...), every forward
    edge discovers vertex ``max+1`` from a vertex on the rightmost path, and
    every backward edge runs from the rightmost vertex to an ancestor on the
    rightmost path.  Vertex labels must be consistent across tuples.
    Construction raises :class:`CodeError` otherwise.
    """

    tuples: tuple[CodeTuple, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tuples", tuple(tuple(t) for t in self.tuples))
        _validate_code(self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[CodeTuple]:
        return iter(self.tuples)

    def __getitem__(self, idx):
        return self.tuples[idx]

    @property
    def n_edges(self) -> int:
        return len(self.tuples)

    @property
    def n_nodes(self) -> int:
        return 1 + max(max(t[0], t[1]) for t in self.tuples)

    def child(self, ext: CodeTuple) -> "DfsCode":
        """Code obtained by appending one extension tuple."""
        return DfsCode(self.tuples + (tuple(ext),))

    def to_graph(self) -> LabeledGraph:
        """Materialize the pattern graph the code describes."""
        labels = [0] * self.n_nodes
        edges = []
        for i, j, li, le, lj in self.tuples:
            labels[i] = li
            labels[j] = lj
            edges.append((i, j, le))
        return LabeledGraph(tuple(labels), tuple(edges))


def _validate_code(tuples: Sequence[CodeTuple]) -> None:
    if not tuples:
        raise CodeError("empty code")
    for t in tuples:
        if len(t) != 5:
            raise CodeError(f"tuple {t!r} does not have five fields")
    first = tuples[0]
    if (first[0], first[1]) != (0, 1):
        raise CodeError(f"first tuple must be (0, 1, ...), got {first!r}")
    labels = {0: first[2], 1: first[4]}
    rmpath = [0, 1]  # vertex ids root..rightmost
    max_v = 1
    seen_edges = {(0, 1)}
    last_backward = {}  # rightmost vertex -> largest backward target so far
    for t in tuples[1:]:
        i, j, li, le, lj = t
        if i < j:  # forward: discovers a new vertex from the rightmost path
            if j != max_v + 1:
                raise CodeError(f"forward edge {t!r} skips vertex ids")
            if i not in rmpath:
                raise CodeError(f"forward edge {t!r} does not start on rightmost path")
            if labels[i] != li:
                raise CodeError(f"tuple {t!r} relabels vertex {i}")
            labels[j] = lj
            max_v = j
            rmpath = rmpath[: rmpath.index(i) + 1] + [j]
            seen_edges.add((i, j))
            last_backward.pop(j, None)
        elif i > j:  # backward: from the rightmost vertex to an ancestor
            if i != rmpath[-1]:
                raise CodeError(f"backward edge {t!r} does not start at rightmost vertex")
            if j not in rmpath[:-1]:
                raise CodeError(f"backward edge {t!r} does not end on rightmost path")
            if (j, i) in seen_edges:
                raise CodeError(f"backward edge {t!r} repeats an edge")
            if j <= last_backward.get(i, -1):
                raise CodeError(f"backward edge {t!r} breaks ascending-target order")
            if labels[i] != li or labels[j] != lj:
                raise CodeError(f"tuple {t!r} relabels a vertex")
            seen_edges.add((j, i))
            last_backward[i] = j
        else:
            raise CodeError(f"self loop in tuple {t!r}")


def edge_tuple_less(a: CodeTuple, b: CodeTuple) -> bool:
    """DFS-code edge order: True when tuple ``a`` sorts strictly before ``b``.

    Position pairs (i, j) are ranked first; forward and backward edges
    interleave according to how deep they sit relative to each other.  Equal
    positions fall back to the label triple.
    """
    ai, aj = a[0], a[1]
    bi, bj = b[0], b[1]
    if (ai, aj) == (bi, bj):
        return (a[2], a[3], a[4]) < (b[2], b[3], b[4])
    a_fwd = ai < aj
    b_fwd = bi < bj
    if a_fwd and b_fwd:
        return aj < bj or (aj == bj and ai > bi)
    if not a_fwd and not b_fwd:
        return ai < bi or (ai == bi and aj < bj)
    if a_fwd:
        return aj <= bi
    return ai < bj


def code_less(a: Sequence[CodeTuple], b: Sequence[CodeTuple]) -> bool:
    """Lexicographic order on codes under :func:`edge_tuple_less`.

    A proper prefix sorts before any longer code it prefixes.
    """
    for ta, tb in zip(a, b):
        if ta == tb:
            continue
        return edge_tuple_less(ta, tb)
    return len(a) < len(b)


def rightmost_path(tuples: Sequence[CodeTuple]) -> list[int]:
    """Vertex ids on the rightmost path, root first.

    The rightmost path is the chain of forward edges ending at the vertex
    discovered last.
    """
    forward = []
    cur = None
    for t in reversed(tuples):
        i, j = t[0], t[1]
        if i < j and (cur is None or j == cur):
            forward.append((i, j))
            cur = i
    path = [forward[-1][0]]
    for i, j in reversed(forward):
        path.append(j)
    return path


# ---------------------------------------------------------------------------
# Minimum DFS code
# ---------------------------------------------------------------------------
#
# The minimum code is built greedily, one edge at a time, while tracking all
# partial traversals (projections) that realize the prefix built so far.
# At each step every projection proposes its valid extensions; the smallest
# extension under the DFS-code edge order wins and only the projections that
# realize it survive.  Backward extensions from the rightmost vertex always
# precede forward extensions, and forward extensions from deeper rightmost
# path vertices precede shallower ones, so picking the minimum next tuple
# can never strand a cheaper completion: any traversal that deviates from
# the greedy choice is already lexicographically larger at that position.


def _extension_key(t: CodeTuple) -> tuple:
    # Orders candidate extensions of one shared prefix.  All candidates go
    # out of the same rightmost vertex (backward) or rightmost path
    # (forward), so position fields plus the variable labels decide.
    i, j, _, le, lj = t
    if i > j:  # backward: smaller target first, then edge label
        return (0, j, le)
    return (1, -i, le, lj)  # forward: deeper source first, then labels


def _min_code_extend(
    graph: LabeledGraph,
    code: list[CodeTuple],
    projections: list[tuple[tuple[int, ...], frozenset]],
) -> dict[CodeTuple, list[tuple[tuple[int, ...], frozenset]]]:
    """All one-edge extensions of ``code`` over the given projections.

    A projection is ``(vmap, used)``: the graph vertex assigned to each code
    vertex, and the set of graph edges already traversed.
    """
    labels = graph.node_labels
    path = rightmost_path(code)
    rmv = path[-1]
    last_b = -1
    for t in code:
        if t[0] == rmv and t[0] > t[1]:
            last_b = t[1]
    back_targets = [v for v in path[:-1] if v > last_b]
    out: dict[CodeTuple, list[tuple[tuple[int, ...], frozenset]]] = {}
    nv = len(projections[0][0])
    for vmap, used in projections:
        g_rm = vmap[rmv]
        for j in back_targets:
            g_t = vmap[j]
            lab = graph.edge_label(g_rm, g_t)
            key = (g_rm, g_t) if g_rm < g_t else (g_t, g_rm)
            if lab is not None and key not in used:
                ext = (rmv, j, labels[g_rm], lab, labels[g_t])
                out.setdefault(ext, []).append((vmap, used | {key}))
        mapped = set(vmap)
        for pv in path:
            g_v = vmap[pv]
            for nbr, lab in graph.adjacency[g_v]:
                if nbr in mapped:
                    continue
                ext = (pv, nv, labels[g_v], lab, labels[nbr])
                key = (g_v, nbr) if g_v < nbr else (nbr, g_v)
                out.setdefault(ext, []).append((vmap + (nbr,), used | {key}))
    return out


def _root_projections(
    graph: LabeledGraph,
) -> tuple[CodeTuple, list[tuple[tuple[int, ...], frozenset]]]:
    best: CodeTuple | None = None
    projs: list[tuple[tuple[int, ...], frozenset]] = []
    labels = graph.node_labels
    for u, v, lab in graph.edges:
        for a, b in ((u, v), (v, u)):
            t = (0, 1, labels[a], lab, labels[b])
            if best is None or (t[2], t[3], t[4]) < (best[2], best[3], best[4]):
                best = t
                projs = []
            if t == best:
                projs.append(((a, b), frozenset([(u, v)])))
    assert best is not None
    return best, projs


def _greedy_min_code(
    graph: LabeledGraph, compare_to: Sequence[CodeTuple] | None = None
) -> list[CodeTuple] | None:
    """Minimum DFS code of a connected graph with >= 1 edge.

    With ``compare_to`` given, stop and return None as soon as the greedy
    minimum deviates from it (used for the minimality test, which never
    needs the full code once a smaller tuple shows up).
    """
    first, projs = _root_projections(graph)
    if compare_to is not None and first != tuple(compare_to[0]):
        return None
    code = [first]
    while len(code) < graph.n_edges:
        exts = _min_code_extend(graph, code, projs)
        best = min(exts, key=_extension_key)
        if compare_to is not None and best != tuple(compare_to[len(code)]):
            return None
        code.append(best)
        projs = exts[best]
    return code


def _require_pattern(graph: LabeledGraph) -> None:
    if graph.n_edges == 0:
        raise PatternError("pattern needs at least one edge")
    if not graph.is_connected():
        raise PatternError("pattern must be connected")


def canonical_code(graph: LabeledGraph) -> DfsCode:
    """Minimum DFS code of a connected graph with at least one edge."""
    _require_pattern(graph)
    code = _greedy_min_code(graph)
    assert code is not None
    return DfsCode(tuple(code))


def is_minimal(code: DfsCode) -> bool:
    """Whether a well-formed DFS code is the minimum code of its graph."""
    graph = code.to_graph()
    return _greedy_min_code(graph, compare_to=code.tuples) is not None


# ---------------------------------------------------------------------------
# Subgraph isomorphism
# ---------------------------------------------------------------------------


def _pattern_order(pattern: LabeledGraph) -> list[tuple[int, int]]:
    # visit order for matching: DFS from vertex 0; each entry is
    # (pattern vertex, already-visited anchor vertex or -1 for the root)
    order = [(0, -1)]
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w, _ in pattern.adjacency[v]:
            if w not in seen:
                seen.add(w)
                order.append((w, v))
                stack.append(w)
    return order


def contains(graph: LabeledGraph, pattern: LabeledGraph) -> bool:
    """Non-induced subgraph isomorphism test: does ``pattern`` embed in ``graph``?

    Every pattern edge must map to a graph edge with matching node and edge
    labels under an injective vertex map; extra graph edges are allowed.
    """
    _require_pattern(pattern)
    if pattern.n_nodes > graph.n_nodes or pattern.n_edges > graph.n_edges:
        return False
    order = _pattern_order(pattern)
    g_labels = graph.node_labels
    p_labels = pattern.node_labels
    g_counts = graph._incident_label_counts
    p_counts = pattern._incident_label_counts

    def feasible(pv: int, gv: int) -> bool:
        if p_labels[pv] != g_labels[gv]:
            return False
        if pattern.degree(pv) > graph.degree(gv):
            return False
        gc = g_counts[gv]
        for key, cnt in p_counts[pv].items():
            if gc.get(key, 0) < cnt:
                return False
        return True

    assign: dict[int, int] = {}
    used: set[int] = set()

    def backtrack(pos: int) -> bool:
        if pos == len(order):
            return True
        pv, anchor = order[pos]
        if anchor < 0:
            candidates = range(graph.n_nodes)
        else:
            candidates = [w for w, _ in graph.adjacency[assign[anchor]]]
        for gv in candidates:
            if gv in used or not feasible(pv, gv):
                continue
            ok = True
            for pw, lab in pattern.adjacency[pv]:
                if pw in assign and graph.edge_label(gv, assign[pw]) != lab:
                    ok = False
                    break
            if not ok:
                continue
            assign[pv] = gv
            used.add(gv)
            if backtrack(pos + 1):
                return True
            del assign[pv]
            used.remove(gv)
        return False

    return backtrack(0)
