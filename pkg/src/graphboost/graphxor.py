"""Synthetic two-part graph classification benchmark.

Eighteen three-node label paths over {A, B, C} are split into two fixed
groups of nine.  A benchmark graph joins two parts through a fresh hub node
labeled D: the hub connects to one attachment vertex in each part, giving
seven nodes and six edges with a single uniform edge label.  The response
is +1 when the two parts come from different groups and -1 otherwise, so no
single part (and no single-edge test) separates the classes; the signal is
a parity over part-group membership.

Parts are rooted: a part with a palindromic label triple has two
distinguishable attachment vertices, a non-palindromic one has three.
That yields 22 + 23 = 45 rooted parts and 45 * 46 / 2 = 1035 unordered
pairs with repetition: 506 positives and 529 negatives.  Generation
re-derives these counts and fails loudly on any mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .dataio import Dataset
from .graphs import LabeledGraph, canonical_code

GROUP1 = ("AAA", "CCC", "ABB", "BAB", "BCC", "CBC", "ACC", "CAC", "ACB")
GROUP2 = ("BBB", "AAB", "ABA", "BBC", "BCB", "AAC", "ACA", "ABC", "BAC")

NODE_LABEL_NAMES = ["A", "B", "C", "D"]
EDGE_LABEL_NAMES = ["-"]

N_GRAPHS = 1035
N_POSITIVE = 506
N_NEGATIVE = 529


class GraphXorError(RuntimeError):
    """Internal consistency check of the generator failed."""


@dataclass(frozen=True)
class PartSpec:
    """A rooted part: a label triple, its group, and the attachment vertex."""

    triple: str
    group: int
    attach: int


def part_table() -> list[PartSpec]:
    """All 45 rooted parts in a fixed deterministic order."""
    parts: list[PartSpec] = []
    for group, triples in ((1, GROUP1), (2, GROUP2)):
        for triple in triples:
            n_attach = 2 if triple[0] == triple[2] else 3
            for attach in range(n_attach):
                parts.append(PartSpec(triple, group, attach))
    return parts


_LABEL_ID = {name: i for i, name in enumerate(NODE_LABEL_NAMES)}


def _join(a: PartSpec, b: PartSpec) -> LabeledGraph:
    # vertices 0-2: part a, 3-5: part b, 6: hub
    labels = tuple(
        [_LABEL_ID[c] for c in a.triple] + [_LABEL_ID[c] for c in b.triple] + [_LABEL_ID["D"]]
    )
    edges = (
        (0, 1, 0),
        (1, 2, 0),
        (3, 4, 0),
        (4, 5, 0),
        (6, a.attach, 0),
        (6, 3 + b.attach, 0),
    )
    return LabeledGraph(labels, edges)


def generate() -> Dataset:
    """Build the full benchmark: all unordered part pairs, with self checks."""
    parts = part_table()
    if len(parts) != 45:
        raise GraphXorError(f"expected 45 rooted parts, built {len(parts)}")
    graphs: list[LabeledGraph] = []
    responses: list[float] = []
    for a, b in combinations_with_replacement(parts, 2):
        graphs.append(_join(a, b))
        responses.append(1.0 if a.group != b.group else -1.0)
    y = np.asarray(responses)
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y < 0))
    if len(graphs) != N_GRAPHS or n_pos != N_POSITIVE or n_neg != N_NEGATIVE:
        raise GraphXorError(
            f"expected {N_GRAPHS} graphs ({N_POSITIVE} positive, {N_NEGATIVE} negative), "
            f"built {len(graphs)} ({n_pos} positive, {n_neg} negative)"
        )
    distinct = {canonical_code(g) for g in graphs}
    if len(distinct) != len(graphs):
        raise GraphXorError(
            f"rooted-part pairs collided: {len(graphs)} graphs, "
            f"{len(distinct)} isomorphism classes"
        )
    return Dataset(
        graphs=graphs,
        responses=y,
        node_label_names=list(NODE_LABEL_NAMES),
        edge_label_names=list(EDGE_LABEL_NAMES),
        name="graph-xor",
    )
