"""Text formats for datasets and fitted models.

Datasets use a line-based format, one block per graph:

    t # <graph id> <response>
    v <vertex id> <node label>
    e <src> <dst> <edge label>

Graph and vertex ids must be sequential from 0 within their scope, labels
are whitespace-free tokens interned in first-appearance order, and ``%``
starts a comment line.  Models serialize to a small line-based format too;
all floats are written with 17 significant digits, so write/read/write is
byte-identical and reloaded models predict identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .boosting import BoostedModel, FitParams, RegressionTree, TreeNode
from .graphs import CodeError, DfsCode, LabeledGraph

MODEL_HEADER = "graphboost-model v1"


class GraphFormatError(ValueError):
    """Malformed dataset text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ModelFormatError(ValueError):
    """Malformed or unsupported model text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class Dataset:
    """Graphs with responses and the label dictionaries mapping id to name."""

    graphs: list[LabeledGraph]
    responses: np.ndarray
    node_label_names: list[str]
    edge_label_names: list[str]
    name: str = ""

    @property
    def n_graphs(self) -> int:
        return len(self.graphs)

    def subset(self, ids: Sequence[int], name: str = "") -> "Dataset":
        ids = list(ids)
        return Dataset(
            graphs=[self.graphs[i] for i in ids],
            responses=self.responses[np.asarray(ids, dtype=np.intp)],
            node_label_names=list(self.node_label_names),
            edge_label_names=list(self.edge_label_names),
            name=name or self.name,
        )


class _Interner:
    def __init__(self, base: Sequence[str] = ()):
        self.names = list(base)
        self._ids = {n: i for i, n in enumerate(self.names)}

    def intern(self, name: str) -> int:
        got = self._ids.get(name)
        if got is None:
            got = len(self.names)
            self.names.append(name)
            self._ids[name] = got
        return got


def parse_graphs(
    text: str,
    name: str = "",
    node_label_names: Sequence[str] = (),
    edge_label_names: Sequence[str] = (),
) -> Dataset:
    """Parse dataset text; label dictionaries may be pre-seeded.

    Pre-seeding keeps label ids aligned with a fitted model's dictionary
    when scoring new graphs; labels unseen in the base dictionaries get
    fresh ids after it.
    """
    nodes = _Interner(node_label_names)
    edges = _Interner(edge_label_names)
    graphs: list[LabeledGraph] = []
    responses: list[float] = []
    cur_labels: list[int] | None = None
    cur_edges: list[tuple[int, int, int]] = []
    cur_edge_keys: set[tuple[int, int]] = set()

    def flush() -> None:
        nonlocal cur_labels, cur_edges, cur_edge_keys
        if cur_labels is not None:
            graphs.append(LabeledGraph(tuple(cur_labels), tuple(cur_edges)))
            cur_labels = None
            cur_edges = []
            cur_edge_keys = set()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "t":
            if len(tok) != 4 or tok[1] != "#":
                raise GraphFormatError(line_no, f"bad graph header {line!r}")
            flush()
            if tok[2] != str(len(graphs)):
                raise GraphFormatError(
                    line_no, f"graph id {tok[2]} out of order, expected {len(graphs)}"
                )
            try:
                responses.append(float(tok[3]))
            except ValueError:
                raise GraphFormatError(line_no, f"bad response {tok[3]!r}") from None
            cur_labels = []
        elif kind == "v":
            if cur_labels is None:
                raise GraphFormatError(line_no, "vertex line before any graph header")
            if len(tok) != 3:
                raise GraphFormatError(line_no, f"bad vertex line {line!r}")
            if tok[1] != str(len(cur_labels)):
                raise GraphFormatError(
                    line_no, f"vertex id {tok[1]} out of order, expected {len(cur_labels)}"
                )
            cur_labels.append(nodes.intern(tok[2]))
        elif kind == "e":
            if cur_labels is None:
                raise GraphFormatError(line_no, "edge line before any graph header")
            if len(tok) != 4:
                raise GraphFormatError(line_no, f"bad edge line {line!r}")
            try:
                u, v = int(tok[1]), int(tok[2])
            except ValueError:
                raise GraphFormatError(line_no, f"bad edge endpoints in {line!r}") from None
            if u == v:
                raise GraphFormatError(line_no, f"self loop at vertex {u}")
            if not (0 <= u < len(cur_labels) and 0 <= v < len(cur_labels)):
                raise GraphFormatError(line_no, f"edge ({u}, {v}) references undeclared vertex")
            key = (u, v) if u < v else (v, u)
            if key in cur_edge_keys:
                raise GraphFormatError(line_no, f"duplicate edge between {u} and {v}")
            cur_edge_keys.add(key)
            cur_edges.append((u, v, edges.intern(tok[3])))
        else:
            raise GraphFormatError(line_no, f"unknown line kind {kind!r}")
    flush()
    return Dataset(
        graphs=graphs,
        responses=np.asarray(responses, dtype=float),
        node_label_names=nodes.names,
        edge_label_names=edges.names,
        name=name,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_response(y: float) -> str:
    return str(int(y)) if float(y).is_integer() else _fmt(y)


def write_graphs(dataset: Dataset) -> str:
    lines: list[str] = []
    for gid, (g, y) in enumerate(zip(dataset.graphs, dataset.responses)):
        lines.append(f"t # {gid} {_fmt_response(y)}")
        for vid, lab in enumerate(g.node_labels):
            lines.append(f"v {vid} {dataset.node_label_names[lab]}")
        for u, v, lab in g.edges:
            lines.append(f"e {u} {v} {dataset.edge_label_names[lab]}")
    return "\n".join(lines) + "\n"


def _params_line(params: FitParams, n_trees: int) -> str:
    x = "inf" if params.max_edges is None else str(params.max_edges)
    return (
        f"params x={x} d={params.max_depth} k={n_trees} "
        f"min_support={params.min_support} min_leaf={params.min_leaf} "
        f"seed={params.seed} loss={params.loss}"
    )


def write_model(model: BoostedModel) -> str:
    """Serialize a fitted model; floats keep full double precision."""
    lines = [
        MODEL_HEADER,
        f"t0 {_fmt(model.t0)}",
        f"eta {_fmt(model.eta)}",
        _params_line(model.params, len(model.trees)),
        "node_labels " + " ".join(model.node_label_names),
        "edge_labels " + " ".join(model.edge_label_names),
    ]
    for ti, tree in enumerate(model.trees):
        lines.append(f"tree {ti} {len(tree.nodes)}")
        for ni, node in enumerate(tree.nodes):
            if node.is_leaf:
                lines.append(f"{ni} leaf {_fmt(node.value)} n={node.n_train}")
            else:
                pat = " ".join(",".join(str(f) for f in t) for t in node.pattern.tuples)
                lines.append(
                    f"{ni} split {node.left} {node.right} g={_fmt(node.gain)} "
                    f"n={node.n_train} {pat}"
                )
    return "\n".join(lines) + "\n"


def read_model(text: str) -> BoostedModel:
    """Parse model text back into a :class:`BoostedModel`."""
    lines = text.splitlines()

    def need(idx: int, what: str) -> str:
        if idx >= len(lines):
            raise ModelFormatError(len(lines) + 1, f"truncated file, expected {what}")
        return lines[idx]

    if need(0, "header").strip() != MODEL_HEADER:
        raise ModelFormatError(1, f"unsupported model header {lines[0]!r}")

    def keyed_float(idx: int, key: str) -> float:
        tok = need(idx, key).split()
        if len(tok) != 2 or tok[0] != key:
            raise ModelFormatError(idx + 1, f"expected '{key} <float>'")
        try:
            return float(tok[1])
        except ValueError:
            raise ModelFormatError(idx + 1, f"bad float {tok[1]!r}") from None

    t0 = keyed_float(1, "t0")
    eta = keyed_float(2, "eta")

    tok = need(3, "params").split()
    if tok[0] != "params":
        raise ModelFormatError(4, "expected params line")
    kv = {}
    for item in tok[1:]:
        if "=" not in item:
            raise ModelFormatError(4, f"bad params item {item!r}")
        k, v = item.split("=", 1)
        kv[k] = v
    try:
        params = FitParams(
            n_trees=int(kv["k"]),
            max_depth=int(kv["d"]),
            eta=eta,
            max_edges=None if kv["x"] == "inf" else int(kv["x"]),
            min_support=int(kv["min_support"]),
            min_leaf=int(kv["min_leaf"]),
            loss=kv["loss"],
            seed=int(kv["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(4, f"bad params line: {exc}") from None

    def labels_line(idx: int, key: str) -> tuple[str, ...]:
        tok = need(idx, key).split()
        if not tok or tok[0] != key:
            raise ModelFormatError(idx + 1, f"expected {key} line")
        return tuple(tok[1:])

    node_names = labels_line(4, "node_labels")
    edge_names = labels_line(5, "edge_labels")

    trees: list[RegressionTree] = []
    idx = 6
    for ti in range(params.n_trees):
        tok = need(idx, f"tree {ti}").split()
        if len(tok) != 3 or tok[0] != "tree" or tok[1] != str(ti):
            raise ModelFormatError(idx + 1, f"expected 'tree {ti} <n_nodes>'")
        try:
            n_nodes = int(tok[2])
        except ValueError:
            raise ModelFormatError(idx + 1, f"bad node count {tok[2]!r}") from None
        idx += 1
        nodes: list[TreeNode] = []
        for ni in range(n_nodes):
            line_no = idx + 1
            tok = need(idx, f"node {ni} of tree {ti}").split()
            idx += 1
            if len(tok) < 3 or tok[0] != str(ni):
                raise ModelFormatError(line_no, f"expected node {ni}, got {' '.join(tok)!r}")
            try:
                if tok[1] == "leaf":
                    value = float(tok[2])
                    n_train = int(tok[3].removeprefix("n=")) if len(tok) > 3 else 0
                    nodes.append(TreeNode(value=value, n_train=n_train))
                elif tok[1] == "split":
                    left, right = int(tok[2]), int(tok[3])
                    gain = float(tok[4].removeprefix("g="))
                    n_train = int(tok[5].removeprefix("n="))
                    tuples = tuple(
                        tuple(int(x) for x in part.split(",")) for part in tok[6:]
                    )
                    if any(len(t) != 5 for t in tuples) or not tuples:
                        raise ValueError("pattern tuples must have five fields")
                    if not (0 <= left < n_nodes and 0 <= right < n_nodes):
                        raise ValueError(f"child index out of range in node {ni}")
                    nodes.append(
                        TreeNode(
                            pattern=DfsCode(tuples),
                            left=left,
                            right=right,
                            gain=gain,
                            n_train=n_train,
                        )
                    )
                else:
                    raise ValueError(f"unknown node kind {tok[1]!r}")
            except (ValueError, IndexError, CodeError) as exc:
                raise ModelFormatError(line_no, f"bad node line: {exc}") from None
        trees.append(RegressionTree(nodes))
    for extra in range(idx, len(lines)):
        if lines[extra].strip():
            raise ModelFormatError(extra + 1, f"unexpected trailing content {lines[extra]!r}")
    return BoostedModel(
        t0=t0,
        eta=eta,
        trees=trees,
        params=params,
        node_label_names=node_names,
        edge_label_names=edge_names,
    )
