"""Dataset and model text formats: round trips and error reporting."""

import numpy as np
import pytest

from graphboost import (
    Dataset,
    FitParams,
    GraphFormatError,
    ModelFormatError,
    fit,
    parse_graphs,
    read_model,
    write_graphs,
    write_model,
)
from graphboost.boosting import RegressionTree, TreeNode, BoostedModel
from graphboost.graphs import DfsCode

from conftest import path_graph, random_graph_set

SIMPLE = """\
t # 0 1
v 0 C
v 1 C
v 2 O
e 0 1 single
e 1 2 double
t # 1 -1
v 0 O
v 1 C
e 0 1 single
"""


# --- dataset parsing ---


def test_parse_simple_dataset():
    ds = parse_graphs(SIMPLE, name="toy")
    assert ds.name == "toy"
    assert ds.n_graphs == 2
    assert np.array_equal(ds.responses, [1.0, -1.0])
    # labels intern in first-appearance order
    assert ds.node_label_names == ["C", "O"]
    assert ds.edge_label_names == ["single", "double"]
    g0, g1 = ds.graphs
    assert g0.node_labels == (0, 0, 1)
    assert g0.edges == ((0, 1, 0), (1, 2, 1))
    assert g1.node_labels == (1, 0)
    assert g1.edges == ((0, 1, 0),)


def test_parse_skips_comments_and_blank_lines():
    text = "% header comment\n\nt # 0 1\n  % indented comment\nv 0 A\n\nv 1 A\ne 0 1 -\n"
    ds = parse_graphs(text)
    assert ds.n_graphs == 1
    assert ds.graphs[0].edges == ((0, 1, 0),)


def test_parse_with_preseeded_label_dictionaries():
    # seeded names keep their ids; unseen names append after them
    ds = parse_graphs(SIMPLE, node_label_names=["N", "O", "C"], edge_label_names=["double"])
    assert ds.node_label_names == ["N", "O", "C"]
    assert ds.edge_label_names == ["double", "single"]
    assert ds.graphs[0].node_labels == (2, 2, 1)
    assert ds.graphs[0].edges == ((0, 1, 1), (1, 2, 0))


def test_parse_float_responses():
    ds = parse_graphs("t # 0 0.25\nv 0 A\nt # 1 -3\nv 0 A\n")
    assert np.array_equal(ds.responses, [0.25, -3.0])


@pytest.mark.parametrize(
    "text,line_no,fragment",
    [
        ("t 0 1\nv 0 A\n", 1, "bad graph header"),
        ("t # 1 1\nv 0 A\n", 1, "out of order"),
        ("t # 0 huh\nv 0 A\n", 1, "bad response"),
        ("v 0 A\n", 1, "before any graph header"),
        ("e 0 1 -\n", 1, "before any graph header"),
        ("t # 0 1\nv 0\n", 2, "bad vertex line"),
        ("t # 0 1\nv 1 A\n", 2, "vertex id 1 out of order"),
        ("t # 0 1\nv 0 A\nv 1 A\ne 0 1\n", 4, "bad edge line"),
        ("t # 0 1\nv 0 A\nv 1 A\ne 0 x -\n", 4, "bad edge endpoints"),
        ("t # 0 1\nv 0 A\ne 0 0 -\n", 3, "self loop"),
        ("t # 0 1\nv 0 A\nv 1 A\ne 0 2 -\n", 4, "undeclared vertex"),
        ("t # 0 1\nv 0 A\nv 1 A\ne 0 1 -\ne 1 0 -\n", 5, "duplicate edge"),
        ("t # 0 1\nv 0 A\nq 1 2\n", 3, "unknown line kind"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line_no, fragment):
    with pytest.raises(GraphFormatError) as exc:
        parse_graphs(text)
    assert exc.value.line_no == line_no
    assert fragment in str(exc.value)


def test_write_then_parse_round_trips_random_datasets():
    rng = np.random.RandomState(5)
    graphs = random_graph_set(rng, 12, max_nodes=6)
    responses = rng.standard_normal(12)
    names_n = [f"n{i}" for i in range(3)]
    names_e = [f"e{i}" for i in range(2)]
    ds = Dataset(graphs, responses, names_n, names_e, name="rand")
    text = write_graphs(ds)
    back = parse_graphs(text, name="rand", node_label_names=names_n, edge_label_names=names_e)
    assert back.graphs == ds.graphs
    assert np.array_equal(back.responses, ds.responses)
    assert back.node_label_names == names_n and back.edge_label_names == names_e
    # a second write is byte-identical
    assert write_graphs(back) == text


def test_write_round_trips_without_preseeding():
    # parsing fresh re-interns labels; graphs are isomorphic but may renumber,
    # so compare through another write with the recovered dictionaries
    ds = parse_graphs(SIMPLE)
    assert write_graphs(parse_graphs(write_graphs(ds))) == write_graphs(ds)


def test_response_formatting():
    ds = Dataset([path_graph([0])], np.array([1.0]), ["A"], [], name="")
    assert "t # 0 1\n" in write_graphs(ds)
    ds.responses = np.array([0.1])
    text = write_graphs(ds)
    assert parse_graphs(text).responses[0] == 0.1


def test_xor_dataset_round_trips(xor_dataset):
    sub = xor_dataset.subset(range(0, 200, 7))
    text = write_graphs(sub)
    back = parse_graphs(
        text,
        node_label_names=sub.node_label_names,
        edge_label_names=sub.edge_label_names,
    )
    assert back.graphs == sub.graphs
    assert np.array_equal(back.responses, sub.responses)


# --- model serialization ---


def fitted_toy_model():
    g_pos = path_graph([0, 1, 1])
    g_neg = path_graph([0, 0, 1])
    graphs = [g_neg, g_neg, g_pos, g_pos, g_neg, g_pos]
    y = np.array([-1.0, -1.0, 1.0, 1.0, -1.0, 1.0])
    params = FitParams(n_trees=4, max_depth=2, eta=0.3, max_edges=2, seed=7)
    return graphs, fit(graphs, y, params, node_label_names=("a", "b"), edge_label_names=("-",))


def test_model_write_read_write_is_byte_identical():
    graphs, model = fitted_toy_model()
    text = write_model(model)
    back = read_model(text)
    assert write_model(back) == text
    # reloaded model predicts bit-identically
    assert np.array_equal(back.predict_score(graphs), model.predict_score(graphs))
    assert back.t0 == model.t0 and back.eta == model.eta
    assert back.params == model.params
    assert back.node_label_names == model.node_label_names
    assert back.edge_label_names == model.edge_label_names


def test_model_floats_keep_full_precision():
    # 17 significant digits make write/read lossless for doubles
    t0 = 0.1 + 0.2
    model = BoostedModel(
        t0=t0,
        eta=1.0 / 3.0,
        trees=[RegressionTree([TreeNode(value=-1.2345678901234567e-8, n_train=3)])],
        params=FitParams(n_trees=1, max_depth=1, eta=1.0 / 3.0),
        node_label_names=("A",),
        edge_label_names=("-",),
    )
    back = read_model(write_model(model))
    assert back.t0 == t0
    assert back.eta == 1.0 / 3.0
    assert back.trees[0].nodes[0].value == -1.2345678901234567e-8


def test_model_header_records_tree_count_actually_written():
    graphs, model = fitted_toy_model()
    text = write_model(model)
    assert f"k={len(model.trees)}" in text.splitlines()[3]
    assert read_model(text).params.n_trees == len(model.trees)


def model_lines():
    _, model = fitted_toy_model()
    return write_model(model).splitlines()


def test_read_model_rejects_bad_header():
    lines = model_lines()
    lines[0] = "graphboost-model v2"
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(lines))
    assert exc.value.line_no == 1


@pytest.mark.parametrize(
    "line_idx,replacement,err_line",
    [
        (1, "t0", 2),
        (1, "t0 nan extra", 2),
        (1, "t0 abc", 2),
        (2, "eta abc", 3),
        (3, "params x=2 d=2", 4),
        (3, "params junk", 4),
        (4, "nodelabels a b", 5),
        (5, "edgelabels -", 6),
    ],
)
def test_read_model_rejects_bad_preamble(line_idx, replacement, err_line):
    lines = model_lines()
    lines[line_idx] = replacement
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(lines))
    assert exc.value.line_no == err_line


def test_read_model_rejects_bad_tree_sections():
    lines = model_lines()
    ti = next(i for i, l in enumerate(lines) if l.startswith("tree 0"))

    bad = list(lines)
    bad[ti] = "tree 1 3"
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(bad))
    assert exc.value.line_no == ti + 1

    bad = list(lines)
    bad[ti] = "tree 0 x"
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(bad))
    assert exc.value.line_no == ti + 1

    # node index mismatch
    bad = list(lines)
    bad[ti + 1] = "9" + bad[ti + 1][1:]
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(bad))
    assert exc.value.line_no == ti + 2


def test_read_model_rejects_bad_node_lines():
    lines = model_lines()
    ti = next(i for i, l in enumerate(lines) if l.startswith("tree 0"))

    # unknown node kind
    bad = list(lines)
    bad[ti + 1] = "0 frob 1 2"
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(bad))
    assert exc.value.line_no == ti + 2
    assert "unknown node kind" in str(exc.value)

    # split child reference out of range
    n_nodes = int(lines[ti].split()[2])
    split_line = lines[ti + 1].split()
    if split_line[1] == "split":
        bad = list(lines)
        split_line[2] = str(n_nodes)
        bad[ti + 1] = " ".join(split_line)
        with pytest.raises(ModelFormatError) as exc:
            read_model("\n".join(bad))
        assert "out of range" in str(exc.value)

    # malformed pattern tuple
    bad = list(lines)
    tok = lines[ti + 1].split()
    if tok[1] == "split":
        tok[6] = "0,1,0,0"
        bad[ti + 1] = " ".join(tok)
        with pytest.raises(ModelFormatError):
            read_model("\n".join(bad))


def test_read_model_rejects_invalid_pattern_code():
    lines = model_lines()
    ti = next(i for i, l in enumerate(lines) if l.startswith("tree 0"))
    tok = lines[ti + 1].split()
    assert tok[1] == "split"
    # first tuple of a code must start at (0, 1)
    tok[6] = "0,2,0,0,0"
    lines[ti + 1] = " ".join(tok)
    with pytest.raises(ModelFormatError):
        read_model("\n".join(lines))


def test_read_model_rejects_truncation_and_trailing_content():
    lines = model_lines()
    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(lines[:4]))
    assert exc.value.line_no == 5

    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(lines[:-1]))
    assert exc.value.line_no == len(lines)

    with pytest.raises(ModelFormatError) as exc:
        read_model("\n".join(lines) + "\nleftover\n")
    assert "trailing content" in str(exc.value)


def test_read_model_accepts_trailing_blank_lines():
    lines = model_lines()
    model = read_model("\n".join(lines) + "\n\n\n")
    assert write_model(model) == "\n".join(lines) + "\n"


def test_model_with_infinite_pattern_budget_round_trips():
    graphs = [path_graph([0, 1]), path_graph([0, 0])]
    y = np.array([1.0, -1.0])
    params = FitParams(n_trees=1, max_depth=1, eta=1.0, max_edges=None)
    model = fit(graphs, y, params, node_label_names=("A", "B"), edge_label_names=("-",))
    text = write_model(model)
    assert "x=inf" in text.splitlines()[3]
    back = read_model(text)
    assert back.params.max_edges is None
    assert write_model(back) == text
