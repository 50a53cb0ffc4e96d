"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 resource
budget exceeded.  Config precedence is flags > config file (JSON via
``--config``) > built-in defaults.  Every subcommand is deterministic given
its inputs, flags and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .boosting import FitParams, fit, logistic_loss, squared_loss
from .dataio import (
    Dataset,
    GraphFormatError,
    ModelFormatError,
    parse_graphs,
    read_model,
    write_graphs,
    write_model,
)
from .evaluation import (
    accuracy,
    auc,
    curves_tsv,
    feature_importance,
    run_bench,
    run_cv,
    sizes_tsv,
)
from .graphs import CodeError, DfsCode, GraphError, PatternError
from .graphxor import generate
from .mining import EnumBudget, VisitDecision, enumerate_patterns
from .splitting import ResourceBudgetError, SplitSearcher

DEFAULTS = {
    "x": "6",
    "d": 3,
    "eta": 0.4,
    "k": 500,
    "min_support": 1,
    "min_leaf": 1,
    "loss": "logistic",
    "folds": 10,
    "seed": 0,
    "snapshot_every": 1,
    "jobs": 0,  # 0 = available parallelism
    "memory_budget": None,
}

USAGE_ERROR, DATA_ERROR, RESOURCE_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Resolved settings of one invocation after flag/config/default merge."""

    subcommand: str
    max_edges: int | None
    max_depth: int
    eta: float
    n_trees: int
    min_support: int
    min_leaf: int
    loss: str
    folds: int
    seed: int
    snapshot_every: int
    jobs: int
    memory_budget: int | None
    prune: bool

    def fit_params(self) -> FitParams:
        return FitParams(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            eta=self.eta,
            max_edges=self.max_edges,
            min_support=self.min_support,
            min_leaf=self.min_leaf,
            loss=self.loss,
            seed=self.seed,
        )


def _parse_x(text: str) -> int | None:
    if str(text).lower() in ("inf", "infinity", "none"):
        return None
    return int(text)


def _load_config(path: str | None, parser: _Parser) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        parser.error(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        parser.error(f"bad config file {path}: {exc}")
    if not isinstance(cfg, dict):
        parser.error(f"config file {path} must hold a JSON object")
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _resolve_config(args: argparse.Namespace, parser: _Parser) -> RunConfig:
    cfg = _load_config(getattr(args, "config", None), parser)

    def pick(key: str):
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        if key in cfg:
            return cfg[key]
        return DEFAULTS[key]

    try:
        run = RunConfig(
            subcommand=args.subcommand,
            max_edges=_parse_x(pick("x")),
            max_depth=int(pick("d")),
            eta=float(pick("eta")),
            n_trees=int(pick("k")),
            min_support=int(pick("min_support")),
            min_leaf=int(pick("min_leaf")),
            loss=str(pick("loss")),
            folds=int(pick("folds")),
            seed=int(pick("seed")),
            snapshot_every=int(pick("snapshot_every")),
            jobs=int(pick("jobs")) or (os.cpu_count() or 1),
            memory_budget=(
                None if pick("memory_budget") is None else int(pick("memory_budget"))
            ),
            prune=not getattr(args, "no_prune", False),
        )
        run.fit_params()  # validates hyperparameter ranges
        if run.folds < 2:
            raise ValueError("folds must be >= 2")
        if run.snapshot_every < 1:
            raise ValueError("snapshot-every must be >= 1")
    except ValueError as exc:
        parser.error(str(exc))
    return run


def _add_hyper_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--x", help="max pattern size in edges, or 'inf'")
    sub.add_argument("--d", type=int, help="max tree depth")
    sub.add_argument("--eta", type=float, help="shrinkage stepsize")
    sub.add_argument("--k", type=int, help="boosting rounds")
    sub.add_argument("--min-support", type=int, help="min containing graphs per pattern")
    sub.add_argument("--min-leaf", type=int, help="min training graphs per leaf")
    sub.add_argument("--loss", choices=("logistic", "squared"), help="loss function")
    sub.add_argument("--seed", type=int, help="random seed")
    sub.add_argument("--config", help="JSON config file; flags win over it")


def _read_dataset(path: str, **kw) -> Dataset:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise GraphFormatError(0, f"cannot read {path}: {exc}") from None
    return parse_graphs(text, name=os.path.basename(path), **kw)


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def format_pattern(code: DfsCode, node_names, edge_names) -> str:
    """Human-readable edge list of a pattern, e.g. ``0:A-1:B 1:B-2:C``."""

    def node(v: int, lab: int) -> str:
        name = node_names[lab] if lab < len(node_names) else str(lab)
        return f"{v}:{name}"

    parts = []
    for i, j, li, le, lj in code.tuples:
        if len(edge_names) > 1:
            el = edge_names[le] if le < len(edge_names) else str(le)
            parts.append(f"{node(i, li)}-[{el}]-{node(j, lj)}")
        else:
            parts.append(f"{node(i, li)}-{node(j, lj)}")
    return " ".join(parts)


def cmd_gen_xor(args: argparse.Namespace, run: RunConfig) -> int:
    ds = generate()
    _write_text(args.out, write_graphs(ds))
    n_pos = int(np.sum(ds.responses > 0))
    print(f"wrote {ds.n_graphs} graphs ({n_pos} positive, {ds.n_graphs - n_pos} negative) to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace, run: RunConfig) -> int:
    ds = _read_dataset(args.data)
    params = run.fit_params()
    splitter = SplitSearcher(ds.graphs, params.budget(), prune=run.prune)
    model = fit(
        ds.graphs,
        ds.responses,
        params,
        splitter=splitter,
        node_label_names=ds.node_label_names,
        edge_label_names=ds.edge_label_names,
    )
    _write_text(args.out_model, write_model(model))
    if params.loss == "logistic":
        train_acc = accuracy(ds.responses, model.predict_label(ds.graphs))
        quality = f"train accuracy {train_acc:.4f}"
    else:
        quality = f"train loss {squared_loss(ds.responses, model.predict_score(ds.graphs)):.6f}"
    s = model.fit_stats
    print(
        f"fit {len(model.trees)} trees on {ds.n_graphs} graphs: {quality}; "
        f"visited {s.visited} patterns, pruned {s.pruned_subtrees} subtrees"
    )
    ranked = sorted(feature_importance(model).items(), key=lambda kv: (-kv[1], kv[0].tuples))
    for code, score in ranked[:5]:
        print(f"  {score:.3f}  {format_pattern(code, ds.node_label_names, ds.edge_label_names)}")
    return 0


def cmd_predict(args: argparse.Namespace, run: RunConfig) -> int:
    try:
        with open(args.model) as fh:
            model = read_model(fh.read())
    except OSError as exc:
        raise ModelFormatError(0, f"cannot read {args.model}: {exc}") from None
    ds = _read_dataset(
        args.data,
        node_label_names=model.node_label_names,
        edge_label_names=model.edge_label_names,
    )
    scores = model.predict_score(ds.graphs)
    labels = np.where(scores >= 0.0, 1.0, -1.0)
    lines = ["graph\tscore\tlabel\tresponse"]
    for gid, (s, lab, y) in enumerate(zip(scores, labels, ds.responses)):
        lines.append(f"{gid}\t{s:.17g}\t{int(lab)}\t{y:g}")
    _write_text(args.out, "\n".join(lines) + "\n")
    if model.params.loss == "logistic":
        acc = accuracy(ds.responses, labels)
        summary = f"accuracy {acc:.4f}"
        if len(np.unique(ds.responses > 0)) == 2:
            summary += f", auc {auc(ds.responses, scores):.4f}"
    else:
        summary = f"loss {squared_loss(ds.responses, scores):.6f}"
    print(f"scored {ds.n_graphs} graphs: {summary}")
    return 0


def _grid(name: str, run: RunConfig) -> list[FitParams]:
    if name == "table1":
        xs: list[int | None] = [2, 3, 4, 5, None]
        ds = [1, 2, 3, 4, 5]
        etas = [1.0, 0.7, 0.4, 0.1, 0.01]
    elif name == "table3":
        xs = [4, 6, 8]
        ds = [1, 3, 5]
        etas = [1.0, 0.7, 0.4, 0.1]
    else:
        raise ValueError(f"unknown grid {name!r}")
    out = []
    for x in xs:
        for d in ds:
            for eta in etas:
                out.append(
                    FitParams(
                        n_trees=run.n_trees,
                        max_depth=d,
                        eta=eta,
                        max_edges=x,
                        min_support=run.min_support,
                        min_leaf=run.min_leaf,
                        loss=run.loss,
                        seed=run.seed,
                    )
                )
    return out


def cmd_cv(args: argparse.Namespace, run: RunConfig) -> int:
    ds = _read_dataset(args.data)
    params_list = _grid(args.grid, run) if args.grid else [run.fit_params()]
    report = run_cv(
        ds,
        params_list,
        n_folds=run.folds,
        seed=run.seed,
        prune=run.prune,
        snapshot_every=run.snapshot_every,
        naive=args.naive,
        memory_budget=run.memory_budget,
        jobs=run.jobs,
    )
    if args.report:
        _write_text(args.report, json.dumps(report.to_json(), indent=2) + "\n")
    if args.curves:
        _write_text(args.curves, curves_tsv(report))
    if args.sizes:
        _write_text(args.sizes, sizes_tsv(report))
    best = max(
        report.configs,
        key=lambda c: (c.best_test_accuracy if c.params.loss == "logistic" else -c.min_test_loss),
    )
    x = "inf" if best.params.max_edges is None else best.params.max_edges
    print(
        f"cv on {ds.n_graphs} graphs, {run.folds} folds, {len(params_list)} configs: "
        f"best x{x} d{best.params.max_depth} eta{best.params.eta:g} k{best.best_k} "
        f"-> accuracy {best.best_test_accuracy:.4f}, auc {best.best_test_auc:.4f}"
    )
    return 0


def cmd_mine(args: argparse.Namespace, run: RunConfig) -> int:
    ds = _read_dataset(args.data)
    if run.max_edges is None:
        raise GraphFormatError(0, "mine requires a finite --x")
    found: list[tuple[int, DfsCode]] = []

    def collect(occ) -> VisitDecision:
        found.append((occ.support, occ.code))
        return VisitDecision.CONTINUE

    budget = EnumBudget(max_edges=run.max_edges, min_support=run.min_support)
    stats = enumerate_patterns(ds.graphs, budget, collect)
    found.sort(key=lambda item: (-item[0], item[1].tuples))
    top = found if args.top is None else found[: args.top]
    for support, code in top:
        print(f"{support}\t{format_pattern(code, ds.node_label_names, ds.edge_label_names)}")
    print(
        f"# {stats.visited} patterns with support >= {run.min_support} "
        f"and <= {run.max_edges} edges in {ds.n_graphs} graphs"
    )
    return 0


def cmd_bench(args: argparse.Namespace, run: RunConfig) -> int:
    ds = _read_dataset(args.data)
    try:
        sizes = [_parse_x(tok) for tok in args.max_edges_list.split(",") if tok]
    except ValueError:
        raise GraphFormatError(0, f"bad --max-edges-list {args.max_edges_list!r}") from None
    modes = {"proposed": ("search",), "naive": ("materialize",), "both": ("search", "materialize")}[
        args.mode
    ]
    rows = run_bench(
        ds,
        sizes,
        run.fit_params(),
        memory_budget=run.memory_budget,
        modes=modes,
    )
    print("x\tmode\tstatus\tseconds_enumerate\tseconds_fit\twidth\tvisited")
    for r in rows:
        x = "inf" if r.max_edges is None else r.max_edges
        width = "" if r.width is None else r.width
        print(
            f"{x}\t{r.mode}\t{r.status}\t{r.seconds_enumerate:.3f}\t"
            f"{r.seconds_fit:.3f}\t{width}\t{r.visited}"
        )
    if args.report:
        _write_text(
            args.report, json.dumps([r.to_json() for r in rows], indent=2) + "\n"
        )
    if any(r.status == "budget-exceeded" for r in rows):
        return RESOURCE_ERROR
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="graphboost", description=__doc__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("gen-xor", help="write the 1035-graph synthetic parity dataset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_xor)

    p = subs.add_parser("train", help="fit a boosted model and serialize it")
    p.add_argument("--data", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--no-prune", action="store_true", help="disable bound pruning")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("predict", help="score graphs with a serialized model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("cv", help="cross-validate one config or a grid")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int)
    p.add_argument("--grid", choices=("table1", "table3"))
    p.add_argument("--report", help="write the report JSON here")
    p.add_argument("--curves", help="write per-round learning curves TSV here")
    p.add_argument("--sizes", help="write per-size search counters TSV here")
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--naive", action="store_true", help="materialized enumerate-and-learn route")
    p.add_argument("--memory-budget", type=int, help="byte cap for the naive matrix")
    p.add_argument("--snapshot-every", type=int)
    p.add_argument("--jobs", type=int, help="fold workers; 0 = available parallelism")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_cv)

    p = subs.add_parser("mine", help="enumerate patterns with supports")
    p.add_argument("--data", required=True)
    p.add_argument("--max-edges", dest="x", help="max pattern size in edges")
    p.add_argument("--top", type=int, help="print only the N most supported")
    p.add_argument("--min-support", type=int)
    p.add_argument("--config", help="JSON config file; flags win over it")
    p.set_defaults(func=cmd_mine)

    p = subs.add_parser("bench", help="time the search route against the naive route")
    p.add_argument("--data", required=True)
    p.add_argument("--max-edges-list", required=True, help="comma-separated sizes, 'inf' allowed")
    p.add_argument("--mode", choices=("proposed", "naive", "both"), default="both")
    p.add_argument("--memory-budget", type=int)
    p.add_argument("--report", help="write rows as JSON here")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        run = _resolve_config(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, run)
    except ResourceBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RESOURCE_ERROR
    except (GraphFormatError, ModelFormatError, GraphError, CodeError, PatternError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
