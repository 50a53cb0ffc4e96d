"""Gradient tree boosting over graphs with branch-and-bound split search."""

from .boosting import (
    BoostedModel,
    FitParams,
    RegressionTree,
    TreeNode,
    fit,
    logistic_loss,
    negative_gradient,
    squared_loss,
)
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
    CvReport,
    accuracy,
    auc,
    feature_importance,
    run_bench,
    run_cv,
    stratified_kfold,
)
from .graphs import (
    CodeError,
    DfsCode,
    GraphError,
    LabeledGraph,
    PatternError,
    canonical_code,
    contains,
    is_minimal,
)
from .graphxor import generate as generate_xor
from .mining import (
    EnumBudget,
    EnumStats,
    OccurrenceSet,
    VisitDecision,
    enumerate_patterns,
    extend,
    roots,
)
from .splitting import (
    MaterializedSplitter,
    PatternCache,
    ResourceBudgetError,
    SplitCandidate,
    SplitSearcher,
    TssStats,
    find_best_split,
    lower_bound,
    split_objective,
    tss,
)

__version__ = "0.1.0"
