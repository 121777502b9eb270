"""Exact inference for propositional multiplicative models."""
from .builders import (
    DecisionGraphSpec,
    LogLinearSpec,
    NoisyOrSpec,
    from_decision_graph,
    from_loglinear,
    from_noisy_or,
    from_table,
    positive_from_table,
    to_positive,
    to_table,
)
from .engine import (
    EliminationTrace,
    Network,
    QueryResult,
    closure,
    eliminate,
    interaction_order,
    normalize,
    run_query,
)
from .io import parse_model, read_model, write_model
from .lattice import (
    BOTTOM,
    TOP,
    Clause,
    Domains,
    canonicalize,
    conjoin,
    leq,
    map_instance,
    project,
    relevance,
    satisfies,
)
from .model import (
    ModelStats,
    MultiplicativeModel,
    condition,
    evaluate,
    prune_units,
    stats,
    validate_partition,
)

__version__ = "0.1.0"

__all__ = [
    "parse_model",
    "read_model",
    "write_model",
    "DecisionGraphSpec",
    "LogLinearSpec",
    "NoisyOrSpec",
    "from_decision_graph",
    "from_loglinear",
    "from_noisy_or",
    "from_table",
    "positive_from_table",
    "to_positive",
    "to_table",
    "EliminationTrace",
    "Network",
    "QueryResult",
    "closure",
    "eliminate",
    "interaction_order",
    "normalize",
    "run_query",
    "BOTTOM",
    "TOP",
    "Clause",
    "Domains",
    "canonicalize",
    "conjoin",
    "leq",
    "map_instance",
    "project",
    "relevance",
    "satisfies",
    "ModelStats",
    "MultiplicativeModel",
    "condition",
    "evaluate",
    "prune_units",
    "stats",
    "validate_partition",
]
