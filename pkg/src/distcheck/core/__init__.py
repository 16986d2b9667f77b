from .instance import DistributedInstance, Fact, Valuation, fact_key
from .semantics import (
    Violation,
    ViolationReport,
    alpha_equivalent,
    alpha_equivalent_sets,
    find_valuations,
    model_check,
    normalize_heads,
    satisfies,
)
from .store import Plan, Store, matches
from .syntax import (
    Atom,
    Comparison,
    Const,
    Constraint,
    ConstraintSet,
    Domain,
    Egd,
    NodeId,
    NodeVar,
    Op,
    Query,
    Tgd,
    Value,
    Var,
    format_value,
    infer_schema,
    is_data_full,
    make_value,
)
