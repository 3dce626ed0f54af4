"""provex: interactive query-result exploration with which-provenance.

Parse SPJ/SPJA rule programs, evaluate them over in-memory set-semantics
relations, and answer "which input rows produced these selected result rows"
under four strategies: naive lazy (W), pruned lazy (O1), eager (G) and hybrid
key materialization (O2).
"""
from .constraints import (
    BodyDependencies,
    FunctionalDependency,
    KeyFact,
    body_dependencies,
    closure,
    derive_body_fds,
    holds_fd,
    infer_view_key,
    program_view_keys,
)
from .engine import (
    Database,
    RelationInstance,
    eval_program,
    eval_rule,
    instance,
    semijoin,
)
from .hybrid import (
    EagerStore,
    MaterializationPlan,
    PlanStats,
    answer_from_rk,
    build_plan,
    eager_materialize,
    eager_retrieval,
    hybrid_retrieval,
    materialize,
    rk_restrict,
    score_plan,
    select_plan,
)
from .ir import (
    Catalog,
    CatalogEntry,
    HeadColumn,
    Occurrence,
    Predicate,
    Program,
    ProvexError,
    Rule,
    TableAtom,
    Value,
    check_safety,
    rhs_attributes,
)
from .parser import ParseError, parse_program
from .provgen import (
    DependencyViolation,
    ProvQuery,
    ProvResult,
    ProvStats,
    Selection,
    baseline_retrieval,
    join_count,
    naive_provenance,
    optimized_retrieval,
    provenance,
    recursive_naive,
)

__version__ = "0.1.0"
