"""gdlog: a probabilistic Datalog engine.

Programs extend Datalog with rule heads that draw values from named
discrete distributions. The package parses such programs, translates
them to existential Datalog, checks weak acyclicity, runs a
probabilistic chase (seeded sampling and exact bounded enumeration),
and conditions the outcome distribution on logical constraints.
"""
from .analysis import (
    DependencyGraph,
    Position,
    build_dependency_graph,
    is_weakly_acyclic,
)
from .chase import (
    BUDGET_EXHAUSTED,
    LEAF,
    ChaseEngine,
    Firing,
    Outcome,
    Rejection,
    applicable_firings,
    chase_step,
    replay_weight,
    sample_outcome,
)
from .distributions import DistributionSpec, DomainError, Registry, RngStream
from .enumeration import (
    EnumerationPolicy,
    OutcomeDistribution,
    cylinder_mass,
    enumerate_outcomes,
    marginal,
    marginal_bounds,
)
from .model import (
    Atom,
    Constant,
    Constraint,
    DeltaTerm,
    Fact,
    GdlogError,
    Instance,
    Program,
    Rule,
    ValidationReport,
    Variable,
    ground_atom,
    validate_program,
)
from .parser import (
    ParseError,
    SourceSpan,
    load_edb_csv,
    parse_facts,
    parse_program,
    render_facts,
    render_program,
)
from .ppdl import (
    IllegalInput,
    PosteriorEstimate,
    UndeterminedLegality,
    check_constraints,
    estimate_posterior,
    exact_posterior,
)
from .translate import (
    DistRelation,
    ExistentialProgram,
    ExistentialRule,
    dist_relation_for,
    to_existential,
)

__version__ = "0.1.0"
