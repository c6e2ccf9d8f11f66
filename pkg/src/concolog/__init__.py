"""Concolic testing for pure definite logic programs.

Run a goal concretely and symbolically in lockstep, record which clauses
each choice point matched, solve positive/negative unifiability problems
to aim new goals at unexplored choices, and measure the clause and choice
coverage of the resulting test suite.
"""

from .concolic import (
    ChoiceRecord,
    ConcolicRunResult,
    InvariantViolationError,
    StepLabel,
    concolic_run,
    project_concrete,
)
from .concrete import (
    ConcreteRunResult,
    FAILED,
    FUEL_EXHAUSTED,
    SUCCESS,
    StuckStateError,
    UnknownPredicateError,
    clauses_for,
    concrete_run,
    concrete_step,
)
from .coverage import CoverageReport, measure
from .driver import (
    DriverReport,
    TestCase,
    TestSpec,
    alt_traces,
    replay_check,
    run_concolic_testing,
)
from .fixtures import brute_sld_first_answer, fixture
from .parser import (
    NonAtomicGoalError,
    ParseError,
    UnsupportedFeatureError,
    parse_goal,
    parse_program,
    parse_program_file,
)
from .solver import (
    SolverSignature,
    UnifProblem,
    UnknownLabelError,
    alt_k,
    grounding_enum,
    max_unify_substs,
    naive_alt_oracle,
    pos_neg,
)
from .terms import (
    Atom,
    Clause,
    Compound,
    Constant,
    NameSource,
    Program,
    Substitution,
    Variable,
    compose,
    depth,
    disagreement_pairs,
    is_ground,
    mgu,
    more_general,
    rename_apart,
    variables,
)

__version__ = "0.1.0"
