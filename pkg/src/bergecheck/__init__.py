"""Lattice certification of semicontinuity hypotheses for parametric minimization."""

from .errors import (
    BergeCheckError,
    DimensionError,
    DomainError,
    EmptyImage,
    ExprSyntaxError,
    InvalidWindow,
    ProblemIOError,
    SchemaError,
)
from .exprparse import evaluate, parse, render
from .harness import (
    PathBudget,
    TheoremReport,
    Tolerances,
    generate_instance,
    verify,
    verify_infcompact_corollary,
    verify_maximum_theorem,
    verify_solution_properties,
    verify_value_semicontinuity,
)
from .infcompact import (
    Objective,
    check_function_lsc,
    check_inf_compact,
    check_k_inf_compact,
    check_kn_inf_compact,
    level_set,
)
from .setmap import (
    SetValuedMap,
    check_k_upper_semicompact,
    check_kn_upper_semicompact,
    check_map_lsc,
    check_map_usc,
    graph_sample,
)
from .solver import refine_compare, solve
from .topo import CheckReport, CompactWindow, GridSpace, SequencePath, Witness, build_grid

__version__ = "0.1.0"
