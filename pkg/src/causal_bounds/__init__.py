"""Worst-case bounds on the average treatment effect under unmeasured confounding.

The bounds come from linear programs over inverse-propensity weights that
satisfy covariate balance, with positivity (and optionally an odds-ratio
envelope around a fitted propensity) boxing each weight.
"""
from .basis import BasisMatrix, DesignBasis, d4_extra_columns, expand, ladder, parse_terms
from .bootstrap import BootstrapSummary, bootstrap_bounds
from .bounds import BoundResult, WeightPolytope, build_polytope, or_envelope, solve_bounds
from .data import Dataset, SensitivityConfig, load_csv, split_arms, write_csv
from .errors import (
    AllReplicatesInfeasible,
    CausalBoundsError,
    DataError,
    DuplicateTerm,
    EmptyArm,
    InconsistentRows,
    InfeasiblePolytope,
    MissingColumn,
    NoConvergence,
    NonBinaryTreatment,
    NonFiniteValue,
    NumericalBreakdown,
    ParseError,
    RankDeficientDesign,
    SeparationDetected,
    TooFewUnits,
    UnknownCovariate,
    UsageError,
)
from .estimators import AteEstimate, ipw, sipw
from .linprog import LinearProgram, LpSolution, Sense, Status, dump_lp, read_lp, solve
from .logistic import MarPropensity, fit_mar_propensity
from .quantile import QbBoundResult, QuantileFit, crossfit_quantiles, fit_quantile_regression, qb_bounds
from .simulation import Scenario, SimulatedStudy, SimulationReport, generate_study, positivity_violation_rate, run_table, true_ate

__version__ = "0.1.0"
