"""Series solutions of nonlinear differential and Volterra
integro-differential equations via differential-transform recurrences.

The package is organised as a small stack: truncated power-series
arithmetic (:mod:`dtm.series`), an expression DSL with symbolic
differentiation (:mod:`dtm.expr`), two independent transform routes for
nonlinear non-autonomous terms (:mod:`dtm.transform`), the coefficient
recurrence driver (:mod:`dtm.solver`), an adaptive reference integrator
(:mod:`dtm.reference`), and the published-table reproduction harness
(:mod:`dtm.tables`) behind the ``dtm`` command line.
"""

from . import errors
from .expr import (
    diff_sym,
    eval_numeric,
    eval_series,
    parse,
    simplify,
    to_text,
)
from .reference import RefConfig, RefSolution, rk45_solve, sample
from .series import TruncatedSeries, constant, elementary, integrate, time_var
from .solver import (
    ProblemSpec,
    SolutionSeries,
    bundled_names,
    error_table,
    load_bundled,
    load_problem,
    load_problem_file,
    solve,
)
from .transform import (
    SymbolicTransform,
    TransformRequest,
    dt_autonomous,
    dt_compose,
    dt_cross_validate,
    dt_recurrence,
    instantiate,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "parse",
    "simplify",
    "diff_sym",
    "eval_numeric",
    "eval_series",
    "to_text",
    "TruncatedSeries",
    "constant",
    "time_var",
    "integrate",
    "elementary",
    "TransformRequest",
    "SymbolicTransform",
    "dt_compose",
    "dt_recurrence",
    "dt_autonomous",
    "dt_cross_validate",
    "instantiate",
    "ProblemSpec",
    "SolutionSeries",
    "load_problem",
    "load_problem_file",
    "load_bundled",
    "bundled_names",
    "solve",
    "error_table",
    "RefConfig",
    "RefSolution",
    "rk45_solve",
    "sample",
    "__version__",
]
