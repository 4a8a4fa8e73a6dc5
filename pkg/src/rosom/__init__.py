"""rosom: robust optimization for inequalities with sums of maxima of
biaffine functions.

Reformulations (exact and conservative), an internal LP/MILP core with
scenario-cut generation, true-robust-value oracles and cutting-plane drivers,
plus generators for the worked examples and a CLI (``rosom``).
"""

import os as _os

# single-threaded BLAS keeps pivot sequences deterministic; set before numpy
# loads (no effect if the embedding application imported numpy first)
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

from . import cutplane, linsolve, model, oracle, problems, reformulate, robust_lp, uncertainty
from .linsolve import kernel_name
from .model import (BiaffineForm, ProblemFormatError, RobustSide, Solution,
                    SumOfMaxProblem, VarBound, evaluate_lhs, parse_problem,
                    serialize_problem)
from .uncertainty import (Box, Budgeted, Ellipsoid, HPolytope, SetError,
                          SimplexProduct, TruncatedEllipsoid, UncertaintySet,
                          VPolytope)

__version__ = "0.1.0"

__all__ = [
    "BiaffineForm", "Box", "Budgeted", "Ellipsoid", "HPolytope",
    "ProblemFormatError", "RobustSide", "SetError", "SimplexProduct",
    "Solution", "SumOfMaxProblem", "TruncatedEllipsoid", "UncertaintySet",
    "VPolytope", "VarBound", "cutplane", "evaluate_lhs", "kernel_name",
    "linsolve", "model", "oracle", "parse_problem", "problems", "reformulate",
    "robust_lp", "serialize_problem", "uncertainty",
]
