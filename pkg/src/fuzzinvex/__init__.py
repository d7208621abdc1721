"""Verification toolkit for nonsmooth fuzzy-valued optimization.

Clarke subdifferentials of piecewise-smooth functions, sampled certification of
invexity-type properties, KKT multiplier checks, brute-force Pareto and fuzzy
nondominance oracles, and pipelines that tie them together.
"""

from .errors import (DomainError, ExprSyntaxError, FuzzInvexError, InfeasiblePointError, KKTInputError,
                     ModelError, ProblemError, UnknownIdentifierError)
from .expr import ExprFn, parse_expression
from .fop import (FOPSpec, TheoremPipeline, bridge_check, build_vmp, check_nondominated, invex_fuzzy_check,
                  kkt_sweep, run_theorem)
from .fuzzy import (FuzzyNumber, FuzzyObjective, Interval, alpha_cut, eval_endpoints, interval_sub_cross,
                    interval_sub_hukuhara, make_fuzzy, membership, triangular)
from .invexity import (PairSet, Verdict, Witness, certify, certify_scalar, certify_vector, corollary_beta,
                       pair_grid, pair_list)
from .kkt import KKTReport, MultiplierSet, active_set, kkt_solve, kkt_verify
from .nonsmooth import (OracleFn, PiecewiseFn, Polytope, clarke_subdiff_1d, contains_zero, directional_derivative,
                        distance_to_zero, estimate_limiting_gradients, limiting_gradient_history, minkowski_sum)
from .pareto import (VMP, dominates, geoffrion_audit, geoffrion_bound, pareto_front, stationarity_weights,
                     weighted_argmin)
from .problem import ProblemFile, parse_grid, parse_problem, parse_problem_text

__version__ = "0.1.0"

__all__ = [n for n in dir() if not n.startswith("_")]
