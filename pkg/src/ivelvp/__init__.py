"""Interval-valued variational analysis: gH-calculus, Ekeland-type ε-minimizers,
interval games and interval optimal control on finite or gridded spaces."""

from .calculus import IntervalCurve, aumann_integral, gateaux, generalized_derivative
from .critical import critical_point_check, palais_smale_probe, stationary_sequence
from .ekeland import (Bifunction, EkelandCertificate, caristi_fixed_point, ekeland_bifunction,
                      ekeland_minimize, takahashi_minimize)
from .errors import (HypothesisViolation, InternalError, IOFailure, IvelvpError, ProblemError,
                     SolverError)
from .expr import parse
from .games import IntervalGame, find_epsilon_nash, verify_epsilon_nash
from .interval import Interval, compare, gh_diff, hausdorff, hukuhara_diff, leq, less
from .ivfunc import Box, FinitePoints, IntervalFn, infimum, lsc_probe, minimal_solutions
from .ivode import (ControlFamily, CostFn, IntervalIVP, cost_functional, epsilon_minimal_control,
                    lipschitz_estimate, solve_ivp)
from .mountain_pass import mountain_pass

__version__ = "0.1.0"

__all__ = [
    "Interval", "compare", "gh_diff", "hausdorff", "hukuhara_diff", "leq", "less",
    "parse",
    "Box", "FinitePoints", "IntervalFn", "infimum", "lsc_probe", "minimal_solutions",
    "IntervalCurve", "aumann_integral", "gateaux", "generalized_derivative",
    "Bifunction", "EkelandCertificate", "caristi_fixed_point", "ekeland_bifunction",
    "ekeland_minimize", "takahashi_minimize",
    "critical_point_check", "palais_smale_probe", "stationary_sequence",
    "mountain_pass",
    "IntervalGame", "find_epsilon_nash", "verify_epsilon_nash",
    "ControlFamily", "CostFn", "IntervalIVP", "cost_functional", "epsilon_minimal_control",
    "lipschitz_estimate", "solve_ivp",
    "HypothesisViolation", "InternalError", "IOFailure", "IvelvpError", "ProblemError", "SolverError",
]
