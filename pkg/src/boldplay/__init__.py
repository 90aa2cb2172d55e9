"""Bold play under a stake limit: exact fortunes, certified success
probabilities and certified improvements over bold play."""

__version__ = "0.1.0"

from .chain import LOSE, WIN, Absorption, GameParams, Outcome, absorbed, stake, step, trajectory
from .numeric import ELL, ONE, ZERO, Dyadic, EllRational, EllSurd, LinearForm, parse_ell, parse_form
from .qsolver import Budget, ProbInterval, q_bounds, q_consistency_check, q_near_goal
from .reach import canonical_form, construct_counterexample, not_in_s_certificate, search_hit

__all__ = [
    "Absorption", "Budget", "Dyadic", "ELL", "EllRational", "EllSurd", "GameParams", "LOSE",
    "LinearForm", "ONE", "Outcome", "ProbInterval", "WIN", "ZERO", "absorbed", "canonical_form",
    "construct_counterexample", "not_in_s_certificate", "parse_ell", "parse_form", "q_bounds",
    "q_consistency_check", "q_near_goal", "search_hit", "stake", "step", "trajectory",
]
