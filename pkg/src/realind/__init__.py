"""Validated numerics for induction over the real numbers."""

from .interval import Interval, DomainError, arith, elem, div_checked, hull, width, contains
from .predicates import (Tri, BisectionBudget, parse, parse_term, to_text, eval_term,
                         eval_pred, GrammarError, PredicateSyntaxError)
from .ordinal import Ordinal, OMEGA, compare as ordinal_compare, parse_ordinal
from .engine import (SweepPolicy, ProofTrace, sweep, detect_limit, ordinal_of, check_trace,
                     ConstantStep, AffineMap, TableOracle, parse_oracle)
from .ode import Ivp, enclose_step, positivity_oracle, verify_nonnegative, solve_rk4
from .kinematics import (Params, Control, simulate, envelope, check_lemma_invariants,
                         adversarial_search, envelope_comparison_via_positivity)

__version__ = "0.1.0"
