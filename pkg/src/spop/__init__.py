"""Small polynomial path orders: certifying polynomial innermost runtime
bounds for constructor rewrite systems, with synthesis, measurement and a
compiler from safe-recursion programs over binary words."""

from .orders import SPOP, SPOP_PS, Certificate, PathOrder, check_compatibility
from .rewriting import Rule, Trs, derivation_height
from .synthesis import SearchBudget, synthesize
from .terms import Fun, Kind, Precedence, Symbol, Var

__all__ = [
    "SPOP", "SPOP_PS", "Certificate", "PathOrder", "check_compatibility", "Rule", "Trs",
    "derivation_height", "SearchBudget", "synthesize", "Fun", "Kind", "Precedence",
    "Symbol", "Var",
]
