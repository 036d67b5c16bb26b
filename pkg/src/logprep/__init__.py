"""Term engine and certificate verifier for logarithmic-exponential
preparation data: parsing and evaluation of log-exp terms, classification
by log nesting order and exponential depth, sampling verification of
logarithmic scales and prepared forms, and the constructive rewrites that
consume verified witnesses.
"""

from .terms import (  # noqa: F401
    Abs, Add, Atom, Const, EvalResult, Exp, Guarded, Inv, Log, Max, Min, Mul,
    NamedSeries, Neg, Pow, Root, SeriesDef, Term, TruncExp, TruncLog, Var,
    VarContext, const, eval_interval, eval_term, substitute,
)
from .grammar import ParseError, parse_term, print_term  # noqa: F401
from .report import VerificationReport  # noqa: F401

__version__ = "0.1.0"
