"""Logic core: formula AST, S-expression syntax, evaluation, rewriting."""

from . import ast
from .ast import Formula, free_vars, is_positive_tc
from .evaluate import EvalSettings, Valuation, eval_all, eval_formula, eval_tc
from .rewrite import tc_to_eso
from .sexpr import parse_formula, print_formula

__all__ = [
    "ast", "Formula", "free_vars", "is_positive_tc",
    "EvalSettings", "Valuation", "eval_all", "eval_formula", "eval_tc",
    "tc_to_eso", "parse_formula", "print_formula",
]
