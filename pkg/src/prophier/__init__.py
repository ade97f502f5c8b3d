"""Split sentences into hierarchies of minimal propositions linked by rhetorical relations."""

from .pattern import compile as compile_pattern, find_all, find_first
from .relations import RhetoricalRelation, classify, load_cue_table
from .rules import apply_rule, lint_rules, load_rules
from .transform import (ClauseType, LinkedPropositionTree, Proposition, classify_clause_type, context_layers,
                        leaves_in_order, transform)
from .tree import ParseTree, parse_bracketed, serialize

__version__ = "0.1.0"

__all__ = [
    "ClauseType", "LinkedPropositionTree", "ParseTree", "Proposition", "RhetoricalRelation", "apply_rule",
    "classify", "classify_clause_type", "compile_pattern", "context_layers", "find_all", "find_first",
    "leaves_in_order", "lint_rules", "load_cue_table", "load_rules", "parse_bracketed", "serialize", "transform",
]
