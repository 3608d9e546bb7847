"""Exact finite-lattice realization of the dollar/euro measure pair."""

from .checks import (bayes_check, martingale_transfer_check,
                     verify_numeraire_identity)
from .pricing import (ParityRow, TreeClaim, TreeDualPrice, TreeStrategy,
                      claim_combine, parity_and_equivalence_report,
                      price_on_tree, superreplicate_backward, tree_call,
                      tree_digital_explosion, tree_dollar_call,
                      tree_dollar_put, tree_euro_forward, tree_put,
                      tree_self_quantoed, validate_claim, verify_strategy)
from .random_trees import (random_claim, random_complete_dual_tree,
                           random_dual_tree, random_rule, random_rule_pair,
                           random_terminal_values)
from .tree import (Branch, DualTree, TreeNode, build_dual_tree,
                   devaluation_mass, dump_tree, explosion_mass, first_hit_rule,
                   load_tree, one_step_defects, period_rule, tree_to_doc,
                   two_period_example, validate_stopping_rule,
                   verify_tree_invariants)

__all__ = [
    "Branch", "DualTree", "TreeNode", "TreeClaim", "TreeDualPrice",
    "TreeStrategy", "ParityRow",
    "build_dual_tree", "load_tree", "dump_tree", "tree_to_doc",
    "two_period_example", "verify_tree_invariants",
    "period_rule", "first_hit_rule", "validate_stopping_rule",
    "one_step_defects", "explosion_mass", "devaluation_mass",
    "verify_numeraire_identity", "bayes_check", "martingale_transfer_check",
    "price_on_tree", "superreplicate_backward",
    "parity_and_equivalence_report", "verify_strategy", "validate_claim",
    "tree_euro_forward", "tree_call", "tree_put", "tree_dollar_call",
    "tree_dollar_put", "tree_self_quantoed", "tree_digital_explosion",
    "claim_combine",
    "random_dual_tree", "random_complete_dual_tree", "random_claim",
    "random_rule", "random_rule_pair", "random_terminal_values",
]
