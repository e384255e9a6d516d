from .chains import ConstantChain31, ConstantChain45, chain31, chain45
from .ratios import (BValue, Lemma34Check, Theorem31Check, ainfty_ratio, apvar_ratio,
                     b_function, cube_indicator_norm, lemma34_check, lemma34_window,
                     required_count, rh_functional, theorem31_verify)
from .search import (OPERATORS, ConditionReport, adversarial_subsets, ainfty_search,
                     apvar_search, operator_norm_estimate, reevaluate, rh_search)

__all__ = [
    "BValue", "ConditionReport", "ConstantChain31", "ConstantChain45", "Lemma34Check",
    "OPERATORS", "Theorem31Check", "adversarial_subsets", "ainfty_ratio", "ainfty_search",
    "apvar_ratio", "apvar_search", "b_function", "chain31", "chain45", "cube_indicator_norm",
    "lemma34_check", "lemma34_window", "operator_norm_estimate", "reevaluate",
    "required_count", "rh_functional", "rh_search", "theorem31_verify",
]
