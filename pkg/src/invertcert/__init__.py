"""Sampling-based certificates of global invertibility for nonsmooth mappings."""

from .certify import (CERTIFIED, INCONCLUSIVE, REFUTED, Certificate, Region, certify_coderivative,
                      certify_convex_compacta, certify_estimators, certify_hadamard, certify_pourciau,
                      inverse_bound)
from .coderivative import (condition_C_check, coderivative_posdef_check, flat_star,
                           hypomonotonicity_check, star_coderivative)
from .estimators import (strong_regularity_check, transfer_injectivity, transfer_openness,
                         verify_mu_estimator)
from .geometry import EMPTY, Polytope, PolytopePair, distance_origin, pontryagin_difference
from .inverse import StalledError, audit_inverse_lipschitz, solve_inverse
from .mapping import (Mapping, affine_family, corpus_lookup, default_family, estimator_family_for,
                      mapping_from_spec, parse_mapping, translated_family)
from .metric import BoundEstimate, covering_check, estimate_inj, estimate_lip, estimate_lop
from .report import emit_report
from .sampling import SamplingPlan
from .scenario import Scenario, load_scenario, read_scenario

__version__ = "0.1.0"

__all__ = [
    "CERTIFIED", "INCONCLUSIVE", "REFUTED", "Certificate", "Region", "certify_coderivative",
    "certify_convex_compacta", "certify_estimators", "certify_hadamard", "certify_pourciau",
    "inverse_bound", "condition_C_check", "coderivative_posdef_check", "flat_star",
    "hypomonotonicity_check", "star_coderivative", "strong_regularity_check", "transfer_injectivity",
    "transfer_openness", "verify_mu_estimator", "EMPTY", "Polytope", "PolytopePair", "distance_origin",
    "pontryagin_difference", "StalledError", "audit_inverse_lipschitz", "solve_inverse", "Mapping",
    "affine_family", "corpus_lookup", "default_family", "estimator_family_for", "mapping_from_spec",
    "parse_mapping", "translated_family", "BoundEstimate", "covering_check", "estimate_inj",
    "estimate_lip", "estimate_lop", "emit_report", "SamplingPlan", "Scenario", "load_scenario",
    "read_scenario",
]
