import math

import numpy as np
import pytest

from invertcert.certify import (CERTIFIED, INCONCLUSIVE, REFUTED, Region, RegionError, certify_coderivative,
                                certify_convex_compacta, certify_estimators, certify_hadamard, certify_pourciau,
                                inverse_bound)
from invertcert.mapping import (affine_family, corpus_lookup, default_family, estimator_family_for, identity,
                                linear, parse_mapping, ph_scalar)
from invertcert.sampling import SamplingPlan

PLAN = SamplingPlan()
# coarser ladder for the 2-D cross-theorem sweep; accuracy there is asserted at 5%
LIGHT = SamplingPlan(radii=(1e-1, 1e-2, 1e-3), pairs_per_radius=64)
CUBIC = corpus_lookup("cubic")
SINE = corpus_lookup("monotone_sine", {"a": 2, "b": 1})
SQRT = corpus_lookup("sqrt_case")
I11 = Region.interval(-1, 1)


# ------------------------------------------------------------ region

@pytest.mark.parametrize("args", [((1.0,), (0.0,)), ((0.0,), (1.0, 2.0)), ((0.0,), (math.inf,))])
def test_bad_regions(args):
    with pytest.raises(RegionError):
        Region(*args)


def test_region_grid_contains_corners_and_center():
    r = Region((-1, 0), (1, 2), grid=3)
    pts = r.points()
    assert len(pts) == 9
    assert [-1, 0] in pts.tolist() and [1, 2] in pts.tolist() and [0, 1] in pts.tolist()


# ------------------------------------------------------------ bound arithmetic

def test_inverse_bound_formulas():
    assert inverse_bound("hadamard", kappa=0.7) == 0.7
    assert inverse_bound("pourciau", kappa=2.0) == 2.0
    assert inverse_bound("estimators", sigma_f=0.5, mu=0.0) == 2.0
    assert inverse_bound("estimators", sigma_f=2.0, mu=0.5) == 1 / 1.5
    assert inverse_bound("convex_compacta", flat_star_f=3.0, mu=1.0) == 0.5
    assert inverse_bound("coderivative", alpha_hat=4.0) == 0.25


def test_certified_bound_equals_its_formula():
    c = certify_estimators(identity(), default_family(identity()), I11, PLAN)
    assert c.lipschitz_inverse_bound == 1 / (c.constants["sigma_f"] - c.constants["mu"])


# ------------------------------------------------------------ hadamard

def test_hadamard_monotone_sine():
    c = certify_hadamard(SINE, Region.interval(-5, 5), 1.0)
    assert c.verdict == CERTIFIED and c.lipschitz_inverse_bound == 1.0


def test_hadamard_refutes_cubic_at_zero():
    c = certify_hadamard(CUBIC, I11, 10.0)
    assert c.verdict == REFUTED
    assert c.witness["point"] == [0.0]


def test_hadamard_identity():
    assert certify_hadamard(identity(), I11, 1.0).verdict == CERTIFIED


def test_hadamard_without_jacobian_is_inconclusive():
    c = certify_hadamard(parse_mapping("x1"), I11, 1.0)
    assert c.verdict == INCONCLUSIVE and c.missing


# ------------------------------------------------------------ pourciau

def test_pourciau_abs_plus_linear():
    c = certify_pourciau(corpus_lookup("abs_plus_linear", {"c": 2}), I11, 1.0, PLAN)
    assert c.verdict == CERTIFIED and c.lipschitz_inverse_bound == 1.0


def test_pourciau_refutes_sqrt_case_lipschitz_hypothesis():
    c = certify_pourciau(SQRT, I11, 10.0, PLAN)
    assert c.verdict == REFUTED
    assert c.hypothesis == "locally-lipschitz"
    assert c.witness["point"] == [0.0]


def test_pourciau_identity():
    assert certify_pourciau(identity(), I11, 1.0, PLAN).verdict == CERTIFIED


def test_pourciau_kappa_too_small():
    c = certify_pourciau(corpus_lookup("abs_plus_linear", {"c": 2}), I11, 0.5, PLAN)
    assert c.verdict == REFUTED and c.hypothesis == "clarke-jacobian"


# ------------------------------------------------------------ estimators

def test_estimators_sqrt_case():
    c = certify_estimators(SQRT, estimator_family_for(SQRT), Region.interval(-2, 2), PLAN, 0.0)
    assert c.verdict == CERTIFIED
    assert c.constants["sigma_f"] >= 0.5 * 0.95
    assert c.lipschitz_inverse_bound <= 2 / 0.95


def test_estimators_identity_trivial_family():
    c = certify_estimators(identity(), default_family(identity()), I11, PLAN)
    assert c.verdict == CERTIFIED
    assert c.lipschitz_inverse_bound == pytest.approx(1, rel=0.02)
    assert any("trivial" in n for n in c.notes)


def test_estimators_refute_cubic_at_zero():
    c = certify_estimators(CUBIC, affine_family(CUBIC), I11, PLAN)
    assert c.verdict == REFUTED
    assert c.witness["point"] == [0.0]


# ------------------------------------------------------------ convex compacta

def test_convex_compacta_ph_scalar():
    c = certify_convex_compacta(ph_scalar(2, 0.5), I11, PLAN, mu=0.0)
    assert c.verdict == CERTIFIED
    assert c.constants["flat_star_f"] == pytest.approx(0.5, rel=0.02)
    assert c.lipschitz_inverse_bound == pytest.approx(2, rel=0.05)


def test_convex_compacta_refutes_abs():
    c = certify_convex_compacta(corpus_lookup("abs_plus_linear", {"c": 0}), I11, PLAN)
    assert c.verdict == REFUTED
    assert c.constants["flat_star_f"] == 0


def test_convex_compacta_linear_with_mu():
    c = certify_convex_compacta(linear([[3.0]]), I11, PLAN, mu=1.0)
    assert c.verdict == CERTIFIED
    assert c.lipschitz_inverse_bound == 0.5


def test_convex_compacta_without_scalarization_is_inconclusive():
    c = certify_convex_compacta(SQRT, I11, PLAN, family=estimator_family_for(SQRT))
    assert c.verdict == INCONCLUSIVE and c.missing


# ------------------------------------------------------------ coderivative

def test_coderivative_monotone_sine():
    c = certify_coderivative(SINE, Region.interval(-5, 5), 1.0, 0.1, PLAN)
    assert c.verdict == CERTIFIED
    assert c.lipschitz_inverse_bound == 1.0
    assert set(c.constants["bound_candidates"]) == {"alpha_hat", "reciprocal"}


def test_coderivative_refutes_cubic():
    assert certify_coderivative(CUBIC, I11, 0.5, 0.1, PLAN).verdict == REFUTED


def test_coderivative_linear():
    c = certify_coderivative(linear([[2.0]]), I11, 2.0, 0.1, PLAN)
    assert c.verdict == CERTIFIED
    assert c.constants["bound_candidates"] == {"alpha_hat": 2.0, "reciprocal": 0.5}


# ------------------------------------------------------------ every branch refutes cubic

@pytest.mark.parametrize("region", [I11, Region.interval(-0.5, 2, grid=6)])
def test_every_branch_refutes_cubic_on_regions_through_zero(region):
    pts = region.points()[:, 0]
    if not np.any(pts == 0):
        pytest.skip("grid misses 0")
    certs = [
        certify_hadamard(CUBIC, region, 10.0),
        certify_pourciau(CUBIC, region, 10.0, PLAN),
        certify_estimators(CUBIC, affine_family(CUBIC), region, PLAN),
        certify_convex_compacta(CUBIC, region, PLAN),
        certify_coderivative(CUBIC, region, 0.5, 0.1, PLAN),
    ]
    assert [c.verdict for c in certs] == [REFUTED] * 5


# ------------------------------------------------------------ cross-theorem agreement

def test_cross_theorem_agreement_on_linear_maps():
    rng = np.random.default_rng(4)
    region = Region((-1, -1), (1, 1), grid=3)
    for _ in range(1):
        # positive definite symmetric part so the coderivative branch applies too
        A = np.eye(2) * 2 + 0.5 * rng.normal(size=(2, 2))
        while np.linalg.eigvalsh(0.5 * (A + A.T))[0] <= 0.5 or np.linalg.cond(A) > 3:
            A = np.eye(2) * 2 + 0.5 * rng.normal(size=(2, 2))
        f = linear(A)
        target = 1 / np.linalg.svd(A, compute_uv=False)[-1]
        kappa = target * 1.01
        alpha_hat = np.linalg.eigvalsh(0.5 * (A + A.T))[0] * 0.99
        certs = {
            "hadamard": certify_hadamard(f, region, kappa),
            "pourciau": certify_pourciau(f, region, kappa, LIGHT),
            "estimators": certify_estimators(f, default_family(f), region, LIGHT),
            "coderivative": certify_coderivative(f, region, alpha_hat, 0.1, PLAN),
        }
        assert all(c.verdict == CERTIFIED for c in certs.values())
        for name in ("hadamard", "pourciau", "estimators"):
            assert certs[name].lipschitz_inverse_bound == pytest.approx(target, rel=0.05)


# ------------------------------------------------------------ serialization

def test_certificate_dict_is_complete():
    c = certify_hadamard(CUBIC, I11, 10.0)
    d = c.to_dict()
    assert d["verdict"] == REFUTED and d["failed_hypothesis"] == c.hypothesis
    assert len(d["records"]) == 9 and d["formula"] == "kappa"
    assert c.exit_code == 1
