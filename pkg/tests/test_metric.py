import math

import numpy as np
import pytest

from invertcert.mapping import (add, corpus_lookup, estimator_family_for, identity, linear, parse_mapping,
                                ph_scalar)
from invertcert.metric import (BoundsError, covering_check, estimate_inj, estimate_lip, estimate_lop,
                               lop_reg_consistent, pair_quotients, sample_pairs)
from invertcert.sampling import SamplingPlan

PLAN = SamplingPlan()


def _dense_sup_derivative(fprime, x, r, n=100001):
    t = np.linspace(x - r, x + r, n)
    return float(np.max(np.abs(fprime(t))))


# ------------------------------------------------------------ lip

def test_lip_of_linear_is_its_slope():
    est = estimate_lip(linear([[3.0]]), [0.7], PLAN)
    assert abs(est.value - 3) <= 1e-9
    assert est.flag is None


def test_lip_of_sqrt_case_at_zero_diverges():
    est = estimate_lip(corpus_lookup("sqrt_case"), [0.0], PLAN)
    assert math.isinf(est.value)
    assert est.flag and "diverg" in est.flag


def test_lip_of_cubic_at_one():
    est = estimate_lip(corpus_lookup("cubic"), [1.0], PLAN)
    oracle = _dense_sup_derivative(lambda t: 3 * t**2, 1.0, PLAN.radii[-1])
    assert est.value == pytest.approx(oracle, rel=0.02)
    assert est.value == pytest.approx(3, rel=0.02)


def test_ladder_has_one_value_per_radius():
    est = estimate_lip(corpus_lookup("cubic"), [1.0], PLAN)
    assert len(est.ladder) == len(PLAN.radii)
    assert est.value == min(est.ladder)


def test_bad_point_shape():
    with pytest.raises(BoundsError):
        estimate_lip(identity(2), [0.0], PLAN)


# ------------------------------------------------------------ inj

def test_inj_of_linear_map_is_smallest_singular_value():
    rng = np.random.default_rng(11)
    for _ in range(20):
        A = rng.normal(size=(2, 2))
        while np.linalg.cond(A) > 5:
            A = rng.normal(size=(2, 2))
        smin = np.linalg.svd(A, compute_uv=False)[-1]
        est = estimate_inj(linear(A), rng.normal(size=2), PLAN)
        assert est.value == pytest.approx(smin, rel=0.02)


def test_inj_of_cubic_at_zero_vanishes():
    plan = SamplingPlan(radii=(1e-1, 3e-2, 1e-2))
    assert estimate_inj(corpus_lookup("cubic"), [0.0], plan).value <= 1e-3
    assert estimate_inj(corpus_lookup("cubic"), [0.0], PLAN).value <= 1e-3


def test_inj_of_ph_scalar_at_zero():
    est = estimate_inj(ph_scalar(2, 0.5), [0.0], PLAN)
    assert est.value == pytest.approx(min(2, 0.5), rel=0.02)


# ------------------------------------------------------------ covering_check

@pytest.mark.parametrize("r", [1.0, 0.1, 1e-3])
def test_identity_covers_at_rate_one(r):
    assert covering_check(identity(), [0.3], 1.0, r)


def test_linear_half_misses_point_six():
    res = covering_check(linear([[0.5]]), [0.0], 0.6, 1.0)
    assert not res
    # the image of B(0, 1) is [-0.5, 0.5]
    assert abs(res.counterexample[0]) == pytest.approx(0.6)


def test_sqrt_case_covers_near_zero():
    # f(B(0, 0.25)) = [-0.5, 0.5] contains [-0.1, 0.1]
    assert covering_check(corpus_lookup("sqrt_case"), [0.0], 0.4, 0.25)


def test_covering_needs_square_low_dimension():
    with pytest.raises(BoundsError):
        covering_check(parse_mapping("x1 + x2"), [0.0, 0.0], 1.0, 0.1)


# ------------------------------------------------------------ lop / reg

def test_lop_identity():
    lop, reg = estimate_lop(identity(), [0.0], PLAN)
    assert lop.value == pytest.approx(1, rel=0.02)
    assert lop.value * reg.value == pytest.approx(1, rel=1e-12)


def test_lop_h1_of_sqrt_case():
    h1 = estimator_family_for("sqrt_case").at([1.0])
    lop, _ = estimate_lop(h1, [1.0], PLAN)
    assert lop.value == pytest.approx(0.5, rel=0.02)


def test_lop_diag_linear():
    # smallest singular value of diag(2, 3)
    lop, reg = estimate_lop(linear(np.diag([2.0, 3.0])), [0.0, 0.0], PLAN)
    assert lop.value == pytest.approx(2, rel=0.02)
    assert lop_reg_consistent(lop, reg)


def test_lop_of_cubic_at_zero_fails_with_reason():
    lop, reg = estimate_lop(corpus_lookup("cubic"), [0.0], PLAN)
    assert lop.value == 0 and math.isinf(reg.value)
    assert lop.flag and "covering fails" in lop.flag


def test_inj_dominates_lop_for_strongly_regular_cases():
    for f, x in [(identity(), [0.2]), (ph_scalar(2, 0.5), [0.0]), (corpus_lookup("monotone_sine", {"a": 2, "b": 1}), [1.0])]:
        lop, _ = estimate_lop(f, x, PLAN)
        inj = estimate_inj(f, x, PLAN)
        assert inj.value >= lop.value * 0.95


# ------------------------------------------------------------ determinism and serialization

def test_estimates_are_bit_identical():
    f = corpus_lookup("monotone_sine", {"a": 2, "b": 1})
    assert estimate_lip(f, [0.3], PLAN) == estimate_lip(f, [0.3], PLAN)
    assert estimate_lop(f, [0.3], PLAN) == estimate_lop(f, [0.3], PLAN)


def test_serialization_echoes_plan_and_resolution():
    d = estimate_lip(corpus_lookup("sqrt_case"), [0.0], PLAN).to_dict()
    assert d["value"] == "inf"
    assert d["plan"] == PLAN.to_dict()
    assert d["resolution"] == "at plan resolution"


# ------------------------------------------------------------ perturbation inequality

@pytest.mark.parametrize("g, h", [
    (corpus_lookup("cubic"), linear([[0.01]])),
    (identity(), corpus_lookup("abs_plus_linear", {"c": 0.5})),
    (ph_scalar(2, 0.5), corpus_lookup("monotone_sine", {"a": 0.1, "b": 0.05})),
])
def test_sample_level_perturbation_inequality(g, h):
    s = add(g, h)
    for r in PLAN.radii:
        xa, xb = sample_pairs(s, np.array([0.1]), r, PLAN)
        assert pair_quotients(s, xa, xb).min() >= pair_quotients(g, xa, xb).min() - pair_quotients(h, xa, xb).max()
