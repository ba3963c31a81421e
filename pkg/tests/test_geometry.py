import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invertcert.config import TAU_GEOM
from invertcert.geometry import (EMPTY, GeometryError, Polytope, PolytopePair, distance_origin, from_json,
                                 hormander_equivalent, is_subset, minkowski_sum, pontryagin_difference,
                                 polytopes_equal, support_value)

from conftest import random_polytope

I = Polytope.interval


# ------------------------------------------------------------ support_value

def test_support_unit_box():
    assert support_value(Polytope.box([-1, -1], [1, 1]), [1, 0]) == 1


def test_support_singleton_is_linear():
    assert support_value(Polytope.point([3]), [-2]) == -6


def test_support_simplex_matches_vertex_max():
    P = Polytope.hull([[0, 0], [1, 0], [0, 1]])
    # max of <(1,1), v> over the three vertices: 0, 1, 1
    assert support_value(P, [1, 1]) == max(0, 1, 1)


def test_support_of_empty_is_an_error():
    with pytest.raises(GeometryError):
        support_value(EMPTY, [1.0])


# ------------------------------------------------------------ minkowski_sum

def test_interval_addition():
    assert polytopes_equal(minkowski_sum(I(-1, 1), I(-2, 2)), I(-3, 3))


def test_zero_is_identity(rng):
    A = random_polytope(rng, 2)
    assert polytopes_equal(minkowski_sum(A, Polytope.point([0, 0])), A)


def test_segments_sum_to_unit_square():
    S = minkowski_sum(Polytope.hull([[0, 0], [1, 0]]), Polytope.hull([[0, 0], [0, 1]]))
    # hull of the four vertex sums
    assert polytopes_equal(S, Polytope.hull([[0, 0], [1, 0], [0, 1], [1, 1]]))


def test_sum_dimension_mismatch():
    with pytest.raises(GeometryError):
        minkowski_sum(I(0, 1), Polytope.point([0, 0]))


# ------------------------------------------------------------ hormander

def test_hormander_examples():
    z = Polytope.point([0])
    assert hormander_equivalent(PolytopePair(I(0, 1), I(0, 1)), PolytopePair(z, z))
    # both cross sums equal [-2, 2]
    assert hormander_equivalent(PolytopePair(I(-1, 1), z), PolytopePair(I(-2, 2), I(-1, 1)))
    assert not hormander_equivalent(PolytopePair(I(-1, 1), z), PolytopePair(I(0, 1), z))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hormander_is_an_equivalence(rng, n):
    for _ in range(10):
        p = PolytopePair(random_polytope(rng, n), random_polytope(rng, n))
        q = p.shifted(random_polytope(rng, n))
        r = q.shifted(random_polytope(rng, n))
        assert hormander_equivalent(p, p)
        assert hormander_equivalent(p, q) and hormander_equivalent(q, p)
        assert hormander_equivalent(p, r)


# ------------------------------------------------------------ pontryagin

def test_interval_shrinkage():
    assert polytopes_equal(pontryagin_difference(I(-2, 2), I(-1, 1)), I(-1, 1))


def test_larger_subtrahend_gives_empty():
    assert pontryagin_difference(I(-1, 1), I(-2, 2)) is EMPTY


def test_empty_operand_is_an_error():
    with pytest.raises(GeometryError):
        pontryagin_difference(EMPTY, I(0, 1))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_self_difference_is_origin(rng, n):
    for _ in range(20):
        A = random_polytope(rng, n)
        assert polytopes_equal(pontryagin_difference(A, A), Polytope.point(np.zeros(n)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_difference_plus_subtrahend_inside(rng, n):
    hits = 0
    for _ in range(30):
        B = random_polytope(rng, n).scaled(0.3)
        A = minkowski_sum(random_polytope(rng, n), random_polytope(rng, n))
        D = pontryagin_difference(A, B)
        if D is EMPTY:
            continue
        hits += 1
        assert is_subset(minkowski_sum(D, B), A)
    assert hits > 0


@pytest.mark.parametrize("n", [1, 2])
def test_difference_is_invariant_under_common_summand(rng, n):
    for _ in range(10):
        A = random_polytope(rng, n)
        B = random_polytope(rng, n).scaled(0.2)
        C = random_polytope(rng, n)
        D1 = pontryagin_difference(A, B)
        D2 = pontryagin_difference(minkowski_sum(A, C), minkowski_sum(B, C))
        assert (D1 is EMPTY and D2 is EMPTY) or polytopes_equal(D1, D2)


# ------------------------------------------------------------ distance_origin

def test_distance_examples():
    assert distance_origin([I(1, 2)]).value == 1
    assert distance_origin([I(-1, 1)]).value == 0
    # nearest point of the segment is (1, 0)
    assert math.isclose(distance_origin([Polytope.hull([[1, 1], [1, -1]])]).value, 1.0, abs_tol=TAU_GEOM)


def test_distance_all_empty_is_flagged():
    d = distance_origin([EMPTY, EMPTY])
    assert d.all_empty and math.isinf(d.value)


def test_distance_skips_empty_members():
    d = distance_origin([EMPTY, I(2, 3), I(-5, -4)])
    assert d.value == 2 and not d.all_empty


def test_distance_in_3d_matches_projection():
    # a face of the cube [1, 2]^3: nearest point (1, 1, 1)
    d = distance_origin([Polytope.box([1, 1, 1], [2, 2, 2])])
    assert math.isclose(d.value, math.sqrt(3), rel_tol=1e-9)


# ------------------------------------------------------------ properties

@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_support_is_additive(n, seed):
    rng = np.random.default_rng(seed)
    A, B = random_polytope(rng, n), random_polytope(rng, n)
    S = minkowski_sum(A, B)
    for v in rng.normal(size=(10, n)):
        assert math.isclose(support_value(S, v), support_value(A, v) + support_value(B, v),
                            rel_tol=1e-9, abs_tol=1e-9)


@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_json_round_trip(n, seed):
    A = random_polytope(np.random.default_rng(seed), n)
    assert polytopes_equal(from_json(json.loads(json.dumps(A.to_json()))), A)


def test_empty_json_round_trip():
    assert from_json(json.loads(json.dumps(EMPTY.to_json()))) is EMPTY
