"""Star-coquasiderivatives, condition (C), and regular-coderivative checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .geometry import EMPTY, Polytope, PolytopeLike, distance_origin, pontryagin_difference
from .mapping import DCScalarization, Mapping, MappingError
from .sampling import SamplingPlan, halton, sphere_directions, unit_ball

ScalarizationFamily = Callable[[np.ndarray], DCScalarization]

# offset from an excluded point at which one-sided Jacobians are taken (1-D)
ONE_SIDED_OFFSET = 1e-6


def _point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _family(h: Union[Mapping, ScalarizationFamily]) -> ScalarizationFamily:
    if isinstance(h, Mapping):
        if h.scalarization is None:
            raise MappingError(f"{h.name} carries no DC scalarization data")
        return h.scalarization
    return h


@dataclass(frozen=True)
class StarCoderivative:
    at: tuple[float, ...]
    directions: tuple[tuple[float, ...], ...]
    values: tuple[PolytopeLike, ...]

    def members(self) -> list[Polytope]:
        return [P for P in self.values if P is not EMPTY]

    def to_dict(self) -> dict:
        return {
            "at": list(self.at),
            "values": [{"w": list(w), "set": P.to_json()} for w, P in zip(self.directions, self.values)],
        }


def _directions(m: int, count: int) -> np.ndarray:
    return sphere_directions(m, max(count, 2))


def _star_from(dc: DCScalarization, x: np.ndarray, W: np.ndarray) -> StarCoderivative:
    values = []
    for w in W:
        pair = dc.pair(w)
        values.append(pontryagin_difference(pair.plus, pair.minus))
    return StarCoderivative(tuple(x), tuple(tuple(w) for w in W), tuple(values))


def star_coderivative(h: Union[Mapping, ScalarizationFamily], x, sphere_count: int = 16) -> StarCoderivative:
    """w -> P_w+ ⋆ P_w- over a sample of unit directions (exactly {+1, -1} in R^1)."""
    x = _point(x)
    dc = _family(h)(x)
    return _star_from(dc, x, _directions(dc.dim_out, sphere_count))


@dataclass(frozen=True)
class FlatStar:
    value: float
    all_empty: bool
    coderivative: StarCoderivative

    @property
    def flag(self) -> Optional[str]:
        return "every value is empty: no openness information" if self.all_empty else None

    def to_dict(self) -> dict:
        return {
            "value": "inf" if math.isinf(self.value) else self.value,
            "flag": self.flag,
            "coderivative": self.coderivative.to_dict(),
        }


def flat_star(h: Union[Mapping, ScalarizationFamily], x=None, sphere_count: int = 16) -> FlatStar:
    """Distance from 0 to the union of the star-coquasiderivative values (at 0 by default)."""
    if x is None:
        x = np.zeros(h.dim_in if isinstance(h, Mapping) else 1)
    star = star_coderivative(h, x, sphere_count)
    d = distance_origin(star.values)
    return FlatStar(d.value, d.all_empty, star)


@dataclass(frozen=True)
class ConditionCVerdict:
    passed: bool
    excess: float
    epsilon: float
    worst_probe: Optional[tuple[float, ...]]
    probes: int

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "excess": "inf" if math.isinf(self.excess) else self.excess,
            "epsilon": self.epsilon,
            "worst_probe": None if self.worst_probe is None else list(self.worst_probe),
            "probes": self.probes,
        }


def _excess(members: list[Polytope], reference: list[Polytope]) -> float:
    """Largest distance from a vertex of ``members`` to the union ``reference``."""
    worst = 0.0
    for P in members:
        for p in P.array:
            if not reference:
                return math.inf
            d = distance_origin([Q.translated(-p) for Q in reference]).value
            worst = max(worst, d)
    return worst


def probe_points(x: np.ndarray, r: float, count: int) -> np.ndarray:
    """``count`` deterministic points of ball(x, r) other than x (both sides in 1-D)."""
    n = len(x)
    if n == 1:
        k = (count + 1) // 2
        t = r * np.arange(1, k + 1) / k
        return x + np.concatenate([t, -t])[:count, None]
    return x + r * unit_ball(halton(count, n + 1, skip=101), n)


def condition_C_check(h: Union[Mapping, ScalarizationFamily], x, r: float, K: int, eps: float,
                      sphere_count: int = 16) -> ConditionCVerdict:
    """Upper semicontinuity of z -> D⋆h(z)(S) at x, discretized.

    PASS iff every vertex of every value at each of K probes in ball(x, r) lies
    within ``eps`` of the union of the values at x.
    """
    if r <= 0 or K < 1 or eps < 0:
        raise ValueError("need r > 0, K >= 1, eps >= 0")
    x = _point(x)
    fam = _family(h)
    dc0 = fam(x)
    W = _directions(dc0.dim_out, sphere_count)
    reference = _star_from(dc0, x, W).members()
    worst, worst_z = 0.0, None
    for z in probe_points(x, r, K):
        e = _excess(_star_from(fam(z), z, W).members(), reference)
        if e > worst:
            worst, worst_z = e, tuple(z)
    return ConditionCVerdict(bool(worst <= eps), float(worst), float(eps), worst_z, K)


@dataclass(frozen=True)
class PosdefVerdict:
    passed: bool
    alpha: float
    min_value: float
    witness: Optional[tuple[tuple[float, ...], tuple[float, ...]]]
    heuristic_points: tuple[tuple[float, ...], ...] = ()
    skipped_points: tuple[tuple[float, ...], ...] = ()

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "alpha_hat": self.alpha,
            "min_value": self.min_value,
            "witness": None if self.witness is None else {"z": list(self.witness[0]), "v": list(self.witness[1])},
            "one_sided_heuristic_at": [list(p) for p in self.heuristic_points],
            "skipped_exclusions": [list(p) for p in self.skipped_points],
        }


def _ball_samples(x: np.ndarray, eta: float, plan: SamplingPlan) -> np.ndarray:
    a, b = plan.unit_pairs(len(x))
    return np.vstack([x, x + eta * a, x + eta * b])


def coderivative_posdef_check(f: Mapping, x, eta: float, alpha: float, plan: SamplingPlan) -> PosdefVerdict:
    """<J(z)^T v, v> >= alpha |v|^2 for z sampled in ball(x, eta) and every unit v.

    Points within the plan margin of an exclusion point are replaced, in 1-D,
    by the Jacobians just left and right of it; elsewhere they are skipped.
    """
    if f.jacobian is None:
        raise MappingError(f"{f.name} has no analytic Jacobian; coderivative checks are unsupported")
    if f.dim_in != f.dim_out:
        raise MappingError("coderivative checks need n = m")
    x = _point(x)
    n = f.dim_in
    Z = _ball_samples(x, eta, plan)
    near = f.near_exclusion(Z, plan.margin)
    heuristic, skipped = [], []
    for e in f.exclusions:
        e = np.asarray(e)
        if np.linalg.norm(e - x) <= eta:
            (heuristic if n == 1 else skipped).append(tuple(e))
    pts = list(Z[~near])
    if n == 1:
        for e in heuristic:
            pts += [np.asarray(e) - ONE_SIDED_OFFSET, np.asarray(e) + ONE_SIDED_OFFSET]
    best, witness = math.inf, None
    for z in pts:
        J = f.jac(z)
        # min over unit v of <J^T v, v> is the smallest eigenvalue of the symmetric part
        lam, vecs = np.linalg.eigh(0.5 * (J + J.T))
        if lam[0] < best:
            best, witness = float(lam[0]), (tuple(z), tuple(vecs[:, 0]))
    tol = 1e-12 * max(1.0, abs(alpha))
    return PosdefVerdict(bool(best >= alpha - tol), float(alpha), best, witness, tuple(heuristic), tuple(skipped))


@dataclass(frozen=True)
class HypoVerdict:
    passed: bool
    gamma: float
    exponent: int
    worst: float
    witness: Optional[tuple[tuple[float, ...], tuple[float, ...]]]

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "gamma": self.gamma,
            "exponent": self.exponent,
            "worst_normalized_product": self.worst,
            "witness": None if self.witness is None else [list(self.witness[0]), list(self.witness[1])],
        }


def hypomonotonicity_check(f: Mapping, x, r: float, gamma: float, plan: SamplingPlan,
                           exponent: int = 2) -> HypoVerdict:
    """<f(a) - f(b), a - b> >= -gamma |a - b|^exponent on sampled pairs of ball(x, r)."""
    if r <= 0 or gamma <= 0:
        raise ValueError("need r > 0 and gamma > 0")
    if exponent not in (1, 2):
        raise ValueError("exponent must be 1 or 2")
    if f.dim_in != f.dim_out:
        raise MappingError("hypomonotonicity needs n = m")
    x = _point(x)
    a, b = plan.pairs(x, r)
    d = np.linalg.norm(a - b, axis=1)
    keep = d > 0
    a, b, d = a[keep], b[keep], d[keep]
    inner = np.einsum("ij,ij->i", f.batch(a) - f.batch(b), a - b)
    ratio = inner / d**exponent
    i = int(np.argmin(ratio))
    passed = bool(ratio[i] >= -gamma)
    return HypoVerdict(passed, gamma, exponent, float(ratio[i]), (tuple(a[i]), tuple(b[i])))
