"""Sampling estimates of lip, inj, lop/cov and reg at a point.

Every quantity here is a limit as the neighbourhood shrinks; the estimates are
computed on the plan's radius ladder and are only claimed "at plan
resolution".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import (
    ALPHA_FLOOR,
    ALPHA_MAX,
    DIVERGENCE_RATIO,
    DIVERGENCE_SLOPE,
    LOP_REL_TOL,
    TAU_RES,
)
from .mapping import Mapping
from .sampling import SamplingPlan, sphere_directions
from .search import find_preimages, start_template

KINDS = ("lip", "inj", "lop", "cov", "reg")


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class BoundEstimate:
    kind: str
    value: float
    ladder: tuple[float, ...]
    point: tuple[float, ...]
    plan: SamplingPlan
    flag: Optional[str] = None
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": _json_float(self.value),
            "radius_ladder_values": [_json_float(v) for v in self.ladder],
            "point": list(self.point),
            "flag": self.flag,
            "resolution": "at plan resolution",
            "plan": self.plan.to_dict(),
            **({"details": self.details} if self.details else {}),
        }


def _json_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _point(x, f: Mapping) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (f.dim_in,):
        raise BoundsError(f"point of shape {x.shape} for a mapping on R^{f.dim_in}")
    if not np.all(np.isfinite(x)):
        raise BoundsError("point must be finite")
    return x


def pair_quotients(f: Mapping, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """||f(a) - f(b)|| / ||a - b|| for each row pair (pairs with a == b are dropped)."""
    d = np.linalg.norm(xa - xb, axis=1)
    keep = d > 0
    diff = f.batch(xa[keep]) - f.batch(xb[keep])
    return np.linalg.norm(diff, axis=1) / d[keep]


def sample_pairs(f: Mapping, center: np.ndarray, r: float, plan: SamplingPlan,
                 min_separation: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """The plan's pairs in ball(center, r), minus those touching f's exclusion set
    and those closer together than ``min_separation * r``."""
    xa, xb = plan.pairs(center, r)
    keep = ~(f.near_exclusion(xa, plan.margin) | f.near_exclusion(xb, plan.margin))
    if min_separation > 0:
        keep &= np.linalg.norm(xa - xb, axis=1) >= min_separation * r
    return xa[keep], xb[keep]


def _per_radius(f: Mapping, x: np.ndarray, plan: SamplingPlan, reduce,
                min_separation: float = 0.0) -> list[float]:
    out = []
    for r in plan.radii:
        q = pair_quotients(f, *sample_pairs(f, x, r, plan, min_separation))
        if q.size == 0:
            raise BoundsError(f"no admissible sample pairs at radius {r}")
        out.append(float(reduce(q)))
    return out


def _diverges(maxima: list[float], radii: tuple[float, ...]) -> bool:
    m = np.asarray(maxima)
    if len(m) < 2:
        return False
    with np.errstate(divide="ignore", invalid="ignore"):
        jumps = m[1:] / m[:-1]
    if np.any(jumps > DIVERGENCE_RATIO):
        return True
    if np.all(m[1:] > m[:-1]) and np.all(m > 0):
        slope = np.polyfit(np.log(radii), np.log(m), 1)[0]
        return slope <= DIVERGENCE_SLOPE
    return False


def estimate_lip(f: Mapping, x, plan: SamplingPlan, min_separation: float = 0.0,
                 detect_divergence: bool = True) -> BoundEstimate:
    """min over radii of the largest sampled difference quotient in the ball.

    ``min_separation`` drops pairs closer than that fraction of the radius.
    Audits of near-zero residuals use it, and switch off the divergence test,
    since rounding noise divided by tiny radii grows like a genuine blow-up.
    """
    x = _point(x, f)
    maxima = _per_radius(f, x, plan, np.max, min_separation)
    if detect_divergence and _diverges(maxima, plan.radii):
        return BoundEstimate("lip", math.inf, tuple(maxima), tuple(x), plan, "divergent")
    return BoundEstimate("lip", min(maxima), tuple(maxima), tuple(x), plan)


def estimate_inj(f: Mapping, x, plan: SamplingPlan) -> BoundEstimate:
    """max over radii of the smallest sampled difference quotient in the ball."""
    x = _point(x, f)
    minima = _per_radius(f, x, plan, np.min)
    value = max(minima)
    return BoundEstimate("inj", value, tuple(minima), tuple(x), plan,
                         "not metrically injective at plan resolution" if value == 0 else None)


def target_offsets(n: int, sphere: int, interior: int, offset: float = 0.0) -> np.ndarray:
    """Unit-ball offsets for covering targets: the sphere first, then a half-radius ring."""
    if n == 1:
        t = np.linspace(1.0, -1.0, max(sphere, 2))
        t = t[np.lexsort((-t, -np.abs(t)))]
        inner = 0.5 * np.array([1.0, -1.0])
        return np.concatenate([t, inner if interior else []])[:, None]
    outer = sphere_directions(n, sphere, offset)
    inner = 0.5 * sphere_directions(n, max(interior, 2), offset + 0.5) if interior else np.zeros((0, n))
    return np.vstack([outer, inner])


@dataclass(frozen=True)
class CoveringResult:
    passed: bool
    alpha: float
    radius: float
    witnesses: tuple[tuple[tuple[float, ...], tuple[float, ...], float], ...]
    counterexample: Optional[tuple[float, ...]] = None

    def __bool__(self) -> bool:
        return self.passed


def covering_check(f: Mapping, x, alpha: float, r: float, targets: int = 16) -> CoveringResult:
    """Is B(f(x), alpha r) inside f(B(x, r))?  Checked on ``targets`` sampled points."""
    x = _point(x, f)
    if f.dim_in != f.dim_out or f.dim_in > 3:
        raise BoundsError("covering checks need n = m <= 3")
    if alpha <= 0 or r <= 0:
        raise BoundsError("alpha and r must be positive")
    offs = target_offsets(f.dim_in, targets, max(2, targets // 4))
    ys = f(x) + alpha * r * offs
    k = len(ys)
    pre, res = find_preimages(f, np.repeat(x[None], k, 0), np.full(k, float(r)), ys, TAU_RES)
    witnesses = tuple((tuple(y), tuple(p), float(e)) for y, p, e in zip(ys, pre, res))
    bad = np.flatnonzero(res > TAU_RES)
    return CoveringResult(
        passed=bad.size == 0,
        alpha=alpha,
        radius=r,
        witnesses=witnesses,
        counterexample=tuple(ys[bad[0]]) if bad.size else None,
    )


class _CoveringBatch:
    """All (point, radius, target) problems of one lop estimate, reusable across alphas."""

    def __init__(self, f: Mapping, x: np.ndarray, plan: SamplingPlan):
        n = f.dim_in
        centers, radii, offs = [], [], []
        for k, r in enumerate(plan.radii):
            pts = plan.neighborhood(x, r)
            for i, c in enumerate(pts):
                # rotate the target set from point to point so that together
                # they probe many more directions than one point alone
                o = target_offsets(n, plan.directions_per_sphere, plan.targets,
                                   offset=((i * 0.618034 + k * 0.414214) % 1.0))
                centers.append(np.repeat(c[None], len(o), 0))
                radii.append(np.full(len(o), r))
                offs.append(o)
        self.f = f
        self.centers = np.vstack(centers)
        self.radii = np.concatenate(radii)
        self.offsets = np.vstack(offs)
        self.base = f.batch(self.centers)
        self.evaluations = 0

    def passes(self, alpha: float) -> bool:
        self.evaluations += 1
        ys = self.base + alpha * self.radii[:, None] * self.offsets
        _, res = find_preimages(self.f, self.centers, self.radii, ys, TAU_RES)
        return bool(np.all(res <= TAU_RES))

    def reach_bound(self) -> float:
        """Sampled sup of ||f(z) - f(c)|| / r over each ball, minimized over problems."""


        tpl = start_template(self.f.dim_in)
        worst = math.inf
        keys = np.unique(np.hstack([self.centers, self.radii[:, None]]), axis=0)
        n = self.f.dim_in
        for row in keys:
            c, r = row[:n], row[n]
            vals = self.f.batch(c + r * tpl)
            worst = min(worst, float(np.linalg.norm(vals - self.f(c), axis=1).max()) / r)
        return worst


def estimate_lop(f: Mapping, x, plan: SamplingPlan, alpha_max: float = ALPHA_MAX) -> tuple[BoundEstimate, BoundEstimate]:
    """Largest alpha for which every sampled covering check near x passes; also reg = 1/lop.

    Geometric bisection on alpha; the per-radius ladder records the rate found
    for the points of each radius separately.
    """
    x = _point(x, f)
    if f.dim_in != f.dim_out or f.dim_in > 3:
        raise BoundsError("lop estimation needs n = m <= 3")
    batch = _CoveringBatch(f, x, plan)

    flag = None
    if not batch.passes(ALPHA_FLOOR):
        value = 0.0
        flag = f"covering fails at every alpha >= {ALPHA_FLOOR}"
    else:
        lo = ALPHA_FLOOR
        hi = min(alpha_max, max(2 * ALPHA_FLOOR, 1.2 * batch.reach_bound()))
        while batch.passes(hi):
            lo = hi
            if hi >= alpha_max:
                flag = f"capped at alpha_max = {alpha_max}"
                break
            hi = min(alpha_max, 4 * hi)
        else:
            while hi / lo > 1 + LOP_REL_TOL:
                mid = math.sqrt(lo * hi)
                if batch.passes(mid):
                    lo = mid
                else:
                    hi = mid
        value = lo
    ladder = tuple(value for _ in plan.radii)
    details = {"bisection_steps": batch.evaluations}
    lop = BoundEstimate("lop", value, ladder, tuple(x), plan, flag, details)
    reg_value = math.inf if value == 0 else 1.0 / value
    reg = BoundEstimate("reg", reg_value, tuple(math.inf if v == 0 else 1 / v for v in ladder),
                        tuple(x), plan, flag, details)
    return lop, reg


def lop_reg_consistent(lop: BoundEstimate, reg: BoundEstimate) -> bool:
    """lop * reg = 1 with the convention 0 * inf = 1."""
    if lop.value == 0:
        return math.isinf(reg.value)
    return math.isclose(lop.value * reg.value, 1.0, rel_tol=1e-12)
