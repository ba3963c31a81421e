"""Strict mu-estimator audits and the openness / injectivity transfer rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import TAU_AUDIT
from .mapping import Mapping, MappingError, difference
from .metric import BoundEstimate, BoundsError, estimate_inj, estimate_lip, estimate_lop
from .sampling import SamplingPlan


@dataclass(frozen=True)
class Transfer:
    """Outcome of a transfer rule: a certified lower bound, or the failed hypothesis."""

    transferred: bool
    bound: Optional[float]
    hypothesis: str

    def __bool__(self) -> bool:
        return self.transferred

    def to_dict(self) -> dict:
        return {"transferred": self.transferred, "bound": self.bound, "hypothesis": self.hypothesis}


def transfer_openness(lop_h: float, mu: float) -> Transfer:
    """lop f(x) >= lop h(x) - mu, valid when lop h(x) > mu."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if not lop_h > mu:
        return Transfer(False, None, f"needs lop h > mu, got lop h = {lop_h}, mu = {mu}")
    return Transfer(True, lop_h - mu, "lop h > mu")


def transfer_injectivity(inj_g: float, lip_h: float) -> Transfer:
    """inj (g + h)(x) >= inj g(x) - lip h(x), valid when lip h(x) < inj g(x)."""
    if not lip_h < inj_g:
        return Transfer(False, None, f"needs lip h < inj g, got lip h = {lip_h}, inj g = {inj_g}")
    return Transfer(True, inj_g - lip_h, "lip h < inj g")


AUDIT_SEPARATION = 0.125


@dataclass(frozen=True)
class EstimatorAudit:
    point: tuple[float, ...]
    mu_claimed: float
    anchored: bool
    anchor_gap: float
    lip_residual: Optional[BoundEstimate]
    transferred_lop: Optional[Transfer] = None
    transferred_inj: Optional[Transfer] = None

    @property
    def failure(self) -> Optional[str]:
        if not self.anchored:
            return "anchor"
        if self.lip_residual is None or not self.lip_residual.value <= self.mu_claimed + TAU_AUDIT:
            return "lipschitz-residual"
        return None

    @property
    def passed(self) -> bool:
        return self.failure is None

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "mu_claimed": self.mu_claimed,
            "anchored": self.anchored,
            "anchor_gap": self.anchor_gap,
            "lip_residual": None if self.lip_residual is None else self.lip_residual.to_dict(),
            "transferred_lop": None if self.transferred_lop is None else self.transferred_lop.to_dict(),
            "transferred_inj": None if self.transferred_inj is None else self.transferred_inj.to_dict(),
            "verdict": "PASS" if self.passed else "FAIL",
            "failure": self.failure,
        }


def verify_mu_estimator(f: Mapping, h: Mapping, x, mu: float, plan: SamplingPlan,
                        refine: bool = True) -> EstimatorAudit:
    """Check h(x) = f(x) exactly and lip(f - h)(x) <= mu at plan resolution.

    With ``refine`` the radius ladder is continued by decades down to 1e-9:
    a smooth mismatch of order r is otherwise still visible at the default
    smallest radius and would swamp the audit tolerance. Pairs closer than
    r/8 are skipped so that rounding noise is not amplified at tiny radii.
    """
    if (f.dim_in, f.dim_out) != (h.dim_in, h.dim_out):
        raise MappingError(f"dimension mismatch: {f.name} vs {h.name}")
    if mu < 0:
        raise ValueError("mu must be non-negative")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    gap = float(np.abs(f(x) - h(x)).max())
    if gap != 0:
        return EstimatorAudit(tuple(x), mu, False, gap, None)
    lip = estimate_lip(difference(f, h), x, plan.refined() if refine else plan,
                       AUDIT_SEPARATION, detect_divergence=False)
    return EstimatorAudit(tuple(x), mu, True, 0.0, lip)


@dataclass(frozen=True)
class RegularityVerdict:
    passed: bool
    lop: BoundEstimate
    reg: BoundEstimate
    inj: BoundEstimate
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "lop": self.lop.to_dict(),
            "reg": self.reg.to_dict(),
            "inj": self.inj.to_dict(),
            "warning": self.warning,
        }


# relative slack before inj < lop is reported as a sampling-quality problem
INJ_LOP_SLACK = 0.05


def strong_regularity_check(f: Mapping, x, plan: SamplingPlan) -> RegularityVerdict:
    """Metric regularity plus metric injectivity: lop > 0 and inj > 0 at plan resolution."""
    if f.dim_in != f.dim_out or f.dim_in > 3:
        raise BoundsError("strong regularity checks need n = m <= 3")
    lop, reg = estimate_lop(f, x, plan)
    inj = estimate_inj(f, x, plan)
    warning = None
    if inj.value < lop.value * (1 - INJ_LOP_SLACK):
        warning = f"sampled inj = {inj.value:.6g} below lop = {lop.value:.6g}; refine the plan"
    return RegularityVerdict(bool(lop.value > 0 and inj.value > 0), lop, reg, inj, warning)
