"""Theorem certificates on a compact box, verified at grid resolution.

Every "for all x" hypothesis is checked at the grid points of a Region only,
so a positive verdict is always CERTIFIED-ON-REGION, never a global claim.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .coderivative import (
    condition_C_check,
    coderivative_posdef_check,
    flat_star,
    hypomonotonicity_check,
)
from .config import TAU_DET
from .estimators import (
    strong_regularity_check,
    transfer_injectivity,
    transfer_openness,
    verify_mu_estimator,
)
from .mapping import EstimatorFamily, Mapping, MappingError, translated_family
from .metric import estimate_inj, estimate_lip, estimate_lop
from .parallel import ordered_map
from .sampling import SamplingPlan

CERTIFIED = "CERTIFIED-ON-REGION"
REFUTED = "REFUTED"
INCONCLUSIVE = "INCONCLUSIVE"

EXIT_CODES = {CERTIFIED: 0, REFUTED: 1, INCONCLUSIVE: 2}

THEOREMS = ("hadamard", "pourciau", "estimators", "convex_compacta", "coderivative")

FORMULAS = {
    "hadamard": "kappa",
    "pourciau": "kappa",
    "estimators": "(sigma_f - mu)^-1",
    "convex_compacta": "(flat_star_f - mu)^-1",
    "coderivative": "1/alpha_hat (alpha_hat also reported)",
}

# per-point hypotheses of each branch, most basic first
HYPOTHESES = {
    "hadamard": ("invertible-jacobian", "inverse-jacobian-bound"),
    "pourciau": ("locally-lipschitz", "clarke-jacobian"),
    "estimators": ("strict-estimator", "strong-regularity"),
    "convex_compacta": ("scalarization", "flat-star-degenerate", "condition-C", "injectivity", "strict-estimator"),
    "coderivative": ("hypomonotone", "coderivative-posdef"),
}

# relative slack allowed when a sampled lop stands in for a failed condition (C)
OPENNESS_FALLBACK_SLACK = 0.05


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Region:
    """Axis-aligned box with ``grid`` points per axis."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    grid: int = 9

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise RegionError("box bounds must have the same, non-zero length")
        if not all(math.isfinite(a) and math.isfinite(b) and a < b for a, b in zip(lo, hi)):
            raise RegionError(f"box needs finite lo < hi on every axis, got {lo}, {hi}")
        if int(self.grid) != self.grid or self.grid < 3:
            raise RegionError("grid must be an integer >= 3")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "grid", int(self.grid))

    @classmethod
    def interval(cls, lo: float, hi: float, grid: int = 9) -> "Region":
        return cls((lo,), (hi,), grid)

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        box = np.asarray(d["box"], dtype=float).reshape(-1, 2)
        return cls(tuple(box[:, 0]), tuple(box[:, 1]), d.get("grid", 9))

    def to_dict(self) -> dict:
        return {"box": [[a, b] for a, b in zip(self.lo, self.hi)], "grid": self.grid}

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2

    def points(self) -> np.ndarray:
        axes = [np.linspace(a, b, self.grid) for a, b in zip(self.lo, self.hi)]
        return np.array(list(itertools.product(*axes)), dtype=float)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= np.asarray(self.lo) - tol) and np.all(x <= np.asarray(self.hi) + tol))


@dataclass(frozen=True)
class PointRecord:
    point: tuple[float, ...]
    passed: bool
    hypothesis: Optional[str] = None
    values: dict[str, Any] = field(default_factory=dict)
    checks: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "verdict": "PASS" if self.passed else "FAIL",
            "failed_hypothesis": self.hypothesis,
            "values": self.values,
            "checks": self.checks,
        }


@dataclass(frozen=True)
class Certificate:
    theorem: str
    mapping: str
    region: Region
    verdict: str
    records: tuple[PointRecord, ...]
    constants: dict[str, Any]
    lipschitz_inverse_bound: Optional[float] = None
    hypothesis: Optional[str] = None
    witness: Optional[dict] = None
    missing: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    plan: Optional[SamplingPlan] = None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    @property
    def formula(self) -> str:
        return FORMULAS[self.theorem]

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "mapping": self.mapping,
            "region": self.region.to_dict(),
            "verdict": self.verdict,
            "failed_hypothesis": self.hypothesis,
            "witness": self.witness,
            "missing_hypotheses": list(self.missing),
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
            "lipschitz_inverse_bound": _jsonable(self.lipschitz_inverse_bound),
            "formula": self.formula,
            "notes": list(self.notes),
            "plan": None if self.plan is None else self.plan.to_dict(),
            "records": [r.to_dict() for r in self.records],
        }


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def inverse_bound(theorem: str, **c: float) -> float:
    """The Lipschitz constant of the inverse that each branch asserts."""
    if theorem in ("hadamard", "pourciau"):
        return float(c["kappa"])
    if theorem == "estimators":
        return 1.0 / (c["sigma_f"] - c["mu"])
    if theorem == "convex_compacta":
        return 1.0 / (c["flat_star_f"] - c["mu"])
    if theorem == "coderivative":
        return 1.0 / c["alpha_hat"]
    raise ValueError(f"unknown theorem {theorem!r}")


def _assemble(theorem: str, f: Mapping, region: Region, records: Sequence[PointRecord],
              constants: dict, ok: bool, plan: Optional[SamplingPlan] = None,
              notes: Sequence[str] = (), fail_tag: Optional[str] = None,
              fail_point: Optional[Sequence[float]] = None) -> Certificate:
    """REFUTED at a failing grid point, else CERTIFIED if the global condition ``ok`` holds.

    The witness is the first grid point failing the most basic hypothesis of
    the branch, so a singular Jacobian outranks a merely large inverse.
    """
    rank = {tag: i for i, tag in enumerate(HYPOTHESES[theorem])}
    failing = [r for r in records if not r.passed]
    bad = min(failing, key=lambda r: rank.get(r.hypothesis, len(rank))) if failing else None
    common = dict(theorem=theorem, mapping=f.name, region=region, records=tuple(records),
                  constants=constants, notes=tuple(notes), plan=plan)
    if bad is not None:
        witness = {"point": list(bad.point), "hypothesis": bad.hypothesis, "values": bad.values}
        return Certificate(verdict=REFUTED, hypothesis=bad.hypothesis, witness=witness, **common)
    if not ok:
        witness = None if fail_point is None else {"point": list(fail_point), "hypothesis": fail_tag}
        return Certificate(verdict=REFUTED, hypothesis=fail_tag, witness=witness, **common)
    return Certificate(verdict=CERTIFIED, lipschitz_inverse_bound=inverse_bound(theorem, **constants), **common)


def _inconclusive(theorem: str, f: Mapping, region: Region, missing: Sequence[str],
                  records: Sequence[PointRecord] = (), constants: Optional[dict] = None,
                  plan: Optional[SamplingPlan] = None, notes: Sequence[str] = ()) -> Certificate:
    return Certificate(theorem, f.name, region, INCONCLUSIVE, tuple(records), constants or {},
                       missing=tuple(missing), plan=plan, notes=tuple(notes))


def _exclusions_in(f: Mapping, region: Region) -> list[tuple[float, ...]]:
    return [e for e in f.exclusions if len(e) == region.dim and region.contains(e)]


def _inv_norm(M: np.ndarray) -> float:
    s = np.linalg.svd(M, compute_uv=False)
    return math.inf if s[-1] == 0 else float(1.0 / s[-1])


# ------------------------------------------------------------------ Hadamard

def certify_hadamard(f: Mapping, region: Region, kappa: float) -> Certificate:
    """Invertible Jacobian with |J^-1| <= kappa at every grid point of a C^1 mapping."""
    if f.jacobian is None:
        return _inconclusive("hadamard", f, region, ["analytic Jacobian"])
    if f.dim_in != f.dim_out:
        raise MappingError("Hadamard certificates need n = m")
    kinks = _exclusions_in(f, region)
    if kinks:
        return _inconclusive("hadamard", f, region,
                             [f"continuous differentiability (non-differentiable at {list(map(list, kinks))})"])

    def check(x: np.ndarray) -> PointRecord:
        J = f.jac(x)
        det = float(np.linalg.det(J))
        values = {"det": det}
        if abs(det) <= TAU_DET:
            return PointRecord(tuple(x), False, "invertible-jacobian", values)
        nrm = _inv_norm(J)
        values["inverse_norm"] = nrm
        if nrm > kappa * (1 + 1e-12):
            return PointRecord(tuple(x), False, "inverse-jacobian-bound", values)
        return PointRecord(tuple(x), True, None, values)

    records = ordered_map(check, region.points())
    return _assemble("hadamard", f, region, records, {"kappa": kappa}, True)


# ------------------------------------------------------------------ Pourciau

# random hull samples checked per grid point when n > 1
CLARKE_HULL_SAMPLES = 100


def sampled_clarke_jacobians(f: Mapping, x: np.ndarray, plan: SamplingPlan) -> np.ndarray:
    """Jacobians at differentiability points near x (smallest plan radius), stacked."""
    r = plan.radii[-1]
    Z = plan.neighborhood(x, r)
    Z = Z[~f.near_exclusion(Z, plan.margin)]
    if f.dim_in == 1:
        for e in f.exclusions:
            if abs(e[0] - x[0]) <= r:
                Z = np.vstack([Z, [[e[0] - 10 * plan.margin]], [[e[0] + 10 * plan.margin]]])
    return np.stack([f.jac(z) for z in Z])


def clarke_check(Js: np.ndarray, kappa: float, seed: int = 0) -> tuple[bool, float, Optional[np.ndarray]]:
    """Every matrix of conv(Js) invertible with |M^-1| <= kappa (sampled for n > 1).

    Returns (passed, worst inverse norm, offending matrix).
    """
    n = Js.shape[1]
    if n == 1:
        lo, hi = float(Js.min()), float(Js.max())
        if lo <= 0 <= hi:
            return False, math.inf, np.array([[0.0]])
        worst = 1.0 / min(abs(lo), abs(hi))
        M = np.array([[lo if abs(lo) < abs(hi) else hi]])
        return worst <= kappa * (1 + 1e-12), worst, M
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(len(Js)), CLARKE_HULL_SAMPLES)
    Ms = np.concatenate([Js, np.einsum("sk,kij->sij", weights, Js)])
    worst, worst_M = 0.0, None
    for M in Ms:
        nrm = math.inf if abs(np.linalg.det(M)) <= TAU_DET else _inv_norm(M)
        if nrm > worst:
            worst, worst_M = nrm, M
    return worst <= kappa * (1 + 1e-12), worst, worst_M


def certify_pourciau(f: Mapping, region: Region, kappa: float, plan: SamplingPlan) -> Certificate:
    """Local Lipschitz continuity, then invertible sampled Clarke Jacobians with |M^-1| <= kappa."""
    if f.dim_in != f.dim_out:
        raise MappingError("Pourciau certificates need n = m")
    pts = region.points()
    lips = ordered_map(lambda x: estimate_lip(f, x, plan), pts)
    for x, lip in zip(pts, lips):
        if math.isinf(lip.value):
            rec = PointRecord(tuple(x), False, "locally-lipschitz", {"lip": "inf"}, {"lip": lip.to_dict()})
            return _assemble("pourciau", f, region, [rec], {"kappa": kappa}, False, plan)
    if f.jacobian is None:
        return _inconclusive("pourciau", f, region, ["analytic Jacobian off a finite exclusion set"], plan=plan)

    def check(item) -> PointRecord:
        x, lip = item
        Js = sampled_clarke_jacobians(f, x, plan)
        ok, worst, M = clarke_check(Js, kappa, plan.seed)
        values = {"lip": lip.value, "inverse_norm": worst}
        checks = {"clarke_samples": len(Js)}
        if not ok:
            checks["offending_matrix"] = M.tolist()
            return PointRecord(tuple(x), False, "clarke-jacobian", values, checks)
        return PointRecord(tuple(x), True, None, values, checks)

    records = ordered_map(check, list(zip(pts, lips)))
    return _assemble("pourciau", f, region, records, {"kappa": kappa}, True, plan)


# ---------------------------------------------------------------- estimators

def certify_estimators(f: Mapping, family: EstimatorFamily, region: Region, plan: SamplingPlan,
                       mu: Optional[float] = None) -> Certificate:
    """Strict mu-estimators h_x that are strongly regular, with sigma_f = min lop h_x(x) > mu."""
    mu = family.mu if mu is None else float(mu)
    if f.dim_in != f.dim_out:
        raise MappingError("estimator certificates need n = m")
    notes = []
    if family.trivial:
        notes.append("trivial family h_x = f: the certificate rests on f alone")

    def check(x: np.ndarray) -> PointRecord:
        h = family.at(x)
        audit = verify_mu_estimator(f, h, x, mu, plan)
        values: dict[str, Any] = {"estimator": h.name}
        checks: dict[str, Any] = {"audit": audit.to_dict()}
        if audit.lip_residual is not None:
            values["lip_residual"] = audit.lip_residual.value
        if not audit.passed:
            return PointRecord(tuple(x), False, "strict-estimator", values, checks)
        sr = strong_regularity_check(h, x, plan)
        values.update(lop=sr.lop.value, reg=sr.reg.value, inj=sr.inj.value)
        checks["strong_regularity"] = sr.to_dict()
        checks["transferred_lop"] = transfer_openness(sr.lop.value, mu).to_dict()
        checks["transferred_inj"] = transfer_injectivity(sr.inj.value, mu).to_dict()
        if sr.warning:
            checks["warning"] = sr.warning
        if not sr.passed:
            return PointRecord(tuple(x), False, "strong-regularity", values, checks)
        return PointRecord(tuple(x), True, None, values, checks)

    records = ordered_map(check, region.points())
    lops = [r.values.get("lop") for r in records]
    known = [(v, r.point) for v, r in zip(lops, records) if v is not None]
    sigma, where = min(known) if known else (math.nan, None)
    constants = {"mu": mu, "sigma_f": sigma}
    ok = bool(known) and sigma > mu
    return _assemble("estimators", f, region, records, constants, ok, plan, notes,
                     fail_tag="uniform-openness", fail_point=where)


# ----------------------------------------------------------- convex compacta

def certify_convex_compacta(f: Mapping, region: Region, plan: SamplingPlan, mu: float = 0.0,
                            family: Optional[EstimatorFamily] = None, sphere_count: int = 16,
                            eps_factor: float = 0.05) -> Certificate:
    """Estimators f(x) + h_x(. - x) with DC-scalarized h_x; flat_star_f = min dist(0, D⋆h_x(0)(S)) > mu.

    Condition (C) is checked and reported at every point. Where it fails, the
    openness it stands for, lop h_x(0) >= flat_star(h_x), is checked directly
    on samples instead, and the record says so.
    """
    if family is None:
        try:
            family = translated_family(f, mu)
        except MappingError:
            return _inconclusive("convex_compacta", f, region, ["DC scalarization data"], plan=plan)
    n = f.dim_in
    origin = np.zeros(n)
    notes = []

    def check(x: np.ndarray) -> PointRecord:
        try:
            hp = family.ph_at(x)
        except MappingError:
            hp = None
        if hp is None or hp.scalarization is None:
            return PointRecord(tuple(x), False, "scalarization")
        values: dict[str, Any] = {"estimator": hp.name}
        checks: dict[str, Any] = {}
        fs = flat_star(hp, origin, sphere_count)
        values["flat_star"] = fs.value
        checks["flat_star"] = fs.to_dict()
        if fs.all_empty:
            return PointRecord(tuple(x), False, "flat-star-degenerate", values, checks)
        eps = eps_factor * fs.value
        cc = condition_C_check(hp, origin, plan.radii[-1], plan.directions_per_sphere, eps, sphere_count)
        checks["condition_C"] = cc.to_dict()
        values["condition_C"] = "PASS" if cc.passed else "FAIL"
        if not cc.passed and fs.value > mu:
            lop, _ = estimate_lop(hp, origin, plan)
            fallback = lop.value >= fs.value * (1 - OPENNESS_FALLBACK_SLACK)
            checks["openness_fallback"] = {"lop": lop.to_dict(), "required": fs.value * (1 - OPENNESS_FALLBACK_SLACK),
                                           "verdict": "PASS" if fallback else "FAIL"}
            values["lop_fallback"] = lop.value
            if not fallback:
                return PointRecord(tuple(x), False, "condition-C", values, checks)
        inj = estimate_inj(hp, origin, plan)
        values["inj"] = inj.value
        checks["inj"] = inj.to_dict()
        if not inj.value > mu:
            return PointRecord(tuple(x), False, "injectivity", values, checks)
        audit = verify_mu_estimator(f, family.at(x), x, mu, plan)
        checks["audit"] = audit.to_dict()
        if not audit.passed:
            return PointRecord(tuple(x), False, "strict-estimator", values, checks)
        return PointRecord(tuple(x), True, None, values, checks)

    records = ordered_map(check, region.points())
    missing = [r for r in records if r.hypothesis in ("scalarization", "flat-star-degenerate")]
    if missing:
        where = [list(r.point) for r in missing]
        return _inconclusive("convex_compacta", f, region,
                             [f"DC scalarization with a non-empty star-coquasiderivative at {where}"],
                             records, {"mu": mu}, plan)
    if any(r.values.get("condition_C") == "FAIL" for r in records):
        notes.append("condition (C) failed at some points; openness there was verified on samples instead")
    stars = [(r.values["flat_star"], r.point) for r in records]
    flat, where = min(stars)
    constants = {"mu": mu, "flat_star_f": flat}
    return _assemble("convex_compacta", f, region, records, constants, flat > mu, plan, notes,
                     fail_tag="flat-star", fail_point=where)


# -------------------------------------------------------------- coderivative

def certify_coderivative(f: Mapping, region: Region, alpha_hat: float, gamma: float, plan: SamplingPlan,
                         eta: Optional[float] = None, exponent: int = 2) -> Certificate:
    """Local hypomonotonicity and <J^T v, v> >= alpha_hat |v|^2 around every grid point."""
    if alpha_hat <= 0:
        raise ValueError("alpha_hat must be positive")
    if f.jacobian is None:
        return _inconclusive("coderivative", f, region, ["analytic Jacobian off a finite exclusion set"], plan=plan)
    eta = plan.radii[0] if eta is None else float(eta)

    def check(x: np.ndarray) -> PointRecord:
        hypo = hypomonotonicity_check(f, x, eta, gamma, plan, exponent)
        pd = coderivative_posdef_check(f, x, eta, alpha_hat, plan)
        values = {"hypomonotone_worst": hypo.worst, "posdef_min": pd.min_value}
        checks = {"hypomonotonicity": hypo.to_dict(), "posdef": pd.to_dict()}
        if not hypo.passed:
            return PointRecord(tuple(x), False, "hypomonotone", values, checks)
        if not pd.passed:
            return PointRecord(tuple(x), False, "coderivative-posdef", values, checks)
        return PointRecord(tuple(x), True, None, values, checks)

    records = ordered_map(check, region.points())
    constants = {"alpha_hat": alpha_hat, "gamma": gamma, "eta": eta, "hypo_exponent": exponent,
                 "bound_candidates": {"alpha_hat": alpha_hat, "reciprocal": 1.0 / alpha_hat}}
    notes = ["the inverse constant is stated as alpha_hat in one reading and 1/alpha_hat in the other; "
             "both are reported and 1/alpha_hat is used as the bound"]
    if any(r.checks["posdef"]["one_sided_heuristic_at"] for r in records):
        notes.append("one-sided Jacobians stood in for the coderivative at kinks (heuristic)")
    return _assemble("coderivative", f, region, records, constants, True, plan, notes)
