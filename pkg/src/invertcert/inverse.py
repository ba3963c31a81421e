"""Global inverse by residual contraction inside covering balls.

If f is alpha-covering, a point x with residual rho = |f(x) - y| has a
preimage of y within rho / alpha, so searching that ball for a point with
residual <= theta * rho always succeeds. Failure to find one means the
covering rate was optimistic or the iterate left the certified region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CONTRACTION, STALL_BUDGET
from .mapping import Mapping
from .sampling import halton
from .search import RESTARTS, find_preimages, start_template

DEFAULT_TAU = 1e-10


class StalledError(RuntimeError):
    """No contraction within the local-search budget; carries the best iterates."""

    def __init__(self, message: str, x: np.ndarray, residual: np.ndarray, stalled: np.ndarray):
        super().__init__(message)
        self.x = x
        self.residual = residual
        self.stalled = stalled


@dataclass(frozen=True)
class InverseTrace:
    x: np.ndarray  # (T, n)
    residual: np.ndarray  # (T,)
    iterations: np.ndarray  # accepted steps per target
    searches: np.ndarray  # local searches spent per target
    history: tuple[tuple[float, ...], ...]  # residual after every accepted step


def solve_inverse_traced(f: Mapping, Y, alpha: float, x0=None, tau: float = DEFAULT_TAU,
                         theta: float = CONTRACTION, budget: int = STALL_BUDGET) -> InverseTrace:
    """Solve f(x) = y for every row y of ``Y`` at once."""
    if f.dim_in != f.dim_out:
        raise ValueError("inverse solving needs n = m")
    if not (alpha > 0 and tau > 0 and 0 < theta < 1):
        raise ValueError("need alpha > 0, tau > 0 and 0 < theta < 1")
    n = f.dim_in
    Y = np.asarray(Y, dtype=float).reshape(-1, n)
    T = len(Y)
    x0 = np.zeros(n) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    X = np.repeat(x0.reshape(1, n), T, axis=0)
    rho = np.linalg.norm(f.batch(X) - Y, axis=1)
    history = [[float(r)] for r in rho]
    steps = np.zeros(T, dtype=int)
    spent = np.zeros(T, dtype=int)
    restarts = np.full(T, RESTARTS)
    max_restarts = len(start_template(n))
    while True:
        todo = np.flatnonzero(rho > tau)
        if todo.size == 0:
            break
        over = todo[spent[todo] >= budget]
        if over.size:
            raise StalledError(
                f"no residual contraction for {over.size} target(s) within {budget} local searches; "
                "the covering rate may be optimistic or the path left the certified region",
                X, rho, over,
            )
        # targets sharing a restart count are searched together
        for k in np.unique(restarts[todo]):
            idx = todo[restarts[todo] == k]
            radii = rho[idx] / alpha
            z, res = find_preimages(f, X[idx], radii, Y[idx], tau, restarts=int(k))
            spent[idx] += int(k)
            ok = res <= theta * rho[idx]
            acc = idx[ok]
            X[acc] = z[ok]
            rho[acc] = res[ok]
            steps[acc] += 1
            for i in acc:
                history[i].append(float(rho[i]))
            # widen the multistart for targets that did not contract
            rej = idx[~ok]
            restarts[rej] = np.minimum(2 * restarts[rej], max_restarts)
    return InverseTrace(X, rho, steps, spent, tuple(tuple(h) for h in history))


def solve_inverse(f: Mapping, y, alpha: float, x0=None, tau: float = DEFAULT_TAU) -> np.ndarray:
    """x with |f(x) - y| <= tau. A single target gives shape (n,), a stack gives (T, n)."""
    y = np.asarray(y, dtype=float)
    trace = solve_inverse_traced(f, y, alpha, x0, tau)
    if y.ndim <= 1 and y.size == f.dim_out:
        return trace.x[0]
    return trace.x


@dataclass(frozen=True)
class InverseAudit:
    bound: float
    max_ratio: float
    pairs: int
    violations: tuple[dict, ...]
    slack: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "max_ratio": self.max_ratio,
            "pairs": self.pairs,
            "slack": self.slack,
            "violations": list(self.violations),
            "verdict": "PASS" if self.passed else "FAIL",
        }


def audit_inverse_lipschitz(f: Mapping, bound: float, probe_pairs: int, lo, hi, alpha: float,
                            x0=None, tau: float = DEFAULT_TAU, seed: int = 0) -> InverseAudit:
    """Check |x1 - x2| <= L |y1 - y2| + 2 tau / alpha on sampled pairs of the box [lo, hi]."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    n = len(lo)
    u = halton(probe_pairs, 2 * n, skip=seed * probe_pairs)
    Y1 = lo + (hi - lo) * u[:, :n]
    Y2 = lo + (hi - lo) * u[:, n:]
    X = solve_inverse_traced(f, np.vstack([Y1, Y2]), alpha, x0, tau).x
    X1, X2 = X[:probe_pairs], X[probe_pairs:]
    dx = np.linalg.norm(X1 - X2, axis=1)
    dy = np.linalg.norm(Y1 - Y2, axis=1)
    slack = 2 * tau / alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dy > 0, dx / dy, 0.0)
    bad = np.flatnonzero(dx > bound * dy + slack)
    violations = tuple(
        {"y1": Y1[i].tolist(), "y2": Y2[i].tolist(), "x1": X1[i].tolist(), "x2": X2[i].tolist(),
         "ratio": float(ratio[i])}
        for i in bad
    )
    return InverseAudit(bound, float(ratio.max()) if len(ratio) else math.nan, probe_pairs, violations, slack)
