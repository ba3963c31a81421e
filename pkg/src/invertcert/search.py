"""Preimage search in balls.

Many independent problems "find z in ball(c_i, r_i) with f(z) = y_i" are
solved together so that every mapping evaluation is a single vectorized
batch. Multistart ranking picks the starts; 1-D problems are first bracketed
and bisected; otherwise one Nelder-Mead simplex per problem runs in lockstep,
each phase followed by a damped finite-difference Newton polish.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .mapping import Mapping
from .sampling import halton, unit_ball

RESTARTS = 4

Objective = Callable[[np.ndarray, np.ndarray], np.ndarray]


def batch_nelder_mead(
    fun: Objective,
    x0: np.ndarray,
    step: np.ndarray,
    ftol: float,
    xtol: np.ndarray,
    maxiter: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Minimize B objectives at once; ``fun(idx, Z)`` evaluates problems ``idx`` at rows of Z.

    A problem stops once its best value is <= ftol or its simplex is smaller
    than its xtol. Returns the best vertex and value per problem.
    """
    B, n = x0.shape
    every = np.arange(B)
    S = np.repeat(x0[:, None, :], n + 1, axis=1)
    for j in range(n):
        S[:, j + 1, j] += step
    F = np.stack([fun(every, S[:, j]) for j in range(n + 1)], axis=1)
    active = np.ones(B, dtype=bool)
    for _ in range(maxiter):
        order = np.argsort(F, axis=1, kind="stable")
        S = np.take_along_axis(S, order[:, :, None], axis=1)
        F = np.take_along_axis(F, order, axis=1)
        size = np.abs(S[:, 1:] - S[:, :1]).max(axis=(1, 2))
        active &= (F[:, 0] > ftol) & (size > xtol)
        a = np.flatnonzero(active)
        if a.size == 0:
            break
        Sa, Fa = S[a], F[a]
        worst, f_worst = Sa[:, -1], Fa[:, -1]
        f_second = Fa[:, -2]
        c = Sa[:, :-1].mean(axis=1)
        xr = 2 * c - worst
        fr = fun(a, xr)
        new_x = xr.copy()
        new_f = fr.copy()
        shrink = np.zeros(a.size, dtype=bool)

        m = fr < Fa[:, 0]
        if m.any():
            xe = 3 * c[m] - 2 * worst[m]
            fe = fun(a[m], xe)
            take = fe < fr[m]
            new_x[m] = np.where(take[:, None], xe, xr[m])
            new_f[m] = np.where(take, fe, fr[m])

        m = (fr >= f_second) & (fr < f_worst)
        if m.any():
            xc = 0.5 * (c[m] + xr[m])
            fc = fun(a[m], xc)
            ok = fc <= fr[m]
            new_x[m] = xc
            new_f[m] = fc
            shrink[np.flatnonzero(m)[~ok]] = True

        m = fr >= f_worst
        if m.any():
            xc = 0.5 * (c[m] + worst[m])
            fc = fun(a[m], xc)
            ok = fc < f_worst[m]
            new_x[m] = xc
            new_f[m] = fc
            shrink[np.flatnonzero(m)[~ok]] = True

        keep = ~shrink
        S[a[keep], -1] = new_x[keep]
        F[a[keep], -1] = new_f[keep]
        if shrink.any():
            s = a[shrink]
            S[s, 1:] = S[s, :1] + 0.5 * (S[s, 1:] - S[s, :1])
            for j in range(1, n + 1):
                F[s, j] = fun(s, S[s, j])
    best = np.argmin(F, axis=1)
    return S[np.arange(B), best], F[np.arange(B), best]


def project_ball(Z: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    d = Z - centers
    nd = np.linalg.norm(d, axis=1)
    scale = np.where(nd > radii, radii / np.where(nd > 0, nd, 1.0), 1.0)
    return centers + d * scale[:, None]


def start_template(n: int) -> np.ndarray:
    """3^n * 16 multistart points in the closed unit ball (center first)."""
    count = 3**n * 16
    if n == 1:
        return np.linspace(-1.0, 1.0, count)[:, None]
    pts = unit_ball(halton(count - 1, n + 1, skip=0), n)
    return np.vstack([np.zeros(n), pts])


def newton_polish(
    f: Mapping,
    x: np.ndarray,
    res: np.ndarray,
    centers: np.ndarray,
    radii: np.ndarray,
    targets: np.ndarray,
    tol: float,
    iters: int = 40,
) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton steps with forward-difference Jacobians, kept inside each ball.

    Steps that do not reduce the residual are halved up to eight times and
    otherwise dropped, so the result is never worse than the input.
    """
    x, res = x.copy(), res.copy()
    B, n = x.shape
    if f.dim_out != n:
        return x, res
    eye = np.eye(n)
    for _ in range(iters):
        a = np.flatnonzero(res > tol)
        if a.size == 0:
            break
        xa = x[a]
        fa = f.batch(xa)
        h = np.maximum(1e-8 * radii[a], 1e-13 * np.maximum(1.0, np.abs(xa).max(axis=1)))
        # step inward where possible so difference points stay in the ball
        sgn = np.where(xa - centers[a] > 0, -1.0, 1.0)
        probes = xa[:, None, :] + (sgn * h[:, None])[:, :, None] * eye[None]
        fp = f.batch(probes.reshape(-1, n)).reshape(a.size, n, n)
        J = ((fp - fa[:, None, :]) / (sgn * h[:, None])[:, :, None]).transpose(0, 2, 1)
        rhs = targets[a] - fa
        dx = np.einsum("bij,bj->bi", np.linalg.pinv(J), rhs)
        t = np.ones(a.size)
        done = np.zeros(a.size, dtype=bool)
        for _ in range(8):
            cand = project_ball(xa + t[:, None] * dx, centers[a], radii[a])
            r_new = np.linalg.norm(f.batch(cand) - targets[a], axis=1)
            ok = ~done & (r_new < res[a])
            x[a[ok]] = cand[ok]
            res[a[ok]] = r_new[ok]
            done |= ok
            if done.all():
                break
            t = np.where(done, t, 0.5 * t)
        if not done.any():
            break
    return x, res


def _bracket_1d(f: Mapping, grid: np.ndarray, g: np.ndarray, y: np.ndarray, iters: int = 200):
    """Bisection on the first sign change of f - y along each sorted start grid.

    Exact for continuous scalar maps; where f jumps the bisection just lands on
    the jump and the caller falls back to the simplex search.
    """
    B = grid.shape[0]
    change = (g[:, :-1] * g[:, 1:]) <= 0
    has = change.any(axis=1)
    j = np.argmax(change, axis=1)
    rows = np.arange(B)
    lo, hi = grid[rows, j], grid[rows, j + 1]
    g_lo = g[rows, j]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if not np.any((mid != lo) & (mid != hi)):
            break
        g_mid = f.batch(mid[:, None])[:, 0] - y
        left = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(left, mid, lo)
        g_lo = np.where(left, g_mid, g_lo)
        hi = np.where(left, hi, mid)
    cand = np.stack([lo, hi], axis=1)
    res = np.abs(f.batch(cand.reshape(-1, 1))[:, 0].reshape(B, 2) - y[:, None])
    k = np.argmin(res, axis=1)
    bx, bf = cand[rows, k], res[rows, k]
    return bx, np.where(has, bf, np.inf)


def find_preimages(
    f: Mapping,
    centers: np.ndarray,
    radii: np.ndarray,
    targets: np.ndarray,
    tol: float,
    restarts: int = RESTARTS,
    maxiter: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """For each i search ball(centers[i], radii[i]) for z with ||f(z) - targets[i]|| <= tol.

    Starts are ranked by their residual and the ``restarts`` best are tried in
    turn. Returns the best point found and its residual per problem.
    """
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    targets = np.asarray(targets, dtype=float)
    B, n = centers.shape
    tpl = start_template(n)
    keys = np.hstack([centers, radii[:, None]])
    groups, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    starts = groups[:, None, :n] + groups[:, n, None, None] * tpl[None]
    f_starts = f.batch(starts.reshape(-1, n)).reshape(len(groups), len(tpl), -1)
    res0 = np.linalg.norm(f_starts[inv] - targets[:, None, :], axis=2)
    rank = np.argsort(res0, axis=1, kind="stable")

    best_x = starts[inv, rank[:, 0]]
    best_f = res0[np.arange(B), rank[:, 0]]
    if n == 1 and f.dim_out == 1:
        bx, bf = _bracket_1d(f, starts[inv, :, 0], f_starts[inv, :, 0] - targets, targets[:, 0])
        better = bf < best_f
        best_x[better, 0] = bx[better]
        best_f[better] = bf[better]
    best_x, best_f = newton_polish(f, best_x, best_f, centers, radii, targets, tol)
    maxiter = maxiter or 100 + 100 * n
    step = radii * 2.0 / len(tpl) ** (1.0 / n)
    xtol = 1e-15 * np.maximum(1.0, np.abs(centers).max(axis=1)) + 1e-13 * radii

    for k in range(min(restarts, len(tpl))):
        todo = np.flatnonzero(best_f > tol)
        if todo.size == 0:
            break
        c_t, r_t, y_t = centers[todo], radii[todo], targets[todo]

        def fun(idx: np.ndarray, Z: np.ndarray) -> np.ndarray:
            P = project_ball(Z, c_t[idx], r_t[idx])
            return np.linalg.norm(f.batch(P) - y_t[idx], axis=1)

        x0 = starts[inv[todo], rank[todo, k]]
        xs, fs = batch_nelder_mead(fun, x0, step[todo], tol, xtol[todo], maxiter)
        better = fs < best_f[todo]
        best_x[todo[better]] = project_ball(xs[better], c_t[better], r_t[better])
        best_f[todo[better]] = fs[better]
        best_x, best_f = newton_polish(f, best_x, best_f, centers, radii, targets, tol)
    return best_x, best_f
