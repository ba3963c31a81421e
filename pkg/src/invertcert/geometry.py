"""Convex compact polytopes in vertex representation.

Polytopes are immutable and canonical: the stored vertex tuple holds exactly
the extreme points, sorted lexicographically. The ambient dimension is capped
at three, which is what lets every operation here be exact (facet enumeration,
brute-force vertex enumeration of H-systems, face-wise nearest points).

The empty set is the distinguished value ``EMPTY``; it never appears as a
polytope with no vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Iterable, NamedTuple, Sequence, Union

import numpy as np
from scipy.spatial import ConvexHull

from .config import TAU_GEOM

MAX_DIM = 3


class GeometryError(ValueError):
    """Invalid geometric input (dimension mismatch, empty operand, ...)."""


class _EmptySet:
    _instance: ClassVar["_EmptySet | None"] = None
    is_empty = True

    def __new__(cls) -> "_EmptySet":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY"

    def __reduce__(self):
        return (_EmptySet, ())

    def to_json(self) -> str:
        return "empty"


EMPTY = _EmptySet()


def _tol(scale: float) -> float:
    return TAU_GEOM * max(1.0, scale)


def _dedup(points: np.ndarray, tol: float) -> np.ndarray:
    order = np.lexsort(points.T[::-1])
    pts = points[order]
    kept: list[np.ndarray] = []
    for p in pts:
        if kept and np.min(np.linalg.norm(np.asarray(kept) - p, axis=1)) <= tol:
            continue
        kept.append(p)
    return np.asarray(kept)


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _monotone_chain(pts: np.ndarray, tol: float) -> list[int]:
    """Indices of the 2-D hull in counter-clockwise order (collinear points dropped)."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    if len(order) <= 2:
        return list(order)
    scale = max(1.0, float(np.ptp(pts, axis=0).max()))
    eps = tol * scale

    def half(idx: Iterable[int]) -> list[int]:
        chain: list[int] = []
        for i in idx:
            while len(chain) >= 2:
                a, b = pts[chain[-2]], pts[chain[-1]]
                # cross / |b-a| is the distance of pts[i] from the line (a,b)
                if _cross(a, b, pts[i]) > eps * np.linalg.norm(b - a):
                    break
                chain.pop()
            chain.append(i)
        return chain

    lower = half(order)
    upper = half(order[::-1])
    return lower[:-1] + upper[:-1]


def _affine_frame(pts: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Centroid, in-hull basis (rows) and orthogonal complement (rows)."""
    c = pts.mean(axis=0)
    n = pts.shape[1]
    if len(pts) == 1:
        return c, np.zeros((0, n)), np.eye(n)
    _, s, vt = np.linalg.svd(pts - c)
    rank = int(np.sum(s > tol))
    return c, vt[:rank], vt[rank:]


def _extreme_points(points: np.ndarray) -> np.ndarray:
    scale = float(np.abs(points).max()) if points.size else 0.0
    tol = _tol(scale)
    pts = _dedup(points, tol)
    if len(pts) == 1:
        return pts
    c, basis, _ = _affine_frame(pts, tol)
    k = len(basis)
    if k == 0:
        return pts[:1]
    local = (pts - c) @ basis.T
    if k == 1:
        t = local[:, 0]
        keep = [int(np.argmin(t)), int(np.argmax(t))]
    elif k == 2:
        keep = _monotone_chain(local, tol)
    else:
        hull = ConvexHull(pts)
        keep = list(hull.vertices)
    out = pts[sorted(set(keep))]
    return out[np.lexsort(out.T[::-1])]


def _hull_normals(pts: np.ndarray, tol: float) -> np.ndarray:
    """Outward unit normals u with P = {x : <u,x> <= h_P(u)}; handles flat P."""
    n = pts.shape[1]
    c, basis, comp = _affine_frame(pts, tol)
    k = len(basis)
    normals = [comp, -comp] if len(comp) else []
    if k == 1:
        normals += [basis, -basis]
    elif k == 2:
        local = (pts - c) @ basis.T
        ring = _monotone_chain(local, tol)
        edge_normals = []
        for a, b in zip(ring, ring[1:] + ring[:1]):
            d = local[b] - local[a]
            edge_normals.append(np.array([d[1], -d[0]]) / np.linalg.norm(d))
        normals.append(np.asarray(edge_normals) @ basis)
    elif k == 3:
        hull = ConvexHull(pts)
        eq = hull.equations[:, :n]
        normals.append(eq / np.linalg.norm(eq, axis=1, keepdims=True))
    U = np.vstack(normals) if normals else np.zeros((0, n))
    # merge duplicate normals (coplanar triangles of a 3-D facet)
    rounded = np.round(U, 10)
    _, idx = np.unique(rounded, axis=0, return_index=True)
    return U[np.sort(idx)]


@dataclass(frozen=True)
class Polytope:
    """Non-empty convex polytope stored by its sorted extreme points."""

    vertices: tuple[tuple[float, ...], ...]
    is_empty: ClassVar[bool] = False

    def __post_init__(self) -> None:
        if not self.vertices:
            raise GeometryError("a Polytope needs at least one vertex; use EMPTY")
        dims = {len(v) for v in self.vertices}
        if len(dims) != 1:
            raise GeometryError("vertices of mixed dimension")
        (d,) = dims
        if not 1 <= d <= MAX_DIM:
            raise GeometryError(f"ambient dimension {d} outside 1..{MAX_DIM}")

    @classmethod
    def hull(cls, points: Union[Sequence[Sequence[float]], np.ndarray]) -> "Polytope":
        try:
            pts = np.atleast_2d(np.asarray(points, dtype=float))
        except (TypeError, ValueError):
            raise GeometryError("points must be a list of equal-length coordinate lists") from None
        if pts.ndim != 2 or not np.all(np.isfinite(pts)):
            raise GeometryError("points must be a list of finite coordinate lists")
        if pts.size == 0:
            raise GeometryError("hull of no points")
        if pts.shape[1] > MAX_DIM:
            raise GeometryError(f"ambient dimension {pts.shape[1]} outside 1..{MAX_DIM}")
        ext = _extreme_points(pts)
        return cls(tuple(tuple(float(c) for c in v) for v in ext))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Polytope":
        return cls.hull([[lo], [hi]])

    @classmethod
    def point(cls, p: Union[float, Sequence[float]]) -> "Polytope":
        return cls.hull([np.atleast_1d(np.asarray(p, dtype=float))])

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Polytope":
        corners = itertools.product(*zip(lo, hi))
        return cls.hull(list(corners))

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    @cached_property
    def array(self) -> np.ndarray:
        a = np.asarray(self.vertices, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def scale(self) -> float:
        return float(np.abs(self.array).max())

    @cached_property
    def normals(self) -> np.ndarray:
        return _hull_normals(self.array, _tol(self.scale))

    def support(self, v: Union[Sequence[float], np.ndarray]) -> np.ndarray | float:
        """Support value(s); ``v`` may be one direction or a stack of them."""
        v = np.asarray(v, dtype=float)
        vals = self.array @ v.T
        return vals.max(axis=0) if vals.ndim > 1 else float(vals.max())

    def contains(self, p: Sequence[float], tol: float | None = None) -> bool:
        p = np.asarray(p, dtype=float)
        tol = _tol(max(self.scale, float(np.abs(p).max()))) if tol is None else tol
        U = self.normals
        return bool(np.all(U @ p <= self.support(U) + tol))

    def __add__(self, other: "Polytope") -> "Polytope":
        return minkowski_sum(self, other)

    def scaled(self, lam: float) -> "Polytope":
        return Polytope.hull(lam * self.array)

    def translated(self, t: Sequence[float]) -> "Polytope":
        return Polytope.hull(self.array + np.asarray(t, dtype=float))

    def to_json(self) -> list[list[float]]:
        return [list(v) for v in self.vertices]


PolytopeLike = Union[Polytope, _EmptySet]


def from_json(obj) -> PolytopeLike:
    """Inverse of ``to_json``: a list of vertex lists, or the string "empty"."""
    if obj == "empty":
        return EMPTY
    if not isinstance(obj, list) or not obj:
        raise GeometryError(f"bad polytope JSON: {obj!r}")
    return Polytope.hull(obj)


def _require(P: PolytopeLike, what: str) -> Polytope:
    if P is EMPTY:
        raise GeometryError(f"{what}: empty polytope")
    return P  # type: ignore[return-value]


def _same_dim(A: Polytope, B: Polytope) -> None:
    if A.dim != B.dim:
        raise GeometryError(f"dimension mismatch: {A.dim} vs {B.dim}")


def support_value(P: PolytopeLike, v: Sequence[float]) -> float:
    P = _require(P, "support_value")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (P.dim,):
        raise GeometryError(f"direction of shape {v.shape} for a {P.dim}-D polytope")
    return P.support(v)


def minkowski_sum(A: PolytopeLike, B: PolytopeLike) -> Polytope:
    A = _require(A, "minkowski_sum")
    B = _require(B, "minkowski_sum")
    _same_dim(A, B)
    sums = (A.array[:, None, :] + B.array[None, :, :]).reshape(-1, A.dim)
    return Polytope.hull(sums)


def polytopes_equal(P: PolytopeLike, Q: PolytopeLike, tol: float = TAU_GEOM) -> bool:
    if P is EMPTY or Q is EMPTY:
        return P is Q
    if P.dim != Q.dim or len(P.vertices) != len(Q.vertices):
        return False
    tol = _tol(max(P.scale, Q.scale)) if tol == TAU_GEOM else tol
    d = np.linalg.norm(P.array[:, None, :] - Q.array[None, :, :], axis=2)
    return bool(d.min(axis=1).max() <= tol and d.min(axis=0).max() <= tol)


def is_subset(P: PolytopeLike, Q: PolytopeLike) -> bool:
    """Vertex-wise membership of P in Q (within the geometric tolerance)."""
    if P is EMPTY:
        return True
    if Q is EMPTY:
        return False
    _same_dim(P, Q)
    return all(Q.contains(v) for v in P.array)


@dataclass(frozen=True)
class PolytopePair:
    """A difference-of-sublinear representative (plus, minus)."""

    plus: Polytope
    minus: Polytope

    def __post_init__(self) -> None:
        _require(self.plus, "PolytopePair.plus")
        _require(self.minus, "PolytopePair.minus")
        _same_dim(self.plus, self.minus)

    @property
    def dim(self) -> int:
        return self.plus.dim

    def value(self, v: Sequence[float]) -> float:
        return self.plus.support(v) - self.minus.support(v)

    def shifted(self, C: Polytope) -> "PolytopePair":
        """An equivalent pair: (A + C, B + C)."""
        return PolytopePair(self.plus + C, self.minus + C)


def hormander_equivalent(p1: PolytopePair, p2: PolytopePair) -> bool:
    """(A, B) ~ (C, D) iff A + D = B + C."""
    if p1.dim != p2.dim:
        raise GeometryError(f"dimension mismatch: {p1.dim} vs {p2.dim}")
    return polytopes_equal(p1.plus + p2.minus, p1.minus + p2.plus)


def pontryagin_difference(A: PolytopeLike, B: PolytopeLike) -> PolytopeLike:
    """A ⋆ B = {x : x + B ⊆ A}, or EMPTY.

    Solved in H-form over the facet normals u of A,
    <x, u> <= h_A(u) - h_B(u), by enumerating every basic solution.
    """
    A = _require(A, "pontryagin_difference")
    B = _require(B, "pontryagin_difference")
    _same_dim(A, B)
    n = A.dim
    U = A.normals
    rhs = A.support(U) - B.support(U)
    tol = _tol(max(A.scale, B.scale))
    idx = np.array(list(itertools.combinations(range(len(U)), n)))
    M = U[idx]
    b = rhs[idx]
    ok = np.abs(np.linalg.det(M)) > 1e-12
    if not ok.any():
        return EMPTY
    X = np.linalg.solve(M[ok], b[ok][..., None])[..., 0]
    feasible = np.all(X @ U.T <= rhs + tol, axis=1)
    if not feasible.any():
        return EMPTY
    return Polytope.hull(X[feasible])


class OriginDistance(NamedTuple):
    value: float
    all_empty: bool


def _dist_to_polytope(P: Polytope) -> float:
    if P.contains(np.zeros(P.dim)):
        return 0.0
    V = P.array
    best = float(np.linalg.norm(V, axis=1).min())
    if len(V) >= 2:
        i, j = np.array(list(itertools.combinations(range(len(V)), 2))).T
        p, d = V[i], V[j] - V[i]
        t = np.clip(-np.einsum("ij,ij->i", p, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(p + t[:, None] * d, axis=1).min()))
    if P.dim == 3 and len(V) >= 3:
        tri = np.array(list(itertools.combinations(range(len(V)), 3)))
        a, b, c = V[tri[:, 0]], V[tri[:, 1]], V[tri[:, 2]]
        e1, e2 = b - a, c - a
        nrm = np.cross(e1, e2)
        area2 = np.einsum("ij,ij->i", nrm, nrm)
        good = area2 > 1e-24
        a, e1, e2, nrm, area2 = a[good], e1[good], e2[good], nrm[good], area2[good]
        # foot of the perpendicular from the origin onto each triangle's plane
        foot = (np.einsum("ij,ij->i", a, nrm) / area2)[:, None] * nrm
        w = foot - a
        s = np.einsum("ij,ij->i", np.cross(w, e2), nrm) / area2
        t = np.einsum("ij,ij->i", np.cross(e1, w), nrm) / area2
        inside = (s >= -1e-12) & (t >= -1e-12) & (s + t <= 1 + 1e-12)
        if inside.any():
            best = min(best, float(np.linalg.norm(foot[inside], axis=1).min()))
    return best


def distance_origin(members: Iterable[PolytopeLike]) -> OriginDistance:
    """Distance from 0 to a finite union of polytopes; EMPTY members are skipped."""
    dists = [_dist_to_polytope(P) for P in members if P is not EMPTY]
    if not dists:
        return OriginDistance(float("inf"), True)
    return OriginDistance(min(dists), False)
