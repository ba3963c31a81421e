"""Deterministic sampling schedules: Halton points mapped into balls and spheres."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Any

import numpy as np
from scipy.special import ndtri

from .config import AUDIT_RADIUS_FLOOR, DEFAULT_RADII, EXCLUSION_MARGIN

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


class PlanError(ValueError):
    pass


def halton(count: int, dim: int, skip: int = 0) -> np.ndarray:
    """Unscrambled Halton points in [0, 1)^dim, indices skip+1 .. skip+count."""
    if dim > len(_PRIMES):
        raise PlanError(f"Halton dimension {dim} too large")
    idx = np.arange(skip + 1, skip + count + 1, dtype=np.int64)
    out = np.empty((count, dim))
    for j, base in enumerate(_PRIMES[:dim]):
        i = idx.copy()
        f = 1.0
        r = np.zeros(count)
        while np.any(i > 0):
            f /= base
            r += f * (i % base)
            i //= base
        out[:, j] = r
    return out


def sphere_directions(n: int, count: int, offset: float = 0.0) -> np.ndarray:
    """Unit vectors: exactly {-1, +1} for n = 1, rotated even angles for n = 2,
    a Fibonacci lattice for n = 3, Gaussian-mapped Halton points beyond."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = 2 * np.pi * (np.arange(count) + offset) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5**0.5) * k + 2 * np.pi * offset
        s = np.sqrt(1 - z * z)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    g = ndtri(np.clip(halton(count, n, skip=int(offset * 1000)), 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def unit_ball(u: np.ndarray, n: int) -> np.ndarray:
    """Map points of [0,1)^(n+1) (or [0,1) for n = 1) into the closed unit ball."""
    if n == 1:
        return 2 * u[:, :1] - 1
    g = ndtri(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * u[:, n:n + 1] ** (1.0 / n)


def _coords(n: int) -> int:
    return 1 if n == 1 else n + 1


@dataclass(frozen=True)
class SamplingPlan:
    radii: tuple[float, ...] = DEFAULT_RADII
    pairs_per_radius: int = 256
    directions_per_sphere: int = 16
    seed: int = 0
    margin: float = EXCLUSION_MARGIN
    targets: int = 4  # interior covering targets per point, on top of the sphere ones

    def __post_init__(self) -> None:
        r = np.asarray(self.radii, dtype=float)
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise PlanError(f"radii must be positive and strictly decreasing: {self.radii}")
        if self.pairs_per_radius < 16 or self.directions_per_sphere < 16:
            raise PlanError("pairs_per_radius and directions_per_sphere must be >= 16")
        if self.margin < 0:
            raise PlanError("margin must be non-negative")
        object.__setattr__(self, "radii", tuple(float(x) for x in r))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SamplingPlan":
        d = dict(d)
        if "radii" in d:
            d["radii"] = tuple(d["radii"])
        return cls(**d)

    @classmethod
    def from_file(cls, path: str) -> "SamplingPlan":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["radii"] = list(self.radii)
        return d

    def refined(self, floor: float = AUDIT_RADIUS_FLOOR) -> "SamplingPlan":
        """Same plan with the ladder continued by decades down to ``floor``."""
        radii = list(self.radii)
        while radii[-1] / 10 >= floor * (1 - 1e-12):
            radii.append(float(f"{radii[-1] / 10:.12g}"))  # 1e-06, not 1.0000000000000002e-06
        return replace(self, radii=tuple(radii))

    def unit_pairs(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Pairs of points in the unit ball, shared by every radius and center."""
        c = _coords(n)
        u = halton(self.pairs_per_radius, 2 * c, skip=self.seed * self.pairs_per_radius)
        return unit_ball(u[:, :c], n), unit_ball(u[:, c:], n)

    def pairs(self, center: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.unit_pairs(len(center))
        return center + r * a, center + r * b

    def neighborhood(self, center: np.ndarray, r: float) -> np.ndarray:
        """The center followed by D points of the ball of radius r."""
        n = len(center)
        u = halton(self.directions_per_sphere, _coords(n), skip=7919 + self.seed * 131)
        return np.vstack([center, center + r * unit_ball(u, n)])
