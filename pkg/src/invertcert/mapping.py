"""Mappings under study, their DC scalarizations and estimator families.

A ``Mapping`` wraps a vectorized evaluator ``(N, n) -> (N, m)``. Optional
attachments:

* ``jacobian``: analytic Jacobian at a single point, valid off the finite
  ``exclusions`` list;
* ``directional``: ``z -> (v -> f'(z; v))`` as a positively homogeneous
  Mapping, itself carrying a ``scalarization``;
* ``scalarization``: ``z -> DCScalarization`` of ``v -> f'(z; v)``, i.e. for
  each direction w a polytope pair whose support-function difference equals
  the directional derivative of <w, f> at z.

Corpus parameters are embedded by value, so a Mapping is fully determined by
its construction arguments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import expr as _expr
from .config import EXCLUSION_MARGIN
from .geometry import GeometryError, Polytope, PolytopePair


class MappingError(ValueError):
    pass


class UnknownMappingError(MappingError, KeyError):
    pass


class MappingEvaluationError(MappingError, ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class DCScalarization:
    """w -> (P_w+, P_w-) for a positively homogeneous mapping R^n -> R^m."""

    dim_in: int
    dim_out: int
    pair_fn: Callable[[np.ndarray], PolytopePair]

    def pair(self, w: Sequence[float]) -> PolytopePair:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if w.shape != (self.dim_out,):
            raise MappingError(f"direction of shape {w.shape}, expected ({self.dim_out},)")
        return self.pair_fn(w)

    def value(self, w: Sequence[float], v: Sequence[float]) -> float:
        """supp(v, P_w+) - supp(v, P_w-): the directional derivative of <w, h>."""
        return self.pair(w).value(np.atleast_1d(np.asarray(v, dtype=float)))

    @classmethod
    def from_table(cls, entries: Sequence[tuple[Sequence[float], PolytopePair]]) -> "DCScalarization":
        """Tabulated pairs; a query w = lam * w_k (lam > 0) is answered by scaling."""
        ws = [np.atleast_1d(np.asarray(w, dtype=float)) for w, _ in entries]
        pairs = [p for _, p in entries]
        if not ws:
            raise MappingError("empty DC table")
        n, m = pairs[0].dim, len(ws[0])
        if any(len(w) != m or not np.any(w) for w in ws) or any(p.dim != n for p in pairs):
            raise MappingError("DC table entries must share dimensions and have nonzero w")

        def lookup(w: np.ndarray) -> PolytopePair:
            for wk, pk in zip(ws, pairs):
                nk = np.linalg.norm(wk)
                lam = float(w @ wk) / nk**2
                if lam > 0 and np.allclose(w, lam * wk, atol=1e-12 * max(1.0, nk)):
                    return PolytopePair(pk.plus.scaled(lam), pk.minus.scaled(lam))
            raise MappingError(f"no DC data for direction {w.tolist()}")

        return cls(n, m, lookup)


def linear_dc(A: np.ndarray) -> DCScalarization:
    """<w, Av> = supp(v, {A^T w}) - supp(v, {0})."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    zero = Polytope.point(np.zeros(n))
    return DCScalarization(n, m, lambda w: PolytopePair(Polytope.point(A.T @ w), zero))


def _ph1d_pair(a: float, b: float) -> PolytopePair:
    # g(v) = a v (v >= 0), b v (v < 0): sublinear iff b <= a
    zero = Polytope.point([0.0])
    if b <= a:
        return PolytopePair(Polytope.interval(b, a), zero)
    return PolytopePair(zero, Polytope.interval(-b, -a))


def ph_scalar_dc(theta_plus: float, theta_minus: float) -> DCScalarization:
    return DCScalarization(1, 1, lambda w: _ph1d_pair(w[0] * theta_plus, w[0] * theta_minus))


@dataclass(frozen=True, eq=False)
class Mapping:
    name: str
    dim_in: int
    dim_out: int
    func: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exclusions: tuple[tuple[float, ...], ...] = ()
    directional: Optional[Callable[[np.ndarray], "Mapping"]] = None
    scalarization: Optional[Callable[[np.ndarray], DCScalarization]] = None
    meta: dict[str, Any] = field(default_factory=dict)

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim_in)
        with np.errstate(all="ignore"):
            Y = np.asarray(self.func(X), dtype=float).reshape(len(X), self.dim_out)
        if not np.all(np.isfinite(Y)):
            bad = X[~np.all(np.isfinite(Y), axis=1)][0]
            raise MappingEvaluationError(f"{self.name} is not finite at {bad.tolist()}")
        return Y

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return self.batch(x)
        return self.batch(x.reshape(1, self.dim_in))[0]

    def near_exclusion(self, X: np.ndarray, margin: float = EXCLUSION_MARGIN) -> np.ndarray:
        """Boolean mask over the rows of X: within ``margin`` of an exclusion point."""
        X = np.asarray(X, dtype=float).reshape(-1, self.dim_in)
        if not self.exclusions:
            return np.zeros(len(X), dtype=bool)
        E = np.asarray(self.exclusions, dtype=float)
        d = np.linalg.norm(X[:, None, :] - E[None, :, :], axis=2)
        return d.min(axis=1) <= margin

    def jac(self, x) -> np.ndarray:
        if self.jacobian is None:
            raise MappingError(f"{self.name} has no analytic Jacobian")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.asarray(self.jacobian(x), dtype=float).reshape(self.dim_out, self.dim_in)

    def with_name(self, name: str) -> "Mapping":
        return Mapping(name, self.dim_in, self.dim_out, self.func, self.jacobian,
                       self.exclusions, self.directional, self.scalarization, dict(self.meta))


def _scalar(name: str, g: Callable[[np.ndarray], np.ndarray],
            dg: Optional[Callable[[float], float]] = None, **kw) -> Mapping:
    jac = None if dg is None else (lambda x: np.array([[dg(float(x[0]))]]))
    return Mapping(name, 1, 1, lambda X: g(X[:, 0])[:, None], jac, **kw)


def linear(A, name: Optional[str] = None) -> Mapping:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    A.setflags(write=False)
    dc = linear_dc(A)

    def direc(z: np.ndarray) -> Mapping:
        return lin

    lin = Mapping(
        name or f"linear({A.tolist()})", n, m,
        lambda X: X @ A.T,
        lambda x: A,
        directional=direc,
        scalarization=lambda z: dc,
        meta={"matrix": A.tolist()},
    )
    return lin


def identity(dim: int = 1) -> Mapping:
    return linear(np.eye(dim), name="identity" if dim == 1 else f"identity({dim})")


def ph_scalar(theta_plus: float, theta_minus: float, name: Optional[str] = None) -> Mapping:
    tp, tm = float(theta_plus), float(theta_minus)
    dc0 = ph_scalar_dc(tp, tm)
    lin_p, lin_m = linear([[tp]]), linear([[tm]])

    def direc(z: np.ndarray) -> Mapping:
        z = float(np.atleast_1d(z)[0])
        return lin_p if z > 0 else lin_m if z < 0 else h

    def scal(z: np.ndarray) -> DCScalarization:
        return direc(z).scalarization(np.zeros(1))

    h = _scalar(
        name or f"ph_scalar({tp}, {tm})",
        lambda t: np.where(t >= 0, tp * t, tm * t),
        lambda t: tp if t > 0 else tm,
        exclusions=((0.0,),),
        directional=direc,
        scalarization=lambda z: dc0 if float(np.atleast_1d(z)[0]) == 0 else scal(z),
        meta={"injective": tp * tm > 0},
    )
    return h


def _attach_smooth(f: Mapping) -> Mapping:
    """C^1 mappings: the directional derivative at z is the linear map J(z)."""
    return replace(f, directional=lambda z: linear(f.jac(z)),
                   scalarization=lambda z: linear_dc(f.jac(z)))


def cubic() -> Mapping:
    return _attach_smooth(_scalar("cubic", lambda t: t**3, lambda t: 3 * t * t))


def cubic_perturbed(zeta: float) -> Mapping:
    z2 = float(zeta) ** 2
    return _attach_smooth(
        _scalar(f"cubic_perturbed({zeta})", lambda t: t**3 - z2 * t, lambda t: 3 * t * t - z2)
    )


def monotone_sine(a: float, b: float) -> Mapping:
    a, b = float(a), float(b)
    return _attach_smooth(
        _scalar(f"monotone_sine({a}, {b})", lambda t: a * t + b * np.sin(t), lambda t: a + b * np.cos(t))
    )


def abs_plus_linear(c: float) -> Mapping:
    c = float(c)
    return ph_scalar(1 + c, c - 1, name=f"abs_plus_linear({c})")


def _sqrt_case_eval(t: np.ndarray) -> np.ndarray:
    return np.where(np.abs(t) <= 1, np.sign(t) * np.sqrt(np.abs(t)), t)


def sqrt_case() -> Mapping:
    return _scalar(
        "sqrt_case",
        _sqrt_case_eval,
        lambda t: 1 / (2 * np.sqrt(abs(t))) if abs(t) < 1 else 1.0,
        exclusions=((-1.0,), (0.0,), (1.0,)),
        meta={"locally_lipschitz": False},
    )


def sqrt_case_inverse() -> Mapping:
    return _scalar(
        "sqrt_case_inverse",
        lambda y: np.where(np.abs(y) <= 1, np.sign(y) * y * y, y),
        lambda y: 2 * abs(y) if abs(y) < 1 else 1.0,
        exclusions=((-1.0,), (1.0,)),
    )


def _params(params: dict, *names: str, **defaults) -> list:
    unknown = set(params) - set(names) - set(defaults)
    if unknown:
        raise MappingError(f"unknown parameter(s): {sorted(unknown)}")
    out = []
    for n in names:
        if n not in params:
            raise MappingError(f"missing parameter {n!r}")
        out.append(params[n])
    out += [params.get(k, v) for k, v in defaults.items()]
    return out


def _number(v, what: str) -> float:
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise MappingError(f"{what} must be a number, got {v!r}") from None
    if not np.isfinite(x):
        raise MappingError(f"{what} must be finite")
    return x


def _no_params(factory: Callable[[], Mapping]) -> Callable[[dict], Mapping]:
    def build(p: dict) -> Mapping:
        _params(p)
        return factory()

    return build


def _build_ph(p: dict) -> Mapping:
    tp, tm = (_number(v, k) for v, k in zip(_params(p, "theta_plus", "theta_minus"), ("theta_plus", "theta_minus")))
    if tp * tm <= 0:
        warnings.warn(f"ph_scalar({tp}, {tm}) is not injective (theta_plus * theta_minus <= 0)")
    return ph_scalar(tp, tm)


def _build_linear(p: dict) -> Mapping:
    (A,) = _params(p, "matrix")
    try:
        A = np.atleast_2d(np.asarray(A, dtype=float))
    except (TypeError, ValueError):
        raise MappingError("matrix must be a finite number or 2-D array") from None
    if A.ndim != 2 or not np.all(np.isfinite(A)):
        raise MappingError("matrix must be a finite number or 2-D array")
    return linear(A)


CORPUS: dict[str, tuple[Callable[[dict], Mapping], str]] = {
    "identity": (lambda p: identity(int(_params(p, dim=1)[0])), "x -> x on R^dim"),
    "linear": (_build_linear, "x -> A x"),
    "cubic": (_no_params(cubic), "x -> x^3"),
    "cubic_perturbed": (
        lambda p: cubic_perturbed(_number(_params(p, "zeta")[0], "zeta")),
        "x -> x^3 - zeta^2 x",
    ),
    "ph_scalar": (_build_ph, "theta_plus x (x >= 0), theta_minus x (x < 0)"),
    "sqrt_case": (_no_params(sqrt_case), "sgn(x) sqrt|x| on |x| <= 1, x outside"),
    "sqrt_case_inverse": (_no_params(sqrt_case_inverse), "sgn(y) y^2 on |y| <= 1, y outside"),
    "monotone_sine": (
        lambda p: monotone_sine(*(_number(v, k) for v, k in zip(_params(p, "a", "b"), "ab"))),
        "x -> a x + b sin x",
    ),
    "abs_plus_linear": (lambda p: abs_plus_linear(_number(_params(p, "c")[0], "c")), "x -> |x| + c x"),
}


def corpus_lookup(name: str, params: Optional[dict] = None) -> Mapping:
    if name not in CORPUS:
        raise UnknownMappingError(f"unknown corpus mapping {name!r}; known: {sorted(CORPUS)}")
    f = CORPUS[name][0](dict(params or {}))
    f.meta["corpus"] = name
    f.meta["params"] = dict(params or {})
    return f


def parse_mapping(text: str, dim_in: Optional[int] = None) -> Mapping:
    """Mapping from grammar source; n is the largest variable index unless declared."""
    ast = _expr.parse(text)
    used = _expr.max_var(ast)
    if dim_in is not None and used > dim_in:
        raise _expr.ExprDimensionError(f"x{used} used in a mapping declared on R^{dim_in}")
    n = dim_in or max(used, 1)
    m = len(ast.items) if isinstance(ast, _expr.Vector) else 1

    def func(X: np.ndarray) -> np.ndarray:
        Y = _expr.evaluate(ast, X)
        return Y.reshape(len(X), m)

    return Mapping(text, n, m, func, meta={"expr": _expr.to_text(ast), "ast": ast})


def mapping_from_spec(spec: dict) -> Mapping:
    """``{"expr": "..."}`` or ``{"corpus": name, "params": {...}}``.

    An optional ``"dc"`` list of ``{"w": [...], "plus": [[...]], "minus": [[...]]}``
    entries attaches a tabulated DC scalarization, used at every base point.
    """
    if "expr" in spec:
        f = parse_mapping(spec["expr"], spec.get("dim"))
    elif "corpus" in spec:
        f = corpus_lookup(spec["corpus"], spec.get("params"))
    else:
        raise MappingError("mapping spec needs 'expr' or 'corpus'")
    if "dc" in spec:
        table = dc_table(spec["dc"])
        if (table.dim_in, table.dim_out) != (f.dim_in, f.dim_out):
            raise MappingError("DC table dimensions do not match the mapping")
        f = replace(f, scalarization=lambda z: table)
    return f


def dc_table(entries: Sequence[dict]) -> DCScalarization:
    try:
        rows = [(e["w"], PolytopePair(Polytope.hull(e["plus"]), Polytope.hull(e["minus"]))) for e in entries]
    except GeometryError as e:
        raise MappingError(f"bad DC table: {e}") from None
    return DCScalarization.from_table(rows)


# ---------------------------------------------------------------- arithmetic

def difference(f: Mapping, h: Mapping) -> Mapping:
    """x -> f(x) - h(x); carries no exclusions or derivative data."""
    _check_dims(f, h)
    return Mapping(f"({f.name}) - ({h.name})", f.dim_in, f.dim_out, lambda X: f.batch(X) - h.batch(X))


def add(g: Mapping, h: Mapping) -> Mapping:
    _check_dims(g, h)
    return Mapping(f"({g.name}) + ({h.name})", g.dim_in, g.dim_out, lambda X: g.batch(X) + h.batch(X))


def anchored(f_x: np.ndarray, x: np.ndarray, h: Mapping, name: str) -> Mapping:
    """t -> f(x) + h(t - x)."""
    f_x = np.asarray(f_x, dtype=float)
    x = np.asarray(x, dtype=float)
    return Mapping(name, h.dim_in, h.dim_out, lambda T: f_x + h.batch(T - x))


def _check_dims(f: Mapping, h: Mapping) -> None:
    if (f.dim_in, f.dim_out) != (h.dim_in, h.dim_out):
        raise MappingError(f"dimension mismatch: {f.name} vs {h.name}")


# ------------------------------------------------------------ estimators

@dataclass(frozen=True, eq=False)
class EstimatorFamily:
    """x -> h_x with h_x(x) = f(x), claimed strict mu-estimators of ``base``."""

    base: Mapping
    at_fn: Callable[[np.ndarray], Mapping]
    mu: float = 0.0
    name: str = "family"
    ph_fn: Optional[Callable[[np.ndarray], Mapping]] = None
    trivial: bool = False

    def at(self, x) -> Mapping:
        return self.at_fn(np.atleast_1d(np.asarray(x, dtype=float)))

    def ph_at(self, x) -> Mapping:
        """The positively homogeneous part h with h_x = f(x) + h(. - x)."""
        if self.ph_fn is None:
            raise MappingError(f"family {self.name} has no positively homogeneous form")
        return self.ph_fn(np.atleast_1d(np.asarray(x, dtype=float)))


def default_family(f: Mapping, mu: float = 0.0) -> EstimatorFamily:
    """h_x = f at every x: always a valid estimator, but it certifies nothing new."""
    return EstimatorFamily(f, lambda x: f, mu, "default", trivial=True)


def affine_family(f: Mapping, mu: float = 0.0) -> EstimatorFamily:
    """h_x(t) = f(x) + J(x)(t - x) wherever the analytic Jacobian applies."""
    if f.jacobian is None:
        raise MappingError(f"{f.name} has no analytic Jacobian")

    def at(x: np.ndarray) -> Mapping:
        if f.near_exclusion(x)[0]:
            return f
        return anchored(f(x), x, linear(f.jac(x)), f"affine[{f.name}]@{x.tolist()}")

    return EstimatorFamily(f, at, mu, "affine")


def translated_family(f: Mapping, mu: float = 0.0) -> EstimatorFamily:
    """h_x(t) = f(x) + f'(x; t - x), with the directional part carrying DC data."""
    if f.directional is None:
        raise MappingError(f"{f.name} has no directional-derivative data")

    def at(x: np.ndarray) -> Mapping:
        return anchored(f(x), x, f.directional(x), f"translated[{f.name}]@{x.tolist()}")

    return EstimatorFamily(f, at, mu, "translated", ph_fn=f.directional)


def _sqrt_case_family(f: Mapping) -> EstimatorFamily:
    h0 = _scalar("h_0", lambda t: np.sign(t) * np.sqrt(np.abs(t)))
    h1 = _scalar("h_1", lambda t: 1 + np.maximum((t - 1) / 2, t - 1))
    hm1 = _scalar("h_-1", lambda t: -1 + np.minimum((t + 1) / 2, t + 1))

    def at(x: np.ndarray) -> Mapping:
        t = float(x[0])
        if t == 0:
            return h0
        if t == 1:
            return h1
        if t == -1:
            return hm1
        if abs(t) > 1:
            return identity()
        fx = float(f(x)[0])
        slope = 1 / (2 * np.sqrt(abs(t)))
        return _scalar(f"h_{t}", lambda s: fx + slope * (s - t))

    def ph(x: np.ndarray) -> Mapping:
        # h_x = f(x) + ph(x)(. - x); h_0 is not DC so it carries no scalarization
        t = float(x[0])
        if t == 0:
            return h0
        if t == 1:
            return ph_scalar(1.0, 0.5)
        if t == -1:
            return ph_scalar(0.5, 1.0)
        if abs(t) > 1:
            return identity()
        return linear([[1 / (2 * np.sqrt(abs(t)))]])

    return EstimatorFamily(f, at, 0.0, "sqrt_case", ph_fn=ph)


def estimator_family_for(f: Mapping | str) -> EstimatorFamily:
    """Built-in family: the hand-made one for sqrt_case, else h_x = f (with a warning)."""
    if isinstance(f, str):
        f = corpus_lookup(f)
    if f.meta.get("corpus") == "sqrt_case":
        return _sqrt_case_family(f)
    warnings.warn(f"no estimator family known for {f.name}; using the trivial h_x = f")
    return default_family(f)


def check_jacobian(f: Mapping, points: np.ndarray, rtol: float = 1e-5) -> list[tuple[list[float], float]]:
    """Central-difference check; returns (point, relative error) for failures."""
    failures = []
    for x in np.atleast_2d(points):
        J = f.jac(x)
        h = 1e-6 * max(1.0, float(np.abs(x).max()))
        cols = []
        for i in range(f.dim_in):
            e = np.zeros(f.dim_in)
            e[i] = h
            cols.append((f(x + e) - f(x - e)) / (2 * h))
        fd = np.stack(cols, axis=1)
        err = float(np.abs(fd - J).max() / max(1.0, float(np.abs(J).max())))
        if err > rtol:
            failures.append((x.tolist(), err))
    return failures
