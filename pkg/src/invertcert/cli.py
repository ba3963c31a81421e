"""Command-line front end: bounds | certify | invert | audit | list-corpus."""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import replace
from typing import Any, Optional, Sequence

import numpy as np

from . import report
from .certify import (CERTIFIED, THEOREMS, Certificate, certify_coderivative, certify_convex_compacta,
                      certify_estimators, certify_hadamard, certify_pourciau)
from .expr import ExprDimensionError, ExprSyntaxError
from .inverse import StalledError, audit_inverse_lipschitz, solve_inverse_traced
from .mapping import (CORPUS, MappingError, UnknownMappingError, affine_family, default_family,
                      estimator_family_for, translated_family)
from .metric import KINDS, BoundsError, estimate_inj, estimate_lip, estimate_lop
from .sampling import PlanError
from .scenario import Scenario, ScenarioError, load_scenario, read_scenario

EXIT_OK, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
COMMANDS = ("bounds", "certify", "invert", "audit", "list-corpus")

# bad input is a usage error; everything raised while computing maps to 2
_USAGE_ERRORS = (ScenarioError, ExprSyntaxError, ExprDimensionError, UnknownMappingError, PlanError)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ parsing

def parse_map(text: str) -> dict:
    """Corpus name, ``name:{json params}``, or an expression in the mapping grammar."""
    text = text.strip()
    if text in CORPUS:
        return {"corpus": text}
    name, sep, rest = text.partition(":")
    if sep and name.strip() in CORPUS:
        try:
            params = json.loads(rest)
        except json.JSONDecodeError as e:
            raise UsageError(f"--map {name}: parameters are not valid JSON ({e.msg})") from None
        if not isinstance(params, dict):
            raise UsageError(f"--map {name}: parameters must be a JSON object")
        return {"corpus": name.strip(), "params": params}
    return {"expr": text}


def parse_vector(text: str) -> list[float]:
    """``0.5``, ``1,2`` or ``[1, 2]``."""
    s = text.strip()
    try:
        v = json.loads(s) if s.startswith("[") else [float(t) for t in s.split(",")]
    except ValueError:
        raise UsageError(f"not a number or vector: {text!r}") from None
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise UsageError(f"not a finite vector: {text!r}")
    return v.tolist()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="invertcert", description="Sampling-based certificates of global invertibility.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--map", dest="map_spec", help="corpus name, name:{json params}, or expression")
    p.add_argument("--point", help="base point for bounds, e.g. 0.5 or 1,2")
    p.add_argument("--target", action="append", default=[], help="target y for invert (repeatable)")
    p.add_argument("--plan", help="SamplingPlan JSON file")
    p.add_argument("--seed", type=int, help="override the plan seed")
    p.add_argument("--out-dir", help="directory for artifacts")
    p.add_argument("--theorem", choices=THEOREMS, help="certificate branch")
    p.add_argument("--hypo-exponent", type=int, choices=(1, 2), help="power of |x1 - x2| in hypomonotonicity")
    return p


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.scenario:
        sc = read_scenario(args.scenario)
        doc = json.loads(json.dumps(sc.raw))
    else:
        if not args.map_spec:
            raise UsageError("either --scenario or --map is required")
        doc = {}
    if args.map_spec:
        doc["mapping"] = parse_map(args.map_spec)
    if args.plan:
        try:
            with open(args.plan) as fh:
                doc["plan"] = json.load(fh)
        except OSError as e:
            raise UsageError(f"cannot read plan {args.plan}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"plan {args.plan}: malformed JSON ({e.msg})") from None
    if args.seed is not None:
        doc.setdefault("plan", {})["seed"] = args.seed
    if args.theorem:
        doc.setdefault("theorem", {})["name"] = args.theorem
    if args.hypo_exponent is not None:
        doc.setdefault("theorem", {"name": "coderivative"})["hypo_exponent"] = args.hypo_exponent
    if args.point is not None:
        doc.setdefault("bounds", {})["point"] = parse_vector(args.point)
    if args.target:
        doc.setdefault("invert", {})["targets"] = [parse_vector(t) for t in args.target]
    if args.out_dir:
        doc.setdefault("output", {})["dir"] = args.out_dir
    return load_scenario(doc, args.scenario)


# ------------------------------------------------------------------ commands

def _stem(sc: Scenario, default: str) -> str:
    if sc.source:
        return os.path.splitext(os.path.basename(sc.source))[0]
    return default


def _family(sc: Scenario, mu: float):
    kind = sc.theorem.get("family", "builtin")
    f = sc.mapping
    if kind == "default":
        return default_family(f, mu)
    if kind == "affine":
        return affine_family(f, mu)
    if kind == "translated":
        return translated_family(f, mu)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fam = estimator_family_for(f)
    return replace(fam, mu=mu)


def certify(sc: Scenario) -> Certificate:
    if sc.region is None:
        raise UsageError("certify needs a region")
    th = sc.theorem
    name = th.get("name")
    if name is None:
        raise UsageError("certify needs a theorem name (scenario theorem.name or --theorem)")
    f, region, plan = sc.mapping, sc.region, sc.plan

    def need(key: str) -> float:
        if key not in th:
            raise UsageError(f"theorem {name} needs parameter {key!r}")
        return float(th[key])

    mu = float(th.get("mu", 0.0))
    if name == "hadamard":
        return certify_hadamard(f, region, need("kappa"))
    if name == "pourciau":
        return certify_pourciau(f, region, need("kappa"), plan)
    if name == "estimators":
        return certify_estimators(f, _family(sc, mu), region, plan, mu)
    if name == "convex_compacta":
        family = _family(sc, mu) if "family" in th else None
        return certify_convex_compacta(f, region, plan, mu, family, int(th.get("sphere_count", 16)))
    return certify_coderivative(f, region, need("alpha_hat"), need("gamma"), plan,
                                th.get("eta"), int(th.get("hypo_exponent", 2)))


def _certified_rate(sc: Scenario) -> tuple[float, Certificate]:
    """(alpha, certificate) with alpha = 1 / certified inverse bound."""
    cert = certify(sc)
    if cert.verdict != CERTIFIED:
        raise RuntimeError(f"no covering rate given and the certificate is {cert.verdict}; pass alpha explicitly")
    return 1.0 / cert.lipschitz_inverse_bound, cert


def cmd_bounds(sc: Scenario, out: Any) -> int:
    sec = sc.section("bounds")
    if "point" not in sec:
        raise UsageError("bounds needs a point (--point or bounds.point)")
    f, x, plan = sc.mapping, sec["point"], sc.plan
    # covering needs n = m <= 3; only an explicit request makes that an error
    square = f.dim_in == f.dim_out <= 3
    kinds = sec.get("kinds", list(KINDS) if square else ["lip", "inj"])
    result = {}
    if "lip" in kinds:
        result["lip"] = estimate_lip(f, x, plan)
    if "inj" in kinds:
        result["inj"] = estimate_inj(f, x, plan)
    if {"lop", "cov", "reg"} & set(kinds):
        lop, reg = estimate_lop(f, x, plan)
        for k, est in (("lop", lop), ("cov", replace(lop, kind="cov")), ("reg", reg)):
            if k in kinds:
                result[k] = est
    doc = {"mapping": f.name, "bounds": {k: v.to_dict() for k, v in result.items()}}
    path = report.write_text(os.path.join(sc.out_dir, f"{_stem(sc, 'bounds')}.bounds.json"), report.dumps(doc))
    for k, v in result.items():
        flag = f"  ({v.flag})" if v.flag else ""
        print(f"{k:<4} = {report._fmt(v.value)}{flag}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_certify(sc: Scenario, out: Any) -> int:
    cert = certify(sc)
    paths = report.write_certificate(cert, sc.mapping, sc.out_dir, _stem(sc, cert.theorem))
    out.write(report.certificate_text(cert))
    for kind in ("json", "report", "records", "plot"):
        print(f"wrote {paths[kind]}", file=out)
    return cert.exit_code


def _start(sc: Scenario, sec: dict):
    """invert.x0, else the region center, else the origin."""
    if "x0" in sec:
        return sec["x0"]
    return None if sc.region is None else sc.region.center


def cmd_invert(sc: Scenario, out: Any) -> int:
    sec = sc.section("invert")
    if "targets" not in sec:
        raise UsageError("invert needs targets (--target or invert.targets)")
    f = sc.mapping
    Y = np.array([np.atleast_1d(np.asarray(t, dtype=float)) for t in sec["targets"]])
    if Y.ndim != 2 or Y.shape[1] != f.dim_out:
        raise UsageError(f"targets must be vectors in R^{f.dim_out}")
    alpha = sec.get("alpha")
    if alpha is None:
        alpha, _ = _certified_rate(sc)
    tau = float(sec.get("tau", 1e-10))
    trace = solve_inverse_traced(f, Y, float(alpha), _start(sc, sec), tau)
    doc = {
        "mapping": f.name,
        "alpha": float(alpha),
        "tau": tau,
        "solutions": [
            {"y": y.tolist(), "x": x.tolist(), "residual": float(r), "steps": int(k), "searches": int(s)}
            for y, x, r, k, s in zip(Y, trace.x, trace.residual, trace.iterations, trace.searches)
        ],
    }
    path = report.write_text(os.path.join(sc.out_dir, f"{_stem(sc, 'invert')}.invert.json"), report.dumps(doc))
    for s in doc["solutions"]:
        print(f"y = {report._point(s['y'])}  x = {report._point(s['x'])}  residual = {report._fmt(s['residual'])}",
              file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_audit(sc: Scenario, out: Any) -> int:
    sec = sc.section("audit")
    f = sc.mapping
    bound, alpha = sec.get("bound"), sec.get("alpha")
    if bound is None or alpha is None:
        rate, cert = _certified_rate(sc)
        bound = cert.lipschitz_inverse_bound if bound is None else bound
        alpha = rate if alpha is None else alpha
    box = sec.get("box")
    if box is None:
        if sc.region is None:
            raise UsageError("audit needs a box (audit.box) or a region")
        box = [list(b) for b in zip(sc.region.lo, sc.region.hi)]
    if len(box) != f.dim_out or any(not (lo < hi) for lo, hi in box):
        raise UsageError(f"audit box must have {f.dim_out} intervals with lo < hi")
    lo, hi = zip(*box)
    result = audit_inverse_lipschitz(f, float(bound), int(sec.get("pairs", 100)), lo, hi, float(alpha),
                                     _start(sc, sc.section("invert")), float(sec.get("tau", 1e-10)),
                                     seed=sc.plan.seed)
    doc = {"mapping": f.name, "alpha": float(alpha), "box": box, **result.to_dict()}
    path = report.write_text(os.path.join(sc.out_dir, f"{_stem(sc, 'audit')}.audit.json"), report.dumps(doc))
    print(f"audit {doc['verdict']}: max |dx|/|dy| = {report._fmt(result.max_ratio)} against L = "
          f"{report._fmt(result.bound)}, {len(result.violations)} violation(s) in {result.pairs} pairs", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK if result.passed else EXIT_REFUTED


def cmd_list_corpus(out: Any) -> int:
    width = max(len(k) for k in CORPUS)
    for name in sorted(CORPUS):
        print(f"{name:<{width}}  {CORPUS[name][1]}", file=out)
    return EXIT_OK


_DISPATCH = {"bounds": cmd_bounds, "certify": cmd_certify, "invert": cmd_invert, "audit": cmd_audit}


def run_scenario(path: str, command: Optional[str] = None, out: Any = None) -> int:
    """Run a scenario file; the command comes from the file unless given."""
    return main([command or _command_of(path), "--scenario", path], out=out)


def _command_of(path: str) -> str:
    try:
        return read_scenario(path).command
    except ScenarioError:
        return "certify"  # main reports the error with exit 3


def main(argv: Optional[Sequence[str]] = None, out: Any = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "list-corpus":
        return cmd_list_corpus(out)
    try:
        sc = _scenario_from_args(args)
        return _DISPATCH[args.command](sc, out)
    except (UsageError, *_USAGE_ERRORS) as e:
        print(f"invertcert: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (StalledError, MappingError, BoundsError, RuntimeError, ArithmeticError, ValueError) as e:
        print(f"invertcert: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
