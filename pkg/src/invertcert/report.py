"""Human-readable reports, per-point CSV, plot data and deterministic JSON."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .certify import CERTIFIED, INCONCLUSIVE, REFUTED, Certificate
from .mapping import Mapping, MappingError

DISPLAY_FORMULAS = {
    "hadamard": "κ",
    "pourciau": "κ",
    "estimators": "(σ_f−μ)⁻¹",
    "convex_compacta": "(♭⋆_f−μ)⁻¹",
    "coderivative": "1/α̂",
}

LADDER_DISCLAIMER = (
    "Checked only at the plan radii {radii} and on the {grid}-per-axis grid; "
    "no claim is made below the smallest radius or between grid points."
)


def _fmt(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(u) for u in v) + "]"
    return str(v)


def _point(p: Sequence[float]) -> str:
    return _fmt(list(p)) if len(p) > 1 else _fmt(p[0])


def certificate_text(cert: Certificate) -> str:
    lines = [
        f"theorem   {cert.theorem}",
        f"mapping   {cert.mapping}",
        f"region    {_fmt([list(b) for b in zip(cert.region.lo, cert.region.hi)])}, grid {cert.region.grid}",
        f"verdict   {cert.verdict}",
        "",
    ]
    if cert.constants:
        lines.append("constants")
        for k in sorted(cert.constants):
            lines.append(f"  {k} = {_fmt(cert.constants[k])}")
        lines.append("")
    if cert.verdict == CERTIFIED:
        lines.append(f"Lipschitz(f⁻¹) ≤ {DISPLAY_FORMULAS[cert.theorem]} = {_fmt(cert.lipschitz_inverse_bound)}")
        lines.append("")
    elif cert.verdict == REFUTED:
        lines.append("witness")
        lines.append(f"  failed hypothesis: {cert.hypothesis}")
        if cert.witness is not None:
            lines.append(f"  point: {_point(cert.witness['point'])}")
            for k, v in sorted((cert.witness.get("values") or {}).items()):
                lines.append(f"  {k} = {_fmt(v)}")
        lines.append("")
    elif cert.verdict == INCONCLUSIVE:
        lines.append("missing hypotheses")
        lines.extend(f"  - {m}" for m in cert.missing)
        lines.append("")
    if cert.records:
        lines.append("per-point verdicts")
        width = max(len(_point(r.point)) for r in cert.records)
        for r in cert.records:
            tag = "PASS" if r.passed else f"FAIL  {r.hypothesis}"
            lines.append(f"  {_point(r.point):>{width}}  {tag}")
        lines.append("")
    for n in cert.notes:
        lines.append(f"note: {n}")
    if cert.plan is not None:
        lines.append(LADDER_DISCLAIMER.format(radii=_fmt(list(cert.plan.radii)), grid=cert.region.grid))
    return "\n".join(lines) + "\n"


def _cell(v: Any) -> str:
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v, sort_keys=True, default=_default)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return ("inf" if v > 0 else "-inf") if math.isinf(v) else repr(v)
    return "" if v is None else str(v)


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def records_csv(cert: Certificate) -> str:
    n = cert.region.dim
    keys = sorted({k for r in cert.records for k in r.values})
    header = [f"x{i + 1}" for i in range(n)] + ["verdict", "failed_hypothesis"] + keys
    rows = ([*r.point, "PASS" if r.passed else "FAIL", r.hypothesis, *(r.values.get(k) for k in keys)]
            for r in cert.records)
    return _csv(header, rows)


def _numeric(v: Any) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def plot_csv(f: Mapping, cert: Certificate) -> str:
    """x, f(x) and every scalar bound recorded at each grid point."""
    keys = sorted({k for r in cert.records for k, v in r.values.items() if _numeric(v)})
    header = ([f"x{i + 1}" for i in range(f.dim_in)] + [f"f{j + 1}" for j in range(f.dim_out)] + keys)
    rows = []
    for r in cert.records:
        try:
            fx = f(np.asarray(r.point)).tolist()
        except MappingError:
            fx = [math.nan] * f.dim_out
        rows.append([*r.point, *fx, *(r.values.get(k) for k in keys)])
    return _csv(header, rows)


def emit_report(cert: Certificate) -> tuple[str, str]:
    """(text report, per-point CSV)."""
    return certificate_text(cert), records_csv(cert)


def _default(o: Any):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite(o: Any):
    if isinstance(o, dict):
        return {str(k): _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (float, np.floating)):
        v = float(o)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return o


def dumps(obj: Any) -> str:
    """Stable JSON: sorted keys, no NaN/inf literals."""
    plain = json.loads(json.dumps(obj, default=_default, allow_nan=True))
    return json.dumps(_finite(plain), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def write_certificate(cert: Certificate, f: Mapping, out_dir: str, stem: Optional[str] = None) -> dict[str, str]:
    """certificate JSON, text report, per-point CSV and plot CSV under ``out_dir``."""
    stem = stem or f"{cert.theorem}"
    text, records = emit_report(cert)
    return {
        "json": write_text(os.path.join(out_dir, f"{stem}.certificate.json"), dumps(cert.to_dict())),
        "report": write_text(os.path.join(out_dir, f"{stem}.report.txt"), text),
        "records": write_text(os.path.join(out_dir, f"{stem}.records.csv"), records),
        "plot": write_text(os.path.join(out_dir, f"{stem}.plot.csv"), plot_csv(f, cert)),
    }
