import csv
import io
import json
import os
import shutil

import pytest

from invertcert.certify import Region, certify_convex_compacta, certify_estimators, certify_hadamard
from invertcert.cli import main, parse_map, parse_vector, run_scenario
from invertcert.mapping import corpus_lookup, estimator_family_for
from invertcert.report import dumps, emit_report, plot_csv
from invertcert.sampling import SamplingPlan
from invertcert.scenario import ScenarioError, load_scenario

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIOS = os.path.join(ROOT, "scenarios")
PLAN = SamplingPlan()


def _copy_scenario(tmp_path, name, **edits):
    with open(os.path.join(SCENARIOS, name)) as fh:
        doc = json.load(fh)
    doc["output"] = {"dir": str(tmp_path / "out")}
    doc.update(edits)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ------------------------------------------------------------ scenario schema

@pytest.mark.parametrize("doc, pointer", [
    ({"mapping": {"corpus": "cubic"}, "bogus": 1}, "/"),
    ({"mapping": {"corpus": "cubic"}, "plan": {"seed": -1}}, "/plan/seed"),
    ({"mapping": {"corpus": "cubic"}, "region": {"box": [[0, 1, 2]]}}, "/region/box/0"),
    ({"mapping": {"corpus": "cubic"}, "theorem": {"name": "nope"}}, "/theorem/name"),
    ({"mapping": {"corpus": "cubic"}, "theorem": {"name": "hadamard", "kapa": 1}}, "/theorem"),
    ({"mapping": {"corpus": "nope"}}, "/mapping"),
    ({"mapping": {"expr": "x1"}, "region": {"box": [[0, 1], [0, 1]]}}, "/region/box"),
    ({}, "/"),
])
def test_schema_errors_carry_json_pointers(doc, pointer):
    with pytest.raises(ScenarioError) as e:
        load_scenario(doc)
    assert e.value.path in (pointer, "" if pointer == "/" else pointer)


def test_valid_scenario_loads():
    sc = load_scenario({"mapping": {"corpus": "sqrt_case"}, "region": {"box": [[-2, 2]]},
                        "theorem": {"name": "estimators"}})
    assert sc.mapping.name == "sqrt_case" and sc.region.dim == 1 and sc.command == "certify"


# ------------------------------------------------------------ report

def _estimators_cert():
    f = corpus_lookup("sqrt_case")
    return certify_estimators(f, estimator_family_for(f), Region.interval(-2, 2, grid=5), PLAN)


def test_estimators_report_has_formula_line():
    text, table = emit_report(_estimators_cert())
    line = next(l for l in text.splitlines() if l.startswith("Lipschitz(f⁻¹)"))
    assert line.startswith("Lipschitz(f⁻¹) ≤ (σ_f−μ)⁻¹ = ")
    assert "no claim is made below the smallest radius" in text
    rows = list(csv.DictReader(io.StringIO(table)))
    assert len(rows) == 5 and all(r["verdict"] == "PASS" for r in rows)


def test_refuted_report_has_witness_block():
    text, _ = emit_report(certify_hadamard(corpus_lookup("cubic"), Region.interval(-1, 1), 1.0))
    assert "witness" in text and "point: 0" in text and "failed hypothesis:" in text


def test_inconclusive_report_lists_missing_hypotheses():
    f = corpus_lookup("sqrt_case")
    cert = certify_convex_compacta(f, Region.interval(-1, 1), PLAN, family=estimator_family_for(f))
    text, _ = emit_report(cert)
    assert "missing hypotheses" in text
    assert all(f"  - {m}" in text for m in cert.missing)


def test_plot_csv_has_mapping_values():
    cert = _estimators_cert()
    rows = list(csv.DictReader(io.StringIO(plot_csv(corpus_lookup("sqrt_case"), cert))))
    assert [float(r["x1"]) for r in rows] == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert [float(r["f1"]) for r in rows] == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_dumps_is_stable_and_strict_json():
    d = {"b": float("inf"), "a": [1.5, float("nan")]}
    s = dumps(d)
    assert s == dumps(d)
    assert json.loads(s) == {"a": [1.5, "nan"], "b": "inf"}


# ------------------------------------------------------------ command line

def test_parse_map_forms():
    assert parse_map("cubic") == {"corpus": "cubic"}
    assert parse_map('linear:{"matrix": [[2]]}') == {"corpus": "linear", "params": {"matrix": [[2]]}}
    assert parse_map("max(x1, 2*x1)") == {"expr": "max(x1, 2*x1)"}


def test_parse_vector_forms():
    assert parse_vector("0.5") == [0.5]
    assert parse_vector("1,2") == [1.0, 2.0]
    assert parse_vector("[1, 2]") == [1.0, 2.0]


def test_shipped_sqrt_case_scenario(tmp_path, capsys):
    path = _copy_scenario(tmp_path, "sqrt_case_certify.json")
    assert run_scenario(path) == 0
    with open(tmp_path / "out" / "sqrt_case_certify.certificate.json") as fh:
        cert = json.load(fh)
    assert cert["verdict"] == "CERTIFIED-ON-REGION"
    assert cert["lipschitz_inverse_bound"] <= 2.11
    for ext in ("report.txt", "records.csv", "plot.csv"):
        assert (tmp_path / "out" / f"sqrt_case_certify.{ext}").exists()


def test_shipped_cubic_scenario(tmp_path):
    path = _copy_scenario(tmp_path, "cubic_refute.json")
    assert run_scenario(path) == 1
    with open(tmp_path / "out" / "cubic_refute.certificate.json") as fh:
        assert json.load(fh)["witness"]["point"] == [0.0]


def test_malformed_json_exits_3(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run_scenario(str(path)) == 3


def test_schema_violation_exits_3(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"mapping": {"corpus": "cubic"}, "plan": {"seed": -1}}))
    assert main(["certify", "--scenario", str(path)]) == 3
    assert "/plan/seed" in capsys.readouterr().err


def test_argparse_errors_exit_3():
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == 3


def test_missing_parameter_is_usage_error(tmp_path):
    assert main(["certify", "--map", "cubic", "--theorem", "hadamard", "--out-dir", str(tmp_path)]) == 3


def test_bounds_command(tmp_path, capsys):
    assert main(["bounds", "--map", "sqrt_case", "--point", "1", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "bounds.bounds.json") as fh:
        d = json.load(fh)["bounds"]
    assert set(d) == {"lip", "inj", "lop", "cov", "reg"}
    assert d["lop"]["value"] * d["reg"]["value"] == pytest.approx(1, rel=1e-12)


def test_bounds_on_non_square_map_skips_covering(tmp_path):
    assert main(["bounds", "--map", "x1 + x2", "--point", "0,0", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "bounds.bounds.json") as fh:
        assert set(json.load(fh)["bounds"]) == {"lip", "inj"}


def test_plan_and_seed_flags(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"radii": [0.1, 0.01], "pairs_per_radius": 32}))
    assert main(["bounds", "--map", "cubic", "--point", "1", "--plan", str(plan), "--seed", "5",
                 "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "bounds.bounds.json") as fh:
        p = json.load(fh)["bounds"]["lip"]["plan"]
    assert p["radii"] == [0.1, 0.01] and p["seed"] == 5


def test_invert_command_with_targets(tmp_path):
    path = _copy_scenario(tmp_path, "sqrt_case_certify.json")
    assert main(["invert", "--scenario", path, "--target", "0.5", "--target", "-0.3"]) == 0
    with open(tmp_path / "out" / "sqrt_case_certify.invert.json") as fh:
        sols = json.load(fh)["solutions"]
    assert sols[0]["x"][0] == pytest.approx(0.25, abs=1e-8)
    assert sols[1]["x"][0] == pytest.approx(-0.09, abs=1e-8)


def test_audit_command_pass_and_fail(tmp_path):
    path = _copy_scenario(tmp_path, "abs_plus_linear_pourciau.json")
    assert main(["audit", "--scenario", path]) == 0
    bad = _copy_scenario(tmp_path, "abs_plus_linear_pourciau.json",
                         audit={"bound": 0.5, "alpha": 1, "box": [[-3, 3]], "pairs": 20})
    assert main(["audit", "--scenario", bad]) == 1


def test_stall_exits_2(tmp_path):
    assert main(["invert", "--map", "x1^2 + 1", "--target", "0", "--out-dir", str(tmp_path)]) == 3
    doc = {"mapping": {"expr": "x1^2 + 1"}, "invert": {"targets": [0], "alpha": 1},
           "output": {"dir": str(tmp_path)}}
    path = tmp_path / "stall.json"
    path.write_text(json.dumps(doc))
    assert main(["invert", "--scenario", str(path)]) == 2


def test_hypo_exponent_flag(tmp_path):
    path = _copy_scenario(tmp_path, "monotone_sine_coderivative.json")
    assert main(["certify", "--scenario", path, "--hypo-exponent", "1"]) == 0


def test_list_corpus(capsys):
    assert main(["list-corpus"]) == 0
    out = capsys.readouterr().out
    assert "sqrt_case" in out and "monotone_sine" in out


def test_artifacts_are_bit_identical(tmp_path):
    path = _copy_scenario(tmp_path, "ph_scalar_convex_compacta.json")
    out = tmp_path / "out"
    assert run_scenario(path) == 0
    first = {p: (out / p).read_bytes() for p in sorted(os.listdir(out))}
    shutil.rmtree(out)
    assert run_scenario(path) == 0
    assert {p: (out / p).read_bytes() for p in sorted(os.listdir(out))} == first


@pytest.mark.parametrize("name", sorted(os.listdir(SCENARIOS)))
def test_every_shipped_scenario_runs(tmp_path, name):
    expected = {"cubic_refute.json": 1}.get(name, 0)
    assert run_scenario(_copy_scenario(tmp_path, name)) == expected
