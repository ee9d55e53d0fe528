import inspect
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from jetbalance import continuum, dynamics, em, jet, lagrangian, mechanics, wave
from jetbalance.cli import execute, main
from jetbalance.cli import model as model_loader
from jetbalance.cli.ops import FAMILIES, OPS
from jetbalance.cli.report import REPORT_SCHEMA, dumps

MODELS = Path(__file__).resolve().parent.parent / "models"


def write_model(tmp_path, model, name="model.json"):
    p = tmp_path / name
    p.write_text(json.dumps(model))
    return str(p)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("model, code", [
    ("oscillator.json", 0), ("nonintegrable.json", 1), ("malformed.json", 2), ("plane_wave.json", 0),
    ("showcase.json", 0),
])
def test_golden_exit_codes(model, code, capsys):
    assert run_cli(["run", str(MODELS / model), "--no-timestamp"], capsys)[0] == code


def test_nonintegrable_reports_residual_and_argmax():
    rep = execute("run", str(MODELS / "nonintegrable.json"), stamp=False)
    check = rep["checks"][0]
    assert check["status"] == "FAIL"
    assert check["max_residual"] == pytest.approx(0.5)
    assert set(check["argmax"]) == {"t"}


def test_malformed_reports_offset_and_runs_nothing(capsys):
    code, out, err = run_cli(["run", str(MODELS / "malformed.json")], capsys)
    assert code == 2
    assert "sections.bad.map[0]" in err and "offset 2" in err
    rep = execute("run", str(MODELS / "malformed.json"))
    assert rep["checks"] == [] and rep["status"] == "input_error"


def test_showcase_covers_every_op():
    rep = execute("run", str(MODELS / "showcase.json"), stamp=False)
    assert {c["op"] for c in rep["checks"]} == set(OPS)
    assert all(c["status"] == "PASS" for c in rep["checks"])


@pytest.mark.parametrize("model", ["oscillator.json", "nonintegrable.json", "malformed.json", "showcase.json"])
def test_reports_are_byte_identical(model, tmp_path, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        main(["run", str(MODELS / model), "--no-timestamp", "--out", str(out)])
        outs.append(out.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_parallel_matches_serial(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", str(MODELS / "showcase.json"), "--no-timestamp", "--out", str(a)])
    main(["run", str(MODELS / "showcase.json"), "--no-timestamp", "--parallel", "--out", str(b)])
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("model", ["oscillator.json", "nonintegrable.json", "malformed.json", "plane_wave.json"])
@pytest.mark.parametrize("stamp", [True, False])
def test_reports_follow_schema(model, stamp):
    rep = json.loads(dumps(execute("run", str(MODELS / model), stamp=stamp)))
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert (rep["timestamp"] is None) is (not stamp)


def test_report_schema_subcommand(capsys):
    code, out, _ = run_cli(["report-schema"], capsys)
    assert code == 0 and json.loads(out) == REPORT_SCHEMA
    jsonschema.Draft202012Validator.check_schema(REPORT_SCHEMA)


def test_table_output(capsys):
    code, out, _ = run_cli(["run", str(MODELS / "nonintegrable.json")], capsys)
    header, row = out.splitlines()[:2]
    assert header.split() == ["name", "max_residual", "tol", "result"]
    assert row.split() == ["shifted-is-integrable", "5.000e-01", "1.0e-09", "FAIL"]


def test_euler_lagrange_subcommand_prints_equation(capsys):
    code, out, _ = run_cli(["euler-lagrange", str(MODELS / "oscillator.json")], capsys)
    assert code == 0
    assert "-x - d/dt(v) = 0" in out


def test_maxwell_subcommand_on_plane_wave():
    rep = execute("maxwell", str(MODELS / "plane_wave.json"), stamp=False)
    mx = [c for c in rep["checks"] if c["op"] == "maxwell"]
    assert mx and all(v <= 1e-10 for c in mx for v in c["residuals"].values())


def test_filtered_family_without_checks_is_input_error():
    rep = execute("saint-venant", str(MODELS / "oscillator.json"))
    assert rep["exit_code"] == 2


def test_every_family_is_a_subcommand():
    assert {s.family for s in OPS.values()} == set(FAMILIES)


def test_saint_venant_incompatible_strain_fails(tmp_path):
    path = write_model(tmp_path, {
        "domains": {"plane": {"x1": [-1, 1, 5], "x2": [-1, 1, 5]}},
        "strains": {"bad": {"coords": ["x1", "x2"], "matrix": [["x2^2", 0], [0, 0]]}},
        "checks": [{"name": "sv", "op": "saint_venant", "strain": "bad", "domain": "plane"}],
    })
    rep = execute("saint-venant", path)
    assert rep["exit_code"] == 1
    assert rep["checks"][0]["max_residual"] == pytest.approx(2.0)


BASE = {
    "domains": {"unit": {"t": [0, 1, 11]}},
    "sections": {"s": {"source": ["t"], "target": ["x"], "map": ["t^2"]}},
}


@pytest.mark.parametrize("checks, where", [
    ([{"name": "a", "op": "nope", "section": "s", "domain": "unit"}], "checks[0].op"),
    ([{"name": "a", "op": "integrability", "section": "missing", "domain": "unit"}], "checks[0].section"),
    ([{"name": "a", "op": "integrability", "section": "s", "domain": "missing"}], "checks[0].domain"),
    ([{"name": "a", "op": "integrability", "section": "s", "domain": "unit"},
      {"name": "a", "op": "integrability", "section": "s", "domain": "unit"}], "checks[1].name"),
    ([{"name": "a", "op": "integrability", "section": "s", "domain": "unit", "tol": -1}], "checks[0].tol"),
    ([{"name": "a", "op": "integrability", "section": "s", "domain": "unit", "expect": "maybe"}],
     "checks[0].expect"),
])
def test_input_errors_are_located(tmp_path, checks, where):
    rep = execute("run", write_model(tmp_path, {**BASE, "checks": checks}))
    assert rep["exit_code"] == 2
    assert rep["errors"][0]["location"].startswith(where)


def test_domain_axis_mismatch_is_input_error(tmp_path):
    model = {**BASE, "domains": {"unit": {"u": [0, 1, 11]}},
             "checks": [{"name": "a", "op": "integrability", "section": "s", "domain": "unit"}]}
    assert execute("run", write_model(tmp_path, model))["exit_code"] == 2


def test_unknown_section_key_and_bad_json(tmp_path):
    assert execute("run", write_model(tmp_path, {**BASE, "bogus": {}, "checks": []}))["exit_code"] == 2
    p = tmp_path / "broken.json"
    p.write_text('{"checks": [}')
    rep = execute("run", str(p))
    assert rep["exit_code"] == 2 and "1:" in rep["errors"][0]["message"] + rep["errors"][0]["location"]


def test_evaluation_error_fails_only_that_check(tmp_path):
    model = {
        "domains": {"unit": {"t": [0, 1, 11]},
                    "st": {"t": [0, 1, 3], "x1": [-1, 1, 3], "x2": [0, 1, 2], "x3": [0, 1, 2]}},
        "sections": {"s": {"source": ["t"], "target": ["x"], "map": ["t^2"]}},
        "wave_states": {"w": {"A": "x1", "theta": "t"}},
        "checks": [
            {"name": "split", "op": "dalembert_recomposition", "wave": "w", "domain": "st"},
            {"name": "ok", "op": "integrability", "section": "s", "domain": "unit"},
        ],
    }
    rep = execute("run", write_model(tmp_path, model))
    assert [c["status"] for c in rep["checks"]] == ["ERROR", "PASS"]
    assert rep["exit_code"] == 1
    jsonschema.validate(json.loads(dumps(rep)), REPORT_SCHEMA)


def test_inline_domain_and_expect_nonzero(tmp_path):
    model = {
        "sections": {"s": {"source": ["t"], "target": ["x"], "position": ["t^2"], "jet": [["2*t + 0.5"]]}},
        "checks": [{"name": "a", "op": "integrability", "section": "s", "domain": {"t": [0, 1, 5]},
                    "expect": "nonzero", "tol": 0.4}],
    }
    assert execute("run", write_model(tmp_path, model))["exit_code"] == 0


def test_default_tolerance_flag(tmp_path, capsys):
    path = str(MODELS / "nonintegrable.json")
    assert run_cli(["run", path, "--tol", "1"], capsys)[0] == 1  # per-check tol wins
    model = json.loads((MODELS / "nonintegrable.json").read_text())
    del model["checks"][0]["tol"]
    assert run_cli(["run", write_model(tmp_path, model), "--tol", "1"], capsys)[0] == 0


def test_verbose_prints_parts(capsys):
    _, out, _ = run_cli(["run", str(MODELS / "nonintegrable.json"), "--verbose"], capsys)
    assert "worst at t=" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "jetbalance", "run", str(MODELS / "nonintegrable.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "FAIL" in proc.stdout


# data types are built by the model loader; these helpers need no check of their own
EXEMPT = {
    "convergence_order", "iso3_act", "iso3_compose", "rotation_about", "minkowski",
    "levi_civita", "component", "two_form", "bivector", "vector", "one_form", "total_derivative",
    "curvature_report", "prolong_variation", "divergence_term", "defect_report", "action",
    "action_directional_derivative", "dalembertian", "recompose", "vacuum_constitutive", "hodge_matrix",
    "spacetime_assemble", "excitation_assemble", "excitation_split", "poincare_iso", "poincare_inverse",
    "exterior_derivative", "exterior_derivative_1form", "contact_pullback", "prolong", "restrict",
}


def test_cli_reaches_every_module_operation():
    used = {getattr(f, "__name__", None) for spec in OPS.values() for f in spec.uses}
    loader = inspect.getsource(model_loader)
    missing = []
    for mod in (jet, dynamics, lagrangian, mechanics, continuum, wave, em):
        for name in mod.__all__:
            obj = getattr(mod, name)
            if name in EXEMPT or not inspect.isfunction(obj):
                continue
            if name not in used and f"{name}(" not in loader:
                missing.append(f"{mod.__name__}.{name}")
    assert not missing, missing
