import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from twophase import checks as ck
from twophase import cli
from twophase import harness as hs

CHEAP = ["curvature_ground_truth", "curvature_matrix_structure", "surface_integration_by_parts",
         "volume_preservation", "density_consistency", "projection_constant"]
FAST_PRESSURE = {"resolution.pressure_h": 0.0625}


def test_catalog_contents():
    cat = {c["id"]: c for c in ck.list_checks()}
    assert len(cat) >= 20
    assert cat["weak_curvature_identity"]["anchor"] == "ν⁻ ⊗ ν⁻ : ∇ψ"
    assert cat["energy_equality"]["anchor"] == "Energy equality and a priori bounds"
    assert all(c["operation"] and c["anchor"] for c in cat.values())


def test_observed_order():
    lv = [0.1, 0.05, 0.025]
    assert ck.observed_order(lv, [3 * h**2 for h in lv]) == pytest.approx(2.0)


def test_check_rng_streams_are_independent_of_order():
    a = hs.check_rng(7, "x").uniform(size=3)
    hs.check_rng(7, "y").uniform(size=3)
    assert np.array_equal(a, hs.check_rng(7, "x").uniform(size=3))
    assert not np.array_equal(a, hs.check_rng(8, "x").uniform(size=3))


def test_plain_json_handles_numpy_and_non_finite():
    out = hs.canonical_json({"a": np.float64(1.5), "b": np.arange(2), "c": float("nan"), "d": np.bool_(True)})
    assert json.loads(out) == {"a": 1.5, "b": [0, 1], "c": "nan", "d": True}


def test_run_scenario_record_shape():
    rep = hs.run_scenario("static_bubble", checks=CHEAP)
    assert [r["id"] for r in rep["checks"]] == CHEAP
    assert rep["ok"] and rep["summary"]["pass"] == len(CHEAP)
    for r in rep["checks"]:
        assert set(r) >= {"id", "anchor", "operation", "inputs_digest", "status", "passed", "tolerance", "values"}
        assert len(r["inputs_digest"]) == 64
    assert set(rep["environment"]) == {"python", "numpy", "scipy", "platform"}


def test_order_independent_results_and_seed_effect():
    a = hs.run_scenario("rotating_ellipse", checks=["surface_integration_by_parts", "projection_constant"])
    b = hs.run_scenario("rotating_ellipse", checks=["projection_constant"])
    assert a["checks"][1]["values"] == b["checks"][0]["values"]
    c = hs.run_scenario("rotating_ellipse", seed=5, checks=["projection_constant"])
    assert c["checks"][0]["values"]["c"] != b["checks"][0]["values"]["c"]


def test_workers_match_sequential():
    seq = hs.run_scenario("static_bubble", checks=CHEAP)
    par = hs.run_scenario("static_bubble", checks=CHEAP, workers=3)
    assert hs.report_json(seq) == hs.report_json(par)


def test_skipped_and_fail_soft():
    rep = hs.run_scenario("static_bubble_sphere", checks=["curvature_ground_truth", "gauss_green"])
    status = {r["id"]: r["status"] for r in rep["checks"]}
    assert status == {"curvature_ground_truth": "pass", "gauss_green": "skipped"}
    # a perturbed sigma breaks the declared jump but the run continues
    rep = hs.run_scenario("static_bubble", overrides={"material.sigma": 0.55, **FAST_PRESSURE},
                          checks=["pressure_jump", "projection_constant"])
    assert [r["status"] for r in rep["checks"]] == ["fail", "pass"] and not rep["ok"]


def test_error_status_recorded(monkeypatch):
    def boom(ctx):
        raise RuntimeError("exploded")

    spec = ck.CATALOG["projection_constant"]
    monkeypatch.setitem(ck.CATALOG, "projection_constant", ck.CheckSpec(spec.id, spec.anchor, spec.operation,
                                                                          boom, spec.tolerance))
    rep = hs.run_scenario("static_bubble", checks=["curvature_ground_truth", "projection_constant"])
    rec = rep["checks"][1]
    assert rec["status"] == "error" and "exploded" in rec["values"]["error"]
    with pytest.raises(hs.CheckFailure) as exc:
        hs.run_scenario("static_bubble", strict=True, checks=["projection_constant"])
    assert exc.value.check_id == "projection_constant"


def test_write_report_tables(tmp_path):
    rep = hs.run_scenario("static_bubble", checks=["surface_ibp_spectral_decay", "projection_constant"])
    path = hs.write_report(rep, tmp_path)
    assert json.loads(path.read_text())["scenario"] == "static_bubble"
    rows = list(csv.DictReader((tmp_path / "tables" / "surface_ibp_spectral_decay.csv").open()))
    assert [r["level"] for r in rows] == ["64", "128", "256"]
    summary = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert [r["id"] for r in summary] == ["surface_ibp_spectral_decay", "projection_constant"]


def test_convergence_study_time_axis(tmp_path):
    st = hs.convergence_study("translating_bubble", "time_dt", [4e-3, 2e-3, 1e-3])
    assert st["observed_order"] >= 1.9 and st["monotone"]
    path = hs.write_convergence(st, tmp_path)
    assert path.read_text().splitlines()[0] == "axis,level,check,error"


def test_convergence_study_rejects_bad_input():
    with pytest.raises(ValueError):
        hs.convergence_study("static_bubble", "time_dt", [1e-3, 5e-4])
    with pytest.raises(ValueError):
        hs.convergence_study("static_bubble", "viscosity", [1, 2, 3])


def test_convergence_surface_axis_at_roundoff():
    st = hs.convergence_study("static_bubble", "surface_M", [16, 32, 64])
    assert max(st["errors"]) < 1e-12  # a circle is resolved exactly, so roundoff noise remains


# -- command line ---------------------------------------------------------------


def test_cli_list_and_schema(capsys):
    assert cli.main(["list-checks"]) == 0
    assert "weak_curvature_identity" in capsys.readouterr().out
    assert cli.main(["list-scenarios"]) == 0
    assert "static_bubble" in capsys.readouterr().out
    assert cli.main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out)["type"] == "object"


def test_cli_run_pass(tmp_path, capsys):
    code = cli.main(["run", "static_bubble", "--out", str(tmp_path), *sum((["--check", c] for c in CHEAP), [])])
    assert code == 0 and (tmp_path / "report.json").exists()


def test_cli_config_error_exit_code(capsys):
    assert cli.main(["run", "static_bubble", "--set", "material.beta1=3.0"]) == 2
    assert "beta1 <= beta2" in capsys.readouterr().err
    assert cli.main(["run", "static_bubble", "--set", "nonsense"]) == 2
    assert cli.main(["run", "static_bubble", "--check", "missing_check"]) == 2


def test_cli_strict_failure_names_check(capsys):
    args = ["run", "static_bubble", "--strict", "--set", "material.sigma=0.55",
            "--set", "resolution.pressure_h=0.0625", "--check", "pressure_jump", "--check", "projection_constant"]
    assert cli.main(args) == 1
    assert "pressure_jump" in capsys.readouterr().err


def test_cli_fail_soft_exit_code(capsys):
    args = ["run", "static_bubble", "--set", "material.sigma=0.55", "--set", "resolution.pressure_h=0.0625",
            "--check", "pressure_jump"]
    assert cli.main(args) == 1


def test_cli_converge(tmp_path, capsys):
    code = cli.main(["converge", "translating_bubble", "--axis", "time_dt", "--levels", "0.004,0.002,0.001",
                     "--out", str(tmp_path)])
    assert code == 0
    assert "observed order" in capsys.readouterr().out
    assert cli.main(["converge", "static_bubble", "--axis", "time_dt", "--levels", "0.1,0.05"]) == 2


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "twophase.cli", "list-scenarios"], capture_output=True, text=True)
    assert out.returncode == 0 and "rankine_bubble" in out.stdout
