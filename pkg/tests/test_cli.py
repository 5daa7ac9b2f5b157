import json

import numpy as np
import pytest

from moser_lab import scenarios as S
from moser_lab.cli import main
from moser_lab.homomorphisms import Verdict
from moser_lab.report import CSV_HEADER, SpecError, parse_spec, read_csv, run, scenario_spec

FACTORY = '''
from moser_lab import scenarios

def build():
    return scenarios.circle_in_su2_conjugated()

instance = scenarios.shear_line_r1_to_r2()
'''


def write_spec(tmp_path, **data):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(data))
    return str(p)


def test_list(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    ids = [line.split()[0] for line in lines]
    assert len(ids) == len(set(ids)) == len(S.CATALOG)
    assert set(ids) == {sc.id for sc in S.CATALOG}


def test_run_to_stdout(capsys):
    assert main(["run", "--scenario", "constant_hom", "--eps-steps", "6"]) == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["verdict"] == "TriviallyCertified"
    assert "matches" in captured.err
    for key in ("epsilon", "cocycle_defect", "transgression_residual", "conjugation_error", "g_path_log"):
        assert len(report[key]) == 7


@pytest.mark.parametrize("sid", ["constant_hom", "shear_line_r1_to_r2", "so2_in_so3_tilt"])
def test_json_and_csv_agree(tmp_path, sid):
    out, res = tmp_path / "r.json", tmp_path / "r.csv"
    spec = write_spec(tmp_path, scenario_id=sid, eps_max=0.3, eps_steps=8, quadrature_resolution=16)
    assert main(["run", spec, "--out", str(out), "--residuals", str(res)]) == 0
    report = json.loads(out.read_text())
    table = read_csv(res)
    assert res.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert table.shape == (9, 4)
    for j, key in enumerate(CSV_HEADER):
        col = np.array([np.nan if v is None else v for v in report[key]], dtype=float)
        np.testing.assert_array_equal(table[:, j], col)


def test_expected_mismatch_exits_1(tmp_path, capsys):
    spec = write_spec(tmp_path, scenario_id="constant_hom", eps_steps=4, expected="NotTransgressible")
    assert main(["run", spec]) == 1
    assert "does NOT match" in capsys.readouterr().err


@pytest.mark.parametrize("data", [
    {"scenario_id": "no_such_scenario"},
    {"scenario_id": "constant_hom", "eps_steps": "ten"},
    {"scenario_id": "constant_hom", "eps_max": -1.0},
    {"scenario_id": "constant_hom", "colour": "blue"},
    {"scenario_id": "constant_hom", "kind": "Subgroup"},
    {"scenario_id": "custom", "kind": "Homomorphism"},
    {"scenario_id": "constant_hom", "tolerances": {"speed": 1.0}},
    {"scenario_id": "constant_hom", "expected": "Maybe"},
])
def test_schema_errors_exit_2(tmp_path, capsys, data):
    assert main(["run", write_spec(tmp_path, **data)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("moser-lab: error:")


def test_other_errors_exit_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2
    assert main(["run"]) == 2
    assert main(["run", "--scenario", "constant_hom", "--eps-max", "5"]) == 2
    assert "error" in capsys.readouterr().err


def test_custom_factory(tmp_path, monkeypatch, capsys):
    (tmp_path / "my_family.py").write_text(FACTORY)
    monkeypatch.syspath_prepend(str(tmp_path))
    spec = write_spec(tmp_path, scenario_id="custom", kind="Homomorphism", factory="my_family:build",
                      eps_max=0.3, eps_steps=5, quadrature_resolution=16)
    assert main(["run", spec]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "TriviallyCertified"
    spec = write_spec(tmp_path, scenario_id="custom", kind="Homomorphism", factory="my_family:instance",
                      eps_steps=5, expected="NotTransgressible")
    assert main(["run", spec]) == 0
    spec = write_spec(tmp_path, scenario_id="custom", kind="Homomorphism", factory="my_family:nothing")
    assert main(["run", spec]) == 2


def test_reports_are_reproducible():
    spec = scenario_spec("circle_in_so3_curved", eps_steps=8)
    a, b = run(spec).to_dict(), run(spec).to_dict()
    a.pop("wall_time")
    b.pop("wall_time")
    assert json.dumps(a) == json.dumps(b)


def test_report_records_config():
    rep = run(scenario_spec("shear_line_r1_to_r2", eps_steps=4, seed=3))
    d = rep.to_dict()
    assert d["config"]["seed"] == 3 and d["config"]["eps_steps"] == 4
    assert d["config"]["pipeline"]["resolution"] == scenario_spec("shear_line_r1_to_r2").config.resolution
    assert d["local_eps_max"] is None and d["failing_eps"] == 0.0
    assert all(v is None for v in d["conjugation_error"])
    assert d["version"]


def test_spec_roundtrip():
    spec = scenario_spec("so2_in_so3_tilt", eps_steps=12)
    again = parse_spec(json.loads(json.dumps(spec.to_dict())))
    assert again == spec
    assert again.expected is Verdict.TRIVIALLY_CERTIFIED
    with pytest.raises(SpecError):
        parse_spec([1, 2])
