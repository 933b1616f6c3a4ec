from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from quotamech import load_fixture
from quotamech.cli import main
from quotamech.errors import StructuralError
from quotamech.fileio import fixture_path, instance_from_dict, instance_to_dict, parse_instance
from quotamech.results import load_result, result_to_dict


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _fixture(name):
    return fixture_path(name)


@pytest.mark.parametrize("name", ["pairwise", "walkthrough", "impossibility", "pareto_gap",
                                  "twins", "laminar_nested"])
def test_fixture_round_trip(name):
    inst = load_fixture(name)
    assert instance_from_dict(json.loads(json.dumps(instance_to_dict(inst)))) == inst


def test_fractional_quotas_accepted(tmp_path):
    doc = instance_to_dict(load_fixture("pairwise"))
    doc["constraints"][0]["upper"] = "3/2"
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    assert parse_instance(path).constraints[0].upper == F(3, 2)


def test_truncated_preferences_named(tmp_path, capsys):
    doc = instance_to_dict(load_fixture("pairwise"))
    doc["students"][2]["prefs"] = ["s2"]
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(StructuralError, match="student k prefs missing school s1"):
        parse_instance(path)
    code, _, err = _run(capsys, "opt", path)
    assert code == 1 and "prefs missing school s1" in err


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{")
    code, _, err = _run(capsys, "opt", path)
    assert code == 1 and "not valid JSON" in err


def test_opt(capsys):
    code, out, _ = _run(capsys, "opt", _fixture("walkthrough"))
    assert code == 0 and json.loads(out) == {"opt": "11/2"}


def test_dictatorship_with_order(capsys):
    code, out, _ = _run(capsys, "sd", _fixture("pairwise"), "--order", "i,j,k")
    doc = json.loads(out)
    assert code == 0
    assert doc["allocation"] == {"i": "s1", "j": "s1", "k": "s2"}
    assert doc["delta"]["t1"] == {"s1": "1/2", "s2": "-1/2", "phi": "0"}


def test_dictatorship_trace_and_seed(capsys):
    code, out, _ = _run(capsys, "sd", _fixture("walkthrough"), "--seed", "4", "--trace")
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 4
    assert {e["kind"] for e in doc["trace"]} >= {"assigned"}
    code, _, err = _run(capsys, "sd", _fixture("walkthrough"), "--seed", "4", "--order", "i1")
    assert code == 1 and "either --order or --seed" in err


def test_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert _run(capsys, "gps", _fixture("impossibility"), "--trace", "-o", path)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_gps_with_lottery(capsys):
    code, out, _ = _run(capsys, "gps", _fixture("pairwise"), "--lottery")
    doc = json.loads(out)
    assert code == 0
    assert doc["assignment"]["i"] == {"s1": "1/2", "s2": "1/2", "phi": "0"}
    assert sum(F(e["weight"]) for e in doc["lottery"]) == 1


def test_lottery_from_stored_result(tmp_path, capsys):
    stored = tmp_path / "gps.json"
    assert _run(capsys, "gps", _fixture("pairwise"), "-o", stored)[0] == 0
    result = load_result(stored)
    assert result["assignment"]["k", "s2"] == F(1, 2)
    assert result_to_dict(result, load_fixture("pairwise")) == json.loads(stored.read_text())
    code, out, _ = _run(capsys, "lottery", _fixture("pairwise"), "--from", stored)
    doc = json.loads(out)
    assert code == 0 and doc["source"] == "gps"
    expected = {}
    for e in doc["lottery"]:
        for i, s in e["allocation"].items():
            expected[i, s] = expected.get((i, s), 0) + F(e["weight"])
    assert all(v == F(1, 2) for v in expected.values())


def test_weak_sp_violation_exits_two(capsys):
    code, out, _ = _run(capsys, "audit", _fixture("impossibility"), "--mechanism", "gps", "--check", "wsp")
    doc = json.loads(out)
    assert code == 2 and doc["verdict"] == "violated"
    assert doc["witness"]["student"] in {"i", "j"}


def test_audit_holds_exits_zero(capsys):
    code, out, _ = _run(capsys, "audit", _fixture("pairwise"), "--mechanism", "sd",
                        "--check", "sp", "--order", "i,j,k")
    assert code == 0 and json.loads(out)["verdict"] == "holds"


@pytest.mark.parametrize("check", ["sp", "pareto", "symmetry"])
def test_audit_rejects_checks_not_defined_for_eating(capsys, check):
    code, _, err = _run(capsys, "audit", _fixture("pairwise"), "--mechanism", "gps", "--check", check)
    assert code == 1 and err.startswith("error:")


def test_laminar_command(capsys):
    code, out, _ = _run(capsys, "laminar", _fixture("laminar_nested"))
    assert code == 0 and json.loads(out)["regular_count"] == 4
    code, _, err = _run(capsys, "laminar", _fixture("pairwise"))
    assert code == 1 and "instance is not laminar" in err


def test_gen_writes_instance(tmp_path, capsys):
    path = tmp_path / "g.json"
    assert _run(capsys, "gen", "-o", path, "--seed", "3", "--style", "laminar")[0] == 0
    assert parse_instance(path).is_laminar()


@pytest.mark.parametrize("argv", [["opt", "/nonexistent/x.json"], ["opt"], ["sd", "x.json", "--bogus"], []])
def test_errors_exit_one(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1 and "error" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "quotamech", "opt", str(_fixture("pairwise"))],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout) == {"opt": "3"}
