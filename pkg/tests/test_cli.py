import json

import pytest

from fgk.calculus.parser import format_formal
from fgk.main import main
from fgk.services.suites import STARPROD_CHECKS

SMALL = {"fiber_truncation": 3, "basis_degree": 2, "trials": 2, "word_length": 2}
FLAT = {"dimension": 1, "flavor": "complex", "tensor": [["1"]], "nu_truncation": 2, **SMALL}
CURVED = {"dimension": 1, "flavor": "complex", "tensor": [["1 + z1*w1"]], "nu_truncation": 0, **SMALL}
KP_VIOLATOR = {"dimension": 2, "flavor": "complex", "tensor": [["1", "0"], ["-z1", "1"]]}
PLANE = {"dimension": 2, "flavor": "real", "tensor": [["0", "1"], ["-1", "0"]], "trials": 4}
REFERENCE_FAMILY = [
    [{"coefficient": "x1^2 + x2^2", "derivatives": []}],
    [{"coefficient": "2*x2", "derivatives": [[1, 0]]},
     {"coefficient": "-2*x1", "derivatives": [[0, 1]]}],
]


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def _statuses(report):
    return {check["name"]: check["status"] for check in report["checks"]}


def test_kp_check_passes_for_flat_chart(capsys, write_json):
    code, report = _run(capsys, "kp-check", "--config", write_json("flat.json", FLAT))
    assert code == 0
    assert report["command"] == "kp-check"
    assert report["checks"] == [{"name": "kp.conditions", "status": "pass", "residual": "0",
                                 "witness": [], "detail": None}]
    assert report["wall_time_seconds"] is None


@pytest.mark.parametrize("tensor", [KP_VIOLATOR["tensor"], [["z2", "0"], ["0", "1"]]])
def test_kp_check_reports_violation(capsys, write_json, tensor):
    code, report = _run(capsys, "kp-check", "--config", write_json("bad.json", {**KP_VIOLATOR, "tensor": tensor}))
    assert code == 1
    check = report["checks"][0]
    assert check["status"] == "fail"
    assert check["residual"] == "1"
    assert check["witness"] == ["l=1", "n=2", "m=1"]
    assert check["detail"] == "holomorphic"


def test_kp_check_on_real_chart_runs_jacobi(capsys, write_json):
    code, report = _run(capsys, "kp-check", "--config", write_json("plane.json", PLANE))
    assert code == 0
    assert _statuses(report) == {"kp.jacobi": "pass"}


@pytest.mark.parametrize("payload", [
    {"dimension": 1, "flavor": "complex", "tensor": [["1", "0"]]},
    {"dimension": 1, "flavor": "complex", "tensor": [["1 +"]]},
    {"dimension": 2, "flavor": "real", "tensor": [["1", "0"], ["0", "1"]]},
])
def test_bad_config_exits_with_usage_code(capsys, write_json, payload):
    code, report = _run(capsys, "kp-check", "--config", write_json("config.json", payload))
    assert code == 2
    assert report is None


def test_missing_arguments_exit_with_usage_code(capsys):
    assert main(["verify"]) == 2
    assert main([]) == 2


def test_solve_f_prints_components(capsys, write_json):
    code, report = _run(capsys, "solve-f", "--config", write_json("flat.json", FLAT))
    assert code == 0
    assert report["data"]["F"] == {"2": "zeta1*zetab1", "3": "0"}
    assert "groupoid.parity" in _statuses(report)


def test_solve_f_needs_complex_chart(capsys, write_json):
    code, _ = _run(capsys, "solve-f", "--config", write_json("plane.json", PLANE))
    assert code == 2


def test_verify_flat_chart_passes(capsys, write_json):
    code, report = _run(capsys, "verify", "--config", write_json("flat.json", FLAT), "--workers", "2")
    failed = [check for check in report["checks"] if check["status"] == "fail"]
    assert failed == []
    assert code == 0
    names = [check["name"] for check in report["checks"]]
    assert names == sorted(names)
    assert len(names) == len(set(names))
    assert "starprod.associativity" in names
    assert report["data"]["alpha"]


def test_verify_skips_star_product_without_nu(capsys, write_json):
    code, report = _run(capsys, "verify", "--config", write_json("curved.json", CURVED))
    assert code == 0
    statuses = _statuses(report)
    assert all(statuses[name] == "skipped" for name in STARPROD_CHECKS)
    assert statuses["groupoid.source_poisson"] == "pass"
    assert statuses["groupoid.d_operators_commute"] == "pass"


def test_verify_curved_chart_at_fourth_order(capsys, write_json, curved_groupoid):
    config = write_json("curved.json", {**CURVED, "fiber_truncation": 4, "word_length": 3})
    code, report = _run(capsys, "verify", "--config", config, "--workers", "2")
    failed = [check for check in report["checks"] if check["status"] == "fail"]
    assert failed == []
    assert code == 0
    assert report["data"]["F"]["2"] == "(1 + z1*w1)*zeta1*zetab1"
    assert report["data"]["F"]["3"] == "0"
    assert report["data"]["F"]["4"] == format_formal(curved_groupoid.F.homogeneous(4))
    assert "zeta1^2*zetab1^2" in report["data"]["F"]["4"]


def test_verify_output_is_reproducible(tmp_path, write_json, monkeypatch):
    config = write_json("flat.json", {**FLAT, "nu_truncation": 1})
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    monkeypatch.setenv("FGK_SEED", "3")
    assert main(["verify", "--config", config, "--json", str(first), "--workers", "1"]) == 0
    assert main(["verify", "--config", config, "--json", str(second), "--workers", "3"]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert json.loads(first.read_text(encoding="utf-8"))["config"]["rng_seed"] == 3


def test_timing_flag_records_wall_time(capsys, write_json):
    _, report = _run(capsys, "kp-check", "--config", write_json("flat.json", FLAT), "--timing")
    assert report["wall_time_seconds"] >= 0


def test_extend_family_reference(capsys, write_json):
    code, report = _run(capsys, "extend-family", "--config", write_json("plane.json", PLANE),
                        "--family", write_json("family.json", REFERENCE_FAMILY))
    assert code == 0
    statuses = _statuses(report)
    assert statuses["family.tensor_jacobi"] == "pass"
    assert statuses["family.extended.phi_formula"] == "pass"
    assert len(report["data"]["operators"]) == 3
    assert all(term["derivatives"] and len(term["derivatives"]) == 2
               for term in report["data"]["operators"][2])


def test_extend_family_rejects_incoherent_input(capsys, write_json):
    family = [[], [], [{"coefficient": "1", "derivatives": [[1, 0], [0, 1]]}]]
    code, report = _run(capsys, "extend-family", "--config", write_json("plane.json", PLANE),
                        "--family", write_json("family.json", family))
    assert code == 1
    assert _statuses(report)["family.input.property_B"] == "fail"
    assert "operators" not in report["data"]


def test_extend_family_needs_real_chart(capsys, write_json):
    code, _ = _run(capsys, "extend-family", "--config", write_json("flat.json", FLAT),
                   "--family", write_json("family.json", REFERENCE_FAMILY))
    assert code == 2
