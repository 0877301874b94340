import copy
import json
import math

import numpy as np
import pytest

from flatlag import config as cfg
from flatlag.cli import main
from flatlag.report import PropertyResult, VerificationReport, config_digest

TWO_PI = 2 * math.pi
E1 = [[1, 0, 0, 0], [0, 0, 0, 0]]
E2 = [[0, 0, 0, 0], [1, 0, 0, 0]]
IE1 = [[0, 1, 0, 0], [0, 0, 0, 0]]

SMALL_TWISTED = {
    "kind": "twisted_legendre",
    "n": 3,
    "alpha": 1.7320508075688772,
    "beta": 1.7320508075688772,
    "gamma": 1.7320508075688772,
    "a": [{"sin": [[0.2, 1.0, 0.0]]}],
    "b": {"poly": [1.0], "sin": [[0.1, 1.0, 1.5707963267948966]]},
    "domain": [[0.0, 1.0], [-0.2, 0.2], [-0.2, 0.2]],
    "grid": [5, 3, 3],
}


def run(tmp_path, config, command, *extra, name="run.json"):
    tmp_path.mkdir(parents=True, exist_ok=True)
    path = tmp_path / name
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


def test_great_circle_curve(tmp_path):
    code, out = run(tmp_path, {"curve": {"n": 2, "s_end": TWO_PI, "step": 1e-3}}, "curve")
    assert code == 0
    summary = json.loads((out / "curve_summary.json").read_text())
    assert summary["max_constraint_defect"] < 1e-9
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    s = data[:, 0]
    assert np.max(np.abs(data[:, 1] - np.cos(s))) < 1e-9
    assert np.max(np.abs(data[:, 5] - np.sin(s))) < 1e-9


def test_curve_n1_is_config_error(tmp_path):
    code, _ = run(tmp_path, {"curve": {"n": 1, "s_end": 1.0, "step": 1e-2}}, "curve")
    assert code == 2


def test_curve_unattainable_tolerance(tmp_path):
    conf = {"curve": {"n": 3, "alpha": 1.0, "a": [0.3], "s_end": 1.0, "step": 1e-2, "tolerance": 1e-20}}
    code, _ = run(tmp_path, conf, "curve")
    assert code == 1


def test_missing_section_and_bad_file(tmp_path, capsys):
    code, _ = run(tmp_path, {"output": {}}, "curve")
    assert code == 2
    assert main(["curve", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["nonsense"]) == 2


def test_schema_errors_list_every_path(tmp_path, capsys):
    conf = {
        "curve": {"n": "two", "s_end": 1.0, "step": -1.0, "bogus": 1},
        "verify": {"points": 0},
    }
    code, _ = run(tmp_path, conf, "curve")
    assert code == 2
    err = capsys.readouterr().err
    for path in ("curve/n", "curve/step", "verify/points", "curve:"):
        assert path in err
    assert "bogus" in err


def test_validate_rejects_keys_of_other_kinds():
    conf = {"immersion": {"kind": "cone", "domain": [[0, 1], [0, 1]], "scale": 1.0,
                          "curve": {"circle": {"u": E1, "v": E2}}, "lambda": [1, 0, 0]}}
    with pytest.raises(cfg.ConfigError) as exc:
        cfg.validate(conf)
    assert any("lambda" in p for p in exc.value.problems)


def test_build_cylinder_constant_rulings(tmp_path):
    conf = {"immersion": {"kind": "cylinder", "lambda": [1.0, 0.0, 0.0], "domain": [[0, 2], [-1, 1]], "grid": [5, 3]},
            "output": {"derivatives": True}}
    code, out = run(tmp_path, conf, "build")
    assert code == 0
    lines = (out / "immersion.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    d2 = [header.index(f"d2_L{q}_{c}") for q in (1, 2) for c in "wxyz"]
    assert np.all(rows[:, d2] == rows[0, d2])
    assert rows[0, d2].tolist() == [0, 0, 0, 0, 1, 0, 0, 0]


def test_build_ftilde_crossing_zero(tmp_path, capsys):
    conf = {"immersion": dict(SMALL_TWISTED, domain=[[0.0, 1.0], [-1.5, 0.2], [-0.2, 0.2]])}
    code, _ = run(tmp_path, conf, "build")
    assert code == 2
    assert "at point (t=" in capsys.readouterr().err


def test_surface_alias_csv_is_byte_identical(tmp_path):
    common = {"alpha": 0.5, "gamma": {"sin": [[0.2, 1.0, 0.0]]}, "b": 1.0,
              "domain": [[0.0, 1.0], [-0.3, 0.3]], "grid": [6, 4]}
    a = {"immersion": dict(common, kind="surface_legendre")}
    b = {"immersion": dict(common, kind="twisted_legendre", n=2)}
    code_a, out_a = run(tmp_path / "a", a, "build")
    code_b, out_b = run(tmp_path / "b", b, "build")
    assert code_a == code_b == 0
    assert (out_a / "immersion.csv").read_bytes() == (out_b / "immersion.csv").read_bytes()


def test_verify_passes_and_is_deterministic(tmp_path):
    conf = {"immersion": SMALL_TWISTED, "verify": {"points": 10}}
    code, out = run(tmp_path, conf, "verify", "--points")
    assert code == 0
    first = json.loads((out / "report.json").read_text())
    code, out = run(tmp_path, conf, "verify", "--points")
    second = json.loads((out / "report.json").read_text())
    first.pop("timestamp")
    second.pop("timestamp")
    assert first == second
    assert len(first["points"]) == 10
    assert list(first) == ["spec", "grid", "tolerances", "properties", "pass", "metadata", "points"]


def test_verify_non_legendre_cone_fails(tmp_path):
    conf = {"immersion": {"kind": "cone", "scale": {"poly": [0.0, 1.0]},
                          "curve": {"circle": {"u": E1, "v": IE1}}, "domain": [[0.5, 2.0], [0.0, 6.0]]},
            "verify": {"points": 5}}
    code, out = run(tmp_path, conf, "verify")
    assert code == 1
    props = {p["name"]: p for p in json.loads((out / "report.json").read_text())["properties"]}
    assert props["lagrangian"]["max_defect"] > 0.01 and not props["lagrangian"]["pass"]


def test_verify_unknown_property(tmp_path):
    conf = {"immersion": SMALL_TWISTED, "verify": {"points": 2, "properties": ["shininess"]}}
    assert run(tmp_path, conf, "verify")[0] == 2


def test_structeq_canonical(tmp_path):
    conf = {"structeq": {"profile": {"beta": 1.0, "alpha": [1.0, 0.3], "ratios": [1.7320508075688772] * 3},
                         "domain": [[0, 1], [-0.5, 0.5], [-0.5, 0.5]], "points": 10}}
    code, out = run(tmp_path, conf, "structeq", "--strict-paper")
    assert code == 0
    rep = json.loads((out / "structeq_report.json").read_text())
    assert {p["name"] for p in rep["properties"]} == {"symmetry_a", "condition_b", "gauss_c", "strict_normalization"}


def test_structeq_strict_mode_flags_bad_normalization(tmp_path):
    conf = {"structeq": {"profile": {"beta": 1.0, "alpha": [1.0, 0.3], "ratios": [1.733, 1.7320508075688772, 1.7320508075688772]},
                         "domain": [[0, 1], [-0.5, 0.5], [-0.5, 0.5]], "points": 5}}
    assert run(tmp_path, conf, "structeq")[0] == 0
    assert run(tmp_path, conf, "structeq", "--strict-paper")[0] == 1


def test_structeq_custom_sigma(tmp_path):
    base = {"profile": {"beta": 1.0, "alpha": [1.0], "ratios": [1.7320508075688772] * 3},
            "domain": [[0, 1], [-0.5, 0.5]], "points": 5}
    comps = [{"i": k, "a": 1, "b": 1, "c": 1, "fn": 1.7320508075688772} for k in (1, 2, 3)]
    conf = {"structeq": dict(base, sigma={"components": comps})}
    assert run(tmp_path, conf, "structeq")[0] == 0
    comps[0] = {"i": 1, "a": 1, "b": 1, "c": 1, "fn": {"poly": [1.7320508075688772, 0.01]}, "var": 2}
    assert run(tmp_path, {"structeq": dict(base, sigma={"components": comps})}, "structeq")[0] == 1
    comps[0] = {"i": 1, "a": 1, "b": 3, "c": 1, "fn": 1.0}
    assert run(tmp_path, {"structeq": dict(base, sigma={"components": comps})}, "structeq")[0] == 2


def test_report_serialization():
    rep = VerificationReport(spec={"b": 1, "a": 2}, grid={}, tolerances={"x": 1e-3})
    rep.add_point([0.0], x=1e-4)
    rep.add_point([1.0], x=2e-3)
    rep.extra_properties.append(PropertyResult("y", 0.0, 1.0))
    d = rep.to_dict(timestamp=False)
    assert d["properties"][0] == {"name": "x", "max_defect": 2e-3, "tolerance": 1e-3, "pass": False}
    assert rep.failures() == ["x"]
    assert "timestamp" not in d
    assert list(rep.to_dict())[-1] == "timestamp"


def test_config_digest_is_order_independent():
    a = {"x": 1, "y": [1, 2]}
    b = copy.deepcopy({"y": [1, 2], "x": 1})
    assert config_digest(a) == config_digest(b)
