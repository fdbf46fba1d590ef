import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from charfol.cli import ConfigError, main, resolve_config
from charfol.export import RESULT_SCHEMA


def load(tmp_path, command):
    return json.loads((tmp_path / f"{command}.json").read_text())


def test_trace_leaf_sphere(tmp_path):
    assert main(["trace-leaf", "--out", str(tmp_path), "--set", "expected_action=3.141592653589793"]) == 0
    result = load(tmp_path, "trace-leaf")
    jsonschema.validate(result, RESULT_SCHEMA)
    assert result["outputs"]["closed"] is True
    assert result["outputs"]["action"] == pytest.approx(np.pi, abs=1e-6)
    assert sorted(result["artifacts"]) == ["trace-leaf.csv", "trace-leaf.json", "trace-leaf.svg"]
    header = (tmp_path / "trace-leaf.csv").read_text().splitlines()[0]
    assert header == "t,x1,y1,x2,y2,H"


@pytest.mark.parametrize("command", ["displace", "hopf-area", "scaling-law", "extend-map",
                                     "duality-check", "volume-check"])
def test_light_scenarios_pass(command, tmp_path):
    assert main([command, "--out", str(tmp_path), "--no-svg"]) == 0
    result = load(tmp_path, command)
    jsonschema.validate(result, RESULT_SCHEMA)
    assert result["passed"] and result["config"]["svg"] is False


def test_scaling_law_radius_two(tmp_path):
    assert main(["scaling-law", "--out", str(tmp_path), "--set", "radii=[2.0]"]) == 0
    law = load(tmp_path, "scaling-law")["outputs"]["laws"][0]
    assert law["action"] == pytest.approx(4 * np.pi, abs=1e-6)


@pytest.mark.slow
def test_verify_hammer_canonical(tmp_path):
    assert main(["verify-hammer", "--out", str(tmp_path)]) == 0
    result = load(tmp_path, "verify-hammer")
    conds = result["outputs"]["report"]["conditions"]
    assert all(c["passed"] and (c["margin"] > 0 or name == "condition1") for name, c in conds.items())


def test_check_failure_exit_code(tmp_path):
    code = main(["build-hammer", "--out", str(tmp_path), "--set", "y=[0, 0, 1, 0]"])
    assert code == 1
    result = load(tmp_path, "build-hammer")
    assert not result["passed"] and "NotSameLeafError" in result["error"]


def test_config_errors(tmp_path):
    assert main(["trace-leaf", "--out", str(tmp_path), "--set", "nope=1"]) == 2
    assert main(["trace-leaf", "--out", str(tmp_path), "--set", "dt=abc"]) == 2
    assert main(["trace-leaf", "--out", str(tmp_path), "--set", "surface=torus"]) == 2
    assert main(["trace-leaf", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("command: hopf-area\n")
    assert main(["trace-leaf", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_precedence(tmp_path):
    cfg_file = {"dt": 0.02, "output_dir": "from-file", "seed": 3}
    env = {"CHARFOL_OUTPUT_DIR": "from-env"}
    cfg = resolve_config("trace-leaf", cfg_file, ["dt=0.005"], env=env)
    assert cfg["dt"] == 0.005 and cfg["output_dir"] == "from-env" and cfg["seed"] == 3
    cfg = resolve_config("trace-leaf", cfg_file, [], seed=9, out="from-flag", env=env)
    assert cfg["output_dir"] == "from-flag" and cfg["seed"] == 9
    cfg = resolve_config("displace", {}, ["arcs.0.radius=0.1"], env={})
    assert cfg["arcs"][0]["radius"] == 0.1
    with pytest.raises(ConfigError):
        resolve_config("displace", {}, ["arcs.5.radius=0.1"], env={})


def test_yaml_config_file(tmp_path):
    cfg = tmp_path / "scenario.yaml"
    cfg.write_text("command: trace-leaf\nsurface: ellipsoid12\npoint: [0, 0, 2, 0]\n"
                   "max_length: 30\nexpect_closed: true\nexpected_action: 12.566370614359172\n")
    assert main(["trace-leaf", "--config", str(cfg), "--out", str(tmp_path)]) == 0


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CHARFOL_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["duality-check"]) == 0
    assert (tmp_path / "env" / "duality-check.json").exists()


def test_deterministic_json(tmp_path):
    runs = []
    for _ in range(2):
        assert main(["hopf-area", "--out", str(tmp_path), "--seed", "11"]) == 0
        data = load(tmp_path, "hopf-area")
        data.pop("wall_time")
        runs.append(json.dumps(data, sort_keys=True))
    assert runs[0] == runs[1]


def test_schema_flag_and_module_entry(capsys):
    assert main(["--print-schema"]) == 0
    assert json.loads(capsys.readouterr().out)["title"] == "charfol result"
    proc = subprocess.run([sys.executable, "-m", "charfol", "--print-schema"],
                          capture_output=True, text=True, check=True)
    assert "properties" in json.loads(proc.stdout)
