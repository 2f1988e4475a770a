import json
import subprocess
import sys

import pytest

from wlab.cli import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main

SMALL = {"n": 1, "K": 2, "L": 3}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, command, cfg, *extra, out="out"):
    args = [command, "--config", write(tmp_path, cfg), "--out", str(tmp_path / out), *extra]
    return main(args)


def test_constants_values(tmp_path):
    cfg = {"window": {"n": 1, "K": 0, "L": 0}, "exponents": {"p": 2},
           "weights": [{"kind": "step", "values": [1, 2]}]}
    assert run(tmp_path, "constants", cfg) == EXIT_OK
    got = json.loads((tmp_path / "out" / "constants.json").read_text())["weights"][0]["constants"]
    assert got["a1"] == pytest.approx(1.5) and got["ap"] == pytest.approx(1.125)
    assert got["apr_bracket"] == pytest.approx(1) and got["rh_inf"] == pytest.approx(4 / 3)
    assert got["fujii_wilson"] == pytest.approx(4 / 3)
    assert "rh_s" not in got


def test_constants_theorem_log10(tmp_path):
    cfg = {"window": SMALL, "weights": ["ones"], "theorem": "sawyer",
           "inputs": {"p": 2, "A": 1, "B": {"2": 1}}}
    assert run(tmp_path, "constants", cfg) == EXIT_OK
    out = json.loads((tmp_path / "out" / "constants.json").read_text())
    assert out["theorem"]["id"] == "sawyer" and out["theorem"]["log10"] > 0


def test_constants_missing_exponent(tmp_path, capsys):
    cfg = {"window": SMALL, "weights": ["ones"], "constants_requested": ["ap"]}
    assert run(tmp_path, "constants", cfg) == EXIT_CONFIG
    assert "missing field 'exponents.p' required by ap" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("cfg", [
    {"theorem": "nope", "weights": []},
    {"theorem": "sawyer", "window": SMALL, "weights": ["ones", "ones"]},
    {"theorem": "sawyer", "window": SMALL, "exponents": {"p": 2}, "weights": ["ones"]},
    {"experiments": []},
])
def test_verify_config_errors(tmp_path, cfg):
    assert run(tmp_path, "verify", cfg) == EXIT_CONFIG
    assert not (tmp_path / "out").exists()


def test_bad_json_and_missing_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["verify", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["verify", "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["verify", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    assert main(["constants", "--suite", "paper-core"]) == EXIT_CONFIG
    assert main(["nope"]) == EXIT_CONFIG


def verify_cfg(**opts):
    return {"window": SMALL, "samples": 4, "experiments": [
        {"id": "a", "theorem": "sawyer", "exponents": {"p": 2}, "weights": ["ones", "ones"],
         "options": opts},
        {"id": "b", "theorem": "dualsawyer", "exponents": {"p": 2, "eps": 1},
         "weights": [{"kind": "step", "values": [1, 2]}, "ones"]},
    ]}


def test_verify_outputs(tmp_path, capsys):
    assert run(tmp_path, "verify", verify_cfg()) == EXIT_OK
    out = tmp_path / "out"
    rep = json.loads((out / "reports.json").read_text())
    assert rep["pass"] and [r["experiment_id"] for r in rep["reports"]] == ["a", "b"]
    csv_text = (out / "reports.csv").read_bytes()
    assert csv_text.startswith(b"theorem,input_id,lhs,rhs,ratio,empirical_C,") and b"\r\n" in csv_text
    assert set(json.loads((out / "timings.json").read_text())) == {"a", "b"}
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS a") and lines[1].startswith("PASS b")
    assert not [p for p in out.iterdir() if p.name.startswith(".tmp-")]


def test_verify_violation_exit(tmp_path):
    assert run(tmp_path, "verify", verify_cfg(constant_shift_log10=-1e9)) == EXIT_VIOLATION
    rep = json.loads((tmp_path / "out" / "reports.json").read_text())
    assert not rep["pass"] and "VIOLATION" in rep["reports"][0]


def test_verify_threads_byte_identical(tmp_path, monkeypatch):
    cfg = verify_cfg()
    assert run(tmp_path, "verify", cfg, "--threads", "1", out="t1") == EXIT_OK
    monkeypatch.setenv("WLAB_THREADS", "8")
    assert run(tmp_path, "verify", cfg, out="t8") == EXIT_OK
    for name in ("reports.json", "reports.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t8" / name).read_bytes()
    monkeypatch.setenv("WLAB_THREADS", "many")
    assert run(tmp_path, "verify", cfg, out="tx") == EXIT_CONFIG


def test_verify_overrides(tmp_path):
    cfg = verify_cfg()
    assert run(tmp_path, "verify", cfg, "--window-K", "1", "--window-L", "2", "--seed", "4") == EXIT_OK
    rep = json.loads((tmp_path / "out" / "reports.json").read_text())
    assert len(rep["reports"][0]["rows"]) == 4


def test_search_outputs_and_budget(tmp_path):
    cfg = {"objective": "sawyer", "family": {"kind": "constant", "count": 2}, "window": SMALL,
           "budget": 50, "options": {"p": 2, "samples": 3}}
    assert run(tmp_path, "search", cfg) == EXIT_OK
    first = (tmp_path / "out" / "search.json").read_bytes()
    assert run(tmp_path, "search", cfg) == EXIT_OK
    assert (tmp_path / "out" / "search.json").read_bytes() == first
    assert (tmp_path / "out" / "search_trace.csv").read_text().startswith("restart,eval")
    assert run(tmp_path, "search", {**cfg, "budget": 0}, out="o2") == EXIT_CONFIG
    assert run(tmp_path, "search", {"objective": "sawyer"}, out="o3") == EXIT_CONFIG
    assert not (tmp_path / "o2").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wlab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "constants" in res.stdout
