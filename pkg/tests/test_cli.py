import json
import subprocess
import sys
from pathlib import Path

import pytest

from robcert.cli import main

TASKS = Path(__file__).resolve().parent.parent / "tasks"


def _run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    status = main([*argv, "--out", str(out)])
    return status, (out.read_text() if out.exists() else None)


def _strip_timing(text):
    d = json.loads(text)
    d.pop("timing")
    return d


def test_verify_constructions(tmp_path):
    status, text = _run(tmp_path, "verify-constructions")
    assert status == 0
    rep = json.loads(text)
    assert {r["name"] for r in rep["rows"]} == {"seven_point", "eight_point"}
    assert set(rep) >= {"command", "version", "config", "config_hash", "rows", "aggregate", "timing"}


@pytest.mark.parametrize(
    "argv",
    [
        ["certify", "--mode", "l1", "--task", str(TASKS / "halfspace_l1.json"), "--trials", "3", "--eps", "0.2"],
        ["certify", "--mode", "witness", "--task", str(TASKS / "seven_point.json"), "--trials", "2"],
        ["certify", "--mode", "tolerant", "--task", str(TASKS / "halfspace_l2.json"), "--eps", "0.2"],
        ["attack", "--adversary", "threshold", "--task", str(TASKS / "threshold.json"), "--trials", "2"],
        ["learn", "--algo", "erm", "--task", str(TASKS / "seven_point.json"), "--m", "30"],
        ["learn", "--algo", "compress", "--task", str(TASKS / "threshold.json"), "--m", "30"],
        ["game", "--kind", "l2", "--trials", "3"],
        ["game", "--kind", "tolerant", "--max-queries", "5"],
    ],
    ids=lambda a: "-".join(a[:2]),
)
def test_commands_are_deterministic(tmp_path, argv):
    s1, t1 = _run(tmp_path, *argv, "--seed", "7", name="a.json")
    s2, t2 = _run(tmp_path, *argv, "--seed", "7", name="b.json")
    assert s1 == s2 == 0
    assert _strip_timing(t1) == _strip_timing(t2)


def test_jobs_match_serial(tmp_path):
    argv = ["game", "--kind", "l2", "--trials", "4", "--seed", "j"]
    _, serial = _run(tmp_path, *argv, name="s.json")
    _, par = _run(tmp_path, *argv, "--jobs", "2", name="p.json")
    assert _strip_timing(serial)["rows"] == _strip_timing(par)["rows"]
    assert json.loads(serial)["config_hash"] == json.loads(par)["config_hash"]


def test_csv_output(tmp_path):
    status, text = _run(tmp_path, "game", "--kind", "l2", "--trials", "3", "--format", "csv", name="o.csv")
    assert status == 0
    lines = text.strip().splitlines()
    assert len(lines) == 4


def test_script_strategy(tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps({"queries": [[2, 0], [0, 2]], "verdict": "low"}))
    status, text = _run(tmp_path, "game", "--kind", "l2", "--strategy", str(script))
    assert status == 0
    (row,) = json.loads(text)["rows"]
    assert row["verified"]


def test_report_summarises(tmp_path):
    _run(tmp_path, "game", "--kind", "l2", "--trials", "2", name="g.json")
    status, text = _run(tmp_path, "report", str(tmp_path / "g.json"), name="r.json")
    assert status == 0
    (row,) = json.loads(text)["rows"]
    assert row["command"] == "game" and row["trials"] == 2


def test_exit_codes(tmp_path):
    assert _run(tmp_path, "certify", "--mode", "l1", "--task", str(tmp_path / "nope.json"))[0] == 2
    assert _run(tmp_path, "certify", "--mode", "l1")[0] == 2
    assert _run(tmp_path, "certify", "--mode", "l1", "--task", str(TASKS / "halfspace_l1.json"), "--m", "40")[0] == 2
    assert _run(tmp_path, "learn", "--algo", "ssl-margin", "--task", str(TASKS / "eight_point.json"), "--m", "20")[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["certify", "--mode", "bogus"])
    assert exc.value.code == 2


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "robcert.cli", "verify-constructions", "--which", "seven_point"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert out.returncode == 0
    assert json.loads(out.stdout)["rows"][0]["passed"]
