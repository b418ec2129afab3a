import json
import subprocess
import sys

import pytest

from ropack.cli import main
from ropack.core import load_instance, save_instance


@pytest.fixture
def inst_file(tmp_path, three_items):
    path = tmp_path / "three.json"
    save_instance(three_items, path)
    return path


def test_run_writes_report(tmp_path, inst_file, capsys):
    out = tmp_path / "report.json"
    assert main(["run", "--inst", str(inst_file), "--algo", "vgap", "--trials", "20",
                 "--seed", "3", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["trials"] == 20 and rep["opt"] == 1.1 and rep["seed"] == 3
    assert "ratio" in capsys.readouterr().out


def test_run_to_stdout_with_params(inst_file, capsys):
    assert main(["run", "--inst", str(inst_file), "--algo", "vgap", "--trials", "5",
                 "--q1", "0", "--q2", "0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["params"] == {"q1": 0.0, "q2": 0.0}


def test_gen_then_opt(tmp_path, capsys):
    path = tmp_path / "g.json"
    assert main(["gen", "--n", "6", "--m", "2", "--d", "2", "--seed", "1", "-o", str(path)]) == 0
    inst = load_instance(path)
    assert (inst.n, inst.m, inst.d) == (6, 2, 2)
    capsys.readouterr()
    assert main(["opt", str(path), "--method", "enum"]) == 0
    enum = json.loads(capsys.readouterr().out)
    assert main(["opt", str(path)]) == 0
    bb = json.loads(capsys.readouterr().out)
    assert enum["value"] == bb["value"] and enum["packing"] == bb["packing"]


def test_lbgen_round_trip(tmp_path, capsys):
    path = tmp_path / "lb.json"
    assert main(["lbgen", "--d", "2", "--seed", "5", "-o", str(path)]) == 0
    assert "structure verified" in capsys.readouterr().out
    inst = load_instance(path, exact=True)
    assert inst.n == 32 and inst.m == 1


def test_lbgen_rejects_d1(capsys):
    assert main(["lbgen", "--d", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_errors_exit_2(tmp_path, inst_file, capsys):
    assert main(["run", "--inst", str(tmp_path / "missing.json"), "--algo", "vgap"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["opt", str(bad)]) == 2
    assert main(["run", "--inst", str(inst_file), "--algo", "vmkp"]) == 2
    assert main(["run", "--inst", str(inst_file), "--algo", "vgap", "--q1", "0.9",
                 "--q2", "0.1"]) == 2


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_console_script_module():
    out = subprocess.run([sys.executable, "-m", "ropack.cli", "--help"],
                         capture_output=True, text=True, check=True)
    assert "lbgen" in out.stdout
