import csv
import json
import subprocess
import sys

import pytest

from epsqca.cli import HEADERS, main, read_config
from epsqca.errors import InputError
from epsqca.spinchain import max_dense_sites


def run(args, capsys):
    rc = main(args)
    out, err = capsys.readouterr()
    return rc, out, err


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_lr_scan_writes_documented_header(tmp_path, capsys):
    out = tmp_path / "lr.csv"
    rc, _, err = run(["lr-scan", "--n", "6", "--t", "0.25,0.5", "--windows", "2,4", "--out", str(out)], capsys)
    assert rc == 0
    assert out.read_text().splitlines()[0] == HEADERS["lr-scan"]
    assert len(rows(out)) == 4
    assert "0 violate" in err


def test_help_lists_csv_header(capsys):
    with pytest.raises(SystemExit) as info:
        main(["qca-error-scan", "--help"])
    assert info.value.code == 0
    assert "max_cut_error" in capsys.readouterr().out


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["lr-scan", "--frobnicate"])
    assert info.value.code == 2


def test_bad_model_is_one_line_error(capsys):
    rc, out, err = run(["lr-scan", "--model", "potts"], capsys)
    assert rc == 1 and out == ""
    assert len(err.strip().splitlines()) == 1 and "tfim" in err


def test_dense_cap_is_reported(capsys):
    rc, _, err = run(["lr-scan", "--n", "11"], capsys)
    assert rc == 1 and "max_dense_sites" in err
    assert max_dense_sites() == 10


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scan\nn = 5\nt = 0.3\nwindows = 2, 4\n")
    rc, out, _ = run(["lr-scan", "--config", str(cfg), "--n", "6"], capsys)
    assert rc == 0
    lines = out.splitlines()
    assert len(lines) == 3 and lines[1].startswith("tfim,6,3,0.3,2,")
    cfg.write_text("bogus_key = 1\n")
    rc, _, err = run(["lr-scan", "--config", str(cfg)], capsys)
    assert rc == 1 and "bogus_key" in err


def test_read_config_rejects_garbage(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("just words\n")
    with pytest.raises(InputError):
        read_config(str(p))


def test_build_then_mpo_pipeline(tmp_path, capsys):
    circ = tmp_path / "c.json"
    m = tmp_path / "m.json"
    assert run(["build-qca", "--n", "6", "--t", "0.4", "--block", "3", "--out", str(circ)], capsys)[0] == 0
    rc, _, err = run(["qca-to-mpo", "--in", str(circ), "--out", str(m)], capsys)
    assert rc == 0 and "bonds" in err
    doc = json.loads(m.read_text())
    assert doc["n"] == 6 and len(doc["tensors"]) == 6


def test_scan_fit_window_chain(tmp_path, capsys):
    scan, fit, win = tmp_path / "s.csv", tmp_path / "f.json", tmp_path / "w.csv"
    rc, _, _ = run(
        ["qca-error-scan", "--n", "8", "--t", "0.25,0.5", "--blocks", "2,3,4", "--out", str(scan), "--fit-out", str(fit)],
        capsys,
    )
    assert rc == 0
    assert run(["fit-constants", "--in", str(scan), "--out", str(tmp_path / "g.json")], capsys)[0] == 0
    assert json.loads(fit.read_text())["mu"] > 0
    rc, _, _ = run(["window-size", "--n", "8", "--t", "0.5", "--epsilon", "1e-3", "--constants", str(fit), "--out", str(win)], capsys)
    assert rc == 0 and int(rows(win)[0]["window_size"]) >= 2


def test_remaining_subcommands(tmp_path, capsys):
    rc, out, _ = run(["patch-error", "--n", "6", "--t", "0.5", "--windows", "2,4"], capsys)
    assert rc == 0 and out.splitlines()[0] == HEADERS["patch-error"]
    rc, out, _ = run(["mpo-roundtrip", "--n", "4", "--model", "random", "--seed", "3"], capsys)
    assert rc == 0 and float(rows_from(out)[0]["max_entry_error"]) < 1e-10
    summary = tmp_path / "t.json"
    rc, out, _ = run(["trotter-compare", "--n", "6", "--t", "1", "--steps", "8,16", "--summary-out", str(summary)], capsys)
    assert rc == 0 and out.splitlines()[0] == HEADERS["trotter-compare"]
    assert "mpo_max_bond" in json.loads(summary.read_text())["summary"]


def rows_from(text):
    return list(csv.DictReader(text.splitlines()))


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "epsqca", "window-size", "--n", "10", "--t", "0", "--epsilon", "1"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert p.stdout.splitlines()[1].endswith(",5")


@pytest.mark.parametrize(
    "args",
    [
        ["lr-scan", "--model", "random", "--seed", "5", "--n", "6", "--t", "0.5,1", "--windows", "2,4"],
        ["qca-error-scan", "--model", "random", "--seed", "5", "--n", "6", "--t", "0.5", "--blocks", "2,3"],
        ["trotter-compare", "--n", "6", "--steps", "4,8"],
    ],
)
def test_determinism(args, capsys):
    first = run(args, capsys)[1]
    second = run(args, capsys)[1]
    assert first == second
