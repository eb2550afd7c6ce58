from __future__ import annotations

import csv
import json
import re
import shutil
import subprocess
import sys

import pytest

from folearn.cli import EXIT_OK, EXIT_REJECT, EXIT_USAGE, main
from folearn.structure import load_structure_file, max_degree, structure_to_doc

from conftest import EXAMPLE1, EXAMPLE1_LABELS


@pytest.fixture
def files(tmp_path, fig1, ex1_train):
    paths = {
        "fig1": tmp_path / "fig1.json",
        "train": tmp_path / "ex1.json",
        "bad_train": tmp_path / "contradiction.json",
        "templates": tmp_path / "space.txt",
    }
    paths["fig1"].write_text(json.dumps(structure_to_doc(fig1)))
    paths["train"].write_text(json.dumps(ex1_train.to_doc()))
    paths["bad_train"].write_text(json.dumps({"k": 1, "examples": [{"tuple": ["a"], "label": 0}, {"tuple": ["a"], "label": 1}]}))
    paths["templates"].write_text(f"# example space\n{EXAMPLE1}\nphi(x; y1,y2) := E(x,y1)\n")
    return {k: str(v) for k, v in paths.items()}


def _learn(files, out, *extra):
    return main(
        ["learn", "--structure", files["fig1"], "--train", files["train"], "--k", "1", "--ell", "2", "--q", "1", "--r-star", "2", "--out", out, *extra]
    )


def test_learn_realized_types_then_eval(files, tmp_path, capsys):
    out = str(tmp_path / "hyp.json")
    assert _learn(files, out, "--space", "realized-types") == EXIT_OK
    doc = json.loads(open(out).read())
    assert doc["kind"] == "types" and doc["radius"] == 2
    for u, label in EXAMPLE1_LABELS.items():
        capsys.readouterr()
        assert main(["eval", "--structure", files["fig1"], "--hypothesis", out, "--tuple", u]) == EXIT_OK
        assert capsys.readouterr().out.strip() == str(label)


def test_learn_explicit(files, tmp_path, capsys):
    out = str(tmp_path / "hyp.json")
    assert _learn(files, out, "--space", "explicit", "--templates", files["templates"]) == EXIT_OK
    doc = json.loads(open(out).read())
    assert doc["kind"] == "formula" and len(doc["params"]) == 2
    assert main(["eval", "--structure", files["fig1"], "--hypothesis", out, "--tuple", "a"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0"


def test_learn_min_error_stdout(files, capsys):
    code = main(
        ["learn", "--structure", files["fig1"], "--train", files["bad_train"], "--k", "1", "--ell", "0", "--r-star", "1",
         "--space", "explicit", "--template", "phi(x; ) := R(x)", "--mode", "min-error"]
    )
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["kind"] == "formula"


def test_learn_reject_exit_code(files, tmp_path, capsys):
    out = tmp_path / "never.json"
    code = main(
        ["learn", "--structure", files["fig1"], "--train", files["bad_train"], "--k", "1", "--ell", "1", "--r-star", "1",
         "--q-t", "1", "--space", "realized-types", "--out", str(out)]
    )
    assert code == EXIT_REJECT and not out.exists()
    assert "rejected" in capsys.readouterr().err


def test_config_file_with_override(files, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"structure": files["fig1"], "train": files["train"], "k": 1, "ell": 2, "r_star": 5, "space": "explicit", "templates": files["templates"]}))
    out = str(tmp_path / "hyp.json")
    assert main(["learn", "--config", str(cfg), "--r-star", "2", "--out", out]) == EXIT_OK
    assert json.loads(open(out).read())["radius"] == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["learn"],
        ["learn", "--k", "x"],
        ["frobnicate"],
        ["eval", "--structure", "/nonexistent.json", "--hypothesis", "h", "--tuple", "a"],
        ["gen", "--n", "0"],
        ["learn", "--config", "/nonexistent.json"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.startswith("folearn: error:") and err.count("\n") == 1


def test_eval_unknown_element(files, tmp_path):
    out = str(tmp_path / "hyp.json")
    _learn(files, out, "--space", "explicit", "--templates", files["templates"])
    assert main(["eval", "--structure", files["fig1"], "--hypothesis", out, "--tuple", "zz"]) == EXIT_USAGE


def test_gen(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen", "--n", "50", "--d-max", "3", "--seed", "4", "--out", str(out)]) == EXIT_OK
    first = out.read_bytes()
    s = load_structure_file(out)
    assert len(s) == 50 and max_degree(s) <= 3
    assert main(["gen", "--n", "50", "--d-max", "3", "--seed", "4", "--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == first


def test_pac_and_agnostic(files, tmp_path, capsys):
    common = ["--structure", files["fig1"], "--k", "1", "--ell", "1", "--r-star", "1", "--template", "phi(x; y) := E(x,y) | R(x)",
              "--template", "phi(x; y) := E(y,x)", "--target-template", "phi(x; y) := E(x,y) | R(x)", "--trials", "3",
              "--epsilon", "0.3", "--delta", "0.3", "--seed", "7"]
    rj, rc = tmp_path / "pac.json", tmp_path / "pac.csv"
    assert main(["pac", *common, "--report", str(rj)]) == EXIT_OK
    assert main(["pac", *common, "--report", str(rc), "--format", "csv"]) == EXIT_OK
    doc = json.loads(rj.read_text())
    assert doc["kind"] == "pac" and len(doc["trials"]) == 3
    rows = list(csv.reader(rc.open()))
    assert len(rows) == 4 and rows[0][0] == "trial"
    ra = tmp_path / "ag.json"
    assert main(["agnostic", *common, "--noise", "1/10", "--sample-size-rule", "manual", "--manual-t", "30", "--report", str(ra)]) == EXIT_OK
    assert json.loads(ra.read_text())["reference_error"]["fraction"] is not None
    assert re.search(r"successes [0-3]/3 \(", capsys.readouterr().err)


def test_vc(files, tmp_path, capsys):
    assert main(["vc", "--structure", files["fig1"], "--k", "1", "--ell", "1", "--template", "phi(x; y) := x = y"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "1"
    concepts = tmp_path / "c.json"
    concepts.write_text(json.dumps([[int(b) for b in f"{i:03b}"] for i in range(8)]))
    assert main(["vc", "--concepts", str(concepts)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "3"


def test_check(files, tmp_path):
    out = tmp_path / "check.json"
    argv = ["check", "--structure", files["fig1"], "--train", files["train"], "--k", "1", "--ell", "2", "--r-star", "2",
            "--templates", files["templates"], "--out", str(out)]
    assert main(argv) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["found"] is not None and doc["min_error"] == "0/1"
    assert main(argv[:-2] + ["--mode", "min-error", "--candidates", "all", "--out", str(out)]) == EXIT_OK


@pytest.mark.skipif(shutil.which("folearn") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["folearn", "gen", "--n", "3", "--d-max", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["universe"] == ["v0", "v1", "v2"]
    res = subprocess.run([sys.executable, "-m", "folearn.cli", "learn"], capture_output=True, text=True)
    assert res.returncode == EXIT_USAGE
