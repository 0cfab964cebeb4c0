"""コマンドライン — 終了コードと出力形式"""
import csv
import json
from fractions import Fraction

import pytest

from src.cli import main
from src.weights import preset, weight_to_json

from conftest import BITS, NODES

FAST = ["--precision-bits", str(BITS), "--nodes", str(NODES)]


@pytest.fixture
def weight_file(tmp_path):
    def write(w=None, label=None, text=None, name="w.json"):
        path = tmp_path / name
        if text is None:
            obj = weight_to_json(w)
            if label:
                obj["label"] = label
            text = json.dumps(obj)
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# ── recurrence ──
def test_recurrence_csv(tmp_path, weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    out = tmp_path / "tab.csv"
    code = main(["recurrence", "--weight", path, "--n-max", "3", "--format", "csv", "--out", str(out), *FAST])
    assert code == 0
    rows = list(csv.DictReader(out.read_text(encoding="utf-8").splitlines()))
    assert [r["n"] for r in rows] == ["0", "1", "2", "3"]
    assert float(rows[2]["alpha"]) == pytest.approx(5)
    assert float(rows[2]["beta"]) == pytest.approx(4)
    assert float(rows[2]["h"]) == pytest.approx(4)
    assert float(rows[0]["beta"]) == 0


def test_recurrence_json(capsys, weight_file):
    path = weight_file(preset("jacobi_classical", alpha=0, beta=0))
    code, out = _run(capsys, "recurrence", "--weight", path, "--n-max", "2", *FAST)
    assert code == 0
    obj = json.loads(out)
    assert obj["source"] == "stieltjes"
    assert float(obj["rows"][1]["beta"]) == pytest.approx(1 / 3)


@pytest.mark.parametrize("text", ["{not json", json.dumps({"family": "laguerre", "lambda": -1})])
def test_bad_weight_exits_2(weight_file, text):
    assert main(["recurrence", "--weight", weight_file(text=text), *FAST]) == 2


def test_missing_weight_file_exits_2(tmp_path):
    assert main(["recurrence", "--weight", str(tmp_path / "nope.json"), *FAST]) == 2


def test_missing_output_directory_exits_2(tmp_path, weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    assert main(["recurrence", "--weight", path, "--out", str(tmp_path / "no" / "x.csv"), *FAST]) == 2


def test_missing_weight_argument():
    with pytest.raises(SystemExit) as e:
        main(["recurrence"])
    assert e.value.code == 2


def test_unknown_tolerance_key_exits_2(weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    assert main(["verify", "--weight", path, "--tol", "bogus=1", *FAST]) == 2


def test_label_must_match_weight(weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    assert main(["recurrence", "--weight", path, "--family", "chen_mckay", *FAST]) == 2


# ── ladder ──
def test_ladder_classical_laguerre(capsys, weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    code, out = _run(capsys, "ladder", "--weight", path, "--n", "3", "--z=-2", *FAST)
    assert code == 0
    obj = json.loads(out)
    pair = obj["pairs"][0]
    assert float(pair["A_re"]) == pytest.approx(-0.5)
    assert float(pair["B_re"]) == pytest.approx(1.5)
    assert float(pair["A_im"]) == 0
    assert float(obj["residuals"][0]["lowering"]) < 1e-25


def test_ladder_jacobi(capsys, weight_file):
    path = weight_file(preset("jacobi_classical", alpha=0, beta=0))
    code, out = _run(capsys, "ladder", "--weight", path, "--n", "1", "--z", "2", "--format", "csv", *FAST)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert float(rows[0]["A_re"]) == pytest.approx(-1)


def test_ladder_z_on_support_exits_2(weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    assert main(["ladder", "--weight", path, "--n", "3", "--z", "2", *FAST]) == 2


# ── verify ──
def test_verify_passes(capsys, weight_file):
    path = weight_file(preset("jacobi_classical", alpha=Fraction(1, 2), beta=Fraction(1, 2)), "jacobi_classical")
    code, out = _run(capsys, "verify", "--weight", path, "--n-max", "3", "--z", "2j", "--z", "1.5",
                     "--checks", "orthogonality,ladder,compat,oracle", *FAST)
    assert code == 0
    obj = json.loads(out)
    assert obj["campaign"]["family_label"] == "jacobi_classical"
    assert all(r["pass"] for r in obj["results"].values())
    assert "duration_ms" not in obj["meta"]


def test_verify_detects_perturbation(capsys, weight_file):
    path = weight_file(preset("laguerre_classical", lam=Fraction(-1, 2)))
    code, out = _run(capsys, "verify", "--weight", path, "--n-max", "5", "--z", "1+2j",
                     "--checks", "ladder", "--perturb-beta", "3=1e-6", *FAST)
    assert code == 1
    assert json.loads(out)["results"]["ladder"]["pass"] is False


def test_verify_unknown_check_exits_2(weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    assert main(["verify", "--weight", path, "--z", "1j", "--checks", "ladder,astrology", *FAST]) == 2


# ── rhp / hankel / diff-check ──
def test_rhp_dump(capsys, weight_file):
    path = weight_file(preset("jacobi_classical", alpha=0, beta=0))
    code, out = _run(capsys, "rhp", "--weight", path, "--n", "2", "--z", "2j", *FAST)
    assert code == 0
    frame = json.loads(out)["frames"][0]
    assert frame["n"] == 2
    assert float(frame["dety_residual"]) < 1e-25
    assert float(frame["jump_residual"]) < 1e-4


def test_hankel_against_barnes_g(capsys, weight_file):
    path = weight_file(preset("laguerre_classical", lam=Fraction(-1, 2)), "laguerre_classical")
    code, out = _run(capsys, "hankel", "--weight", path, "--n-max", "5", *FAST)
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 5
    assert all(float(r["rel_diff"]) < 1e-25 for r in rows)


def test_diff_check_needs_family(weight_file):
    path = weight_file(preset("laguerre_classical", lam=0))
    assert main(["diff-check", "--weight", path, *FAST]) == 2


def test_diff_check_passes(capsys, weight_file):
    path = weight_file(preset("jacobi_exp_linear", alpha=Fraction(1, 2), beta=Fraction(1, 2), t=1),
                       "jacobi_exp_linear")
    code, out = _run(capsys, "diff-check", "--weight", path, "--n", "2", *FAST)
    assert code == 0
    obj = json.loads(out)
    assert obj["t"] == "1"
    assert obj["entries"][0]["pass"] is True
