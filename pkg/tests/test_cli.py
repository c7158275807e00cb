import csv
import io
import json
from pathlib import Path

import pytest

from rgvcodes.cli import EXPONENT_FIELDS, fmt, main
from rgvcodes.codebook import Codebook
from rgvcodes.simulate import CSV_FIELDS

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2))
    return str(p)


def test_fmt_roundtrips_floats():
    for x in (0.1, 1 / 3, 1e-300, 123456.789, -2.5e-7):
        assert float(fmt(x)) == x
    assert fmt(-0.0) == "0"
    assert fmt(float("inf")) == "inf"
    assert fmt(None) == ""


def test_exponent_pure_noise_is_zero(capsys):
    code, out, _ = run(capsys, "exponent", "--config", str(CONFIGS / "bsc_half.json"))
    assert code == 0
    table = rows(out)
    assert list(table[0]) == list(EXPONENT_FIELDS)
    for r in table:
        for col in ("E_primal", "E_dual", "E_rc", "E_ex", "E_ck"):
            assert abs(float(r[col])) <= 1e-6


def test_exponent_primal_dual_agree_and_flags(capsys, tmp_path):
    doc = json.loads((CONFIGS / "tiny_hamming.json").read_text())
    doc["rate"] = {"grid": [0.01, 0.02, 0.9]}
    code, out, _ = run(capsys, "exponent", "--config", write(tmp_path, doc))
    assert code == 0
    table = rows(out)
    assert len(table) == 3
    for r in table[:2]:
        assert abs(float(r["E_primal"]) - float(r["E_dual"])) <= 1e-2
        assert r["flag"] == ""
    assert table[2]["flag"] == "rate-condition-violated"


def test_exponent_non_additive_distance_leaves_dual_blank(capsys, tmp_path):
    doc = json.loads((CONFIGS / "tiny_hamming.json").read_text())
    doc["distance"] = {"kind": "neg_mi"}
    doc["delta_cap"] = -0.3
    code, out, err = run(capsys, "exponent", "--config", write(tmp_path, doc))
    assert code == 0
    assert "warning" in err
    r = rows(out)[0]
    assert r["E_dual"] == "" and r["rate_limit_dual"] == ""
    assert float(r["E_primal"]) >= 0


def test_rate_limit(capsys):
    code, out, _ = run(capsys, "rate-limit", "--config", str(CONFIGS / "tiny_hamming.json"))
    assert code == 0
    r = rows(out)[0]
    assert abs(float(r["rate_limit_primal"]) - float(r["rate_limit_dual"])) <= 1e-3


def test_codebook_is_reproducible(capsys, tmp_path):
    cfg = str(CONFIGS / "tiny_hamming.json")
    out1 = tmp_path / "a.txt"
    out2 = tmp_path / "b.txt"
    assert main(["codebook", "--config", cfg, "--seed", "5", "--out", str(out1)]) == 0
    assert main(["codebook", "--config", cfg, "--seed", "5", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    cb = Codebook.from_text(out1.read_text())
    assert (cb.n, cb.m, cb.seed) == (4, 3, 5)


def test_codebook_refuses_failed_packing(capsys, tmp_path):
    doc = json.loads((CONFIGS / "tiny_hamming.json").read_text())
    doc["code"]["m"] = 6
    code, _, err = run(capsys, "codebook", "--config", write(tmp_path, doc), "--seed", "1")
    assert code == 2 and "packing" in err


def test_codebook_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["codebook", "--config", str(CONFIGS / "tiny_hamming.json")])
    assert exc.value.code == 2


def test_simulate_zero_trials_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", str(CONFIGS / "tiny_hamming.json"), "--seed", "1", "--trials", "0"])
    assert exc.value.code == 2


def test_simulate_exact_matches_monte_carlo(capsys):
    cfg = str(CONFIGS / "tiny_hamming.json")
    _, out, _ = run(capsys, "simulate", "--config", cfg, "--seed", "1", "--exact")
    exact = rows(out)[0]
    assert list(exact) == list(CSV_FIELDS)
    assert exact["trials"] == "0"
    _, out, _ = run(capsys, "simulate", "--config", cfg, "--seed", "1", "--trials", "100000")
    mc = rows(out)[0]
    p = float(exact["pe"])
    sigma = (p * (1 - p) / 100_000) ** 0.5
    assert abs(float(mc["pe"]) - p) <= 3 * sigma


def test_simulate_noiseless_is_zero(capsys):
    code, out, _ = run(capsys, "simulate", "--config", str(CONFIGS / "noiseless.json"), "--seed", "3",
                       "--trials", "2000")
    assert code == 0
    assert float(rows(out)[0]["pe"]) == 0.0


def test_simulate_output_is_byte_identical(tmp_path):
    cfg = str(CONFIGS / "tiny_hamming.json")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["simulate", "--config", cfg, "--seed", "9", "--trials", "5000", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_lemmas_passes(capsys):
    code, out, _ = run(capsys, "verify", "lemmas")
    assert code == 0
    assert "lemmas: PASS" in out


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "nonexistent")
    assert code == 2
    assert "lemmas" in err and "duality" in err


def test_bad_config_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"channel": {"W": [[0.5, 0.6], [0.1, 0.9]]}}')
    code, _, err = run(capsys, "exponent", "--config", str(p))
    assert code == 2 and "bad.json:1" in err
