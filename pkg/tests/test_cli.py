import json
import math

import pytest

from gelation.cli import fmt_num, main, to_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return [ln.split(",") for ln in lines[1:]]


def test_duality_json(capsys):
    code, out, _ = run(capsys, "duality", "--c", "2")
    assert code == 0
    obj = json.loads(out)
    assert obj["T"] == pytest.approx(0.40637573995995990768, rel=1e-14)
    assert obj["meta"]["command"] == "duality"


def test_exact_three_rows(capsys):
    code, out, _ = run(capsys, "exact", "--n", "3", "--c", "0.5")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 3
    assert math.fsum(float(r[1]) for r in rows) == pytest.approx(1.0, abs=1e-15)
    assert "# seed: 0" in out and "# config:" in out


def test_simulate_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--n", "100", "--c", "2", "--replicas", "10", "--seed", "7"]
    assert main(args + ["--out", str(a), "--threads", "1"]) == 0
    assert main(args + ["--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_threads_env_fallback(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["mdp-scan", "--c", "2", "--stat", "max", "--n", "200,400", "--beta", "1"]
    monkeypatch.setenv("GELATION_THREADS", "2")
    assert main(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("GELATION_THREADS", "1")
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_unknown_subcommand_exit_2(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 2 and "usage" in err


def test_validation_error_exit_2(capsys):
    code, _, err = run(capsys, "exact", "--n", "50", "--c", "2")
    assert code == 2 and "capped" in err


def test_bad_what_exit_2(capsys):
    code, _, _ = run(capsys, "panjer", "--n", "10", "--c", "2", "--what", "nonsense")
    assert code == 2


def test_internal_error_exit_1(capsys, monkeypatch):
    import gelation.cli as cli

    def boom(args):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "cmd_duality", boom)
    code, _, err = run(capsys, "duality", "--c", "2")
    assert code == 1 and "kaput" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["mu", "--n", "20", "--c", "2"],
        ["jumplaw", "--n", "30", "--c", "2", "--theta", "auto"],
        ["panjer", "--n", "12", "--c", "2", "--what", "hit"],
        ["panjer", "--n", "12", "--c", "2", "--what", "max"],
        ["panjer", "--n", "12", "--c", "2", "--what", "count:2"],
        ["panjer", "--n", "12", "--c", "0.5", "--what", "N"],
        ["panjer", "--n", "12", "--c", "0.5", "--what", "fra:6"],
        ["panjer", "--n", "2000", "--c", "2", "--what", "knbeta:0.5:pow:0.25"],
        ["exact", "--n", "5", "--c", "2", "--method", "brute"],
        ["rates", "--c", "2", "--what", "mdp"],
        ["rates", "--c", "0.5", "--what", "grand"],
        ["rates", "--c", "2", "--what", "ldp:0.5"],
        ["rates", "--c", "2", "--what", "thresholds:5"],
        ["mdp-scan", "--c", "0.5", "--stat", "count:1", "--n", "200,400", "--beta", "0.5", "--format", "json"],
    ],
)
def test_every_command_reproducible(argv, capsys):
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == 0 and out1 == out2


def test_rates_empirical_file(tmp_path, capsys):
    f = tmp_path / "sigma.csv"
    f.write_text("0.1,0.02,0.005\n")
    code, out, _ = run(capsys, "rates", "--c", "2", "--what", f"empirical:{f}")
    assert code == 0 and "I_Mi" in json.loads(out)


def test_seventeen_digits():
    assert fmt_num(0.1) == "0.10000000000000001"
    assert float(fmt_num(1 / 3)) == 1 / 3
    assert to_json({"a": [1, 2.5, math.inf]}) == '{"a": [1, 2.5, "inf"]}'
