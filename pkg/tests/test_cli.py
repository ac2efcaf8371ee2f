import json
from pathlib import Path

import pytest

from secfc.cli import EXIT_CODES, main
from secfc.datagen import load_csv
from secfc.experiment import ExperimentSpec, run_experiment
from secfc.report import REPORT_KEYS, RunReport

GOLDEN = Path(__file__).parent / "golden" / "report_schema.json"


def shape(o):
    if isinstance(o, dict):
        return {k: shape(v) for k, v in sorted(o.items())}
    if isinstance(o, list):
        return [shape(o[0])] if o else []
    if isinstance(o, bool):
        return "bool"
    if isinstance(o, (int, float)):
        return "number"
    if o is None:
        return "null"
    return type(o).__name__


@pytest.mark.parametrize("alg", ["lloyd", "kfed", "secfc", "secfc-mp"])
def test_report_structure_matches_golden(alg):
    rep = run_experiment(ExperimentSpec(algorithm=alg, k=2, m=40, d=4, n=5, t=1, ell=2, max_iters=20, seed=3))[0]
    d = rep.to_dict()
    assert tuple(sorted(d)) == tuple(sorted(REPORT_KEYS))
    assert shape(d) == json.loads(GOLDEN.read_text())[alg]
    back = RunReport.from_dict(json.loads(rep.to_json()))
    assert back.to_dict() == d


def test_generate_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["generate", "--k", "4", "--m", "100", "--d", "5", "--seed", "7", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert Path(str(a) + ".meta.json").read_bytes() == Path(str(b) + ".meta.json").read_bytes()
    assert load_csv(a).m == 100


def test_run_writes_reports_and_summary(tmp_path, capsys):
    data = tmp_path / "d.csv"
    main(["generate", "--k", "3", "--m", "60", "--d", "4", "--out", str(data)])
    out = tmp_path / "out"
    rc = main(["run", "--algorithm", "secfc", "--data", str(data), "--k", "3", "--n", "5", "--t", "1",
               "--ell", "2", "--runs", "2", "--out-dir", str(out)])
    assert rc == 0
    assert "secfc" in capsys.readouterr().out
    reps = sorted(out.glob("secfc_run*.json"))
    assert len(reps) == 2
    seeds = [json.loads(p.read_text())["seed"] for p in reps]
    assert seeds == [0, 1]
    assert json.loads((out / "secfc_summary.json").read_text())["runs"] == 2


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\nalgorithm = lloyd\nk = 2\nm = 40\nd = 3\nruns = 3\n")
    assert main(["--config", str(cfg), "run", "--runs", "1"]) == 0
    out = capsys.readouterr().out
    assert "lloyd" in out and "   1 " in out
    cfg.write_text("[run]\nbogus = 1\n")
    assert main(["--config", str(cfg), "run"]) == EXIT_CODES["config"]
    assert "error[config]: unknown key" in capsys.readouterr().err


@pytest.mark.parametrize("argv,category,needle", [
    (["run", "--algorithm", "secfc", "--n", "4", "--t", "2", "--ell", "2"], "config", "7 > n = 4"),
    (["run", "--algorithm", "kfed", "--k-prime", "0"], "config", "k_prime"),
    (["run", "--data", "/nonexistent/x.csv", "--ell", "1"], "io", "No such file"),
    (["run", "--algorithm", "secfc", "--lam", "1048576", "--ell", "1", "--sigma", "20"], "headroom", "lower lam"),
    (["bench", "--sweep", "n=5,10", "--sweep", "m=100"], "config", "exactly one"),
    (["bench", "--sweep", "k=2,3"], "config", "one of n, d, m"),
    (["generate", "--k", "2"], "config", "--out"),
])
def test_error_categories(argv, category, needle, capsys):
    rc = main(argv)
    err = capsys.readouterr().err
    assert rc == EXIT_CODES[category] != 0
    assert err.startswith(f"error[{category}]:")
    assert needle in err


def test_bad_data_file_reports_row(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("id,label,f_1\na,0,1\nb,1\n")
    assert main(["run", "--data", str(p), "--algorithm", "lloyd"]) == EXIT_CODES["data"]
    assert "row 3:" in capsys.readouterr().err


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    rc = main(["bench", "--sweep", "m=40,80", "--n", "5", "--d", "4", "--k", "2", "--repeats", "1", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("param,value,n,d,m")
    assert len(lines) == 3
