import csv
import io
import json
import subprocess
import sys

import pytest

from tnnfl import __version__
from tnnfl.cli import main, parse_range, UsageError
from tnnfl.moments1d import exact_avg_risk_1d


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith(f"# tnnfl {__version__} ")
    echo = json.loads(lines[0].split(" ", 3)[3])
    return echo, list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_parse_range():
    assert parse_range("3") == [3]
    assert parse_range("0..4") == [0, 1, 2, 3, 4]
    for bad in ("0..", "a..3", "4..1", "1-3"):
        with pytest.raises(UsageError):
            parse_range(bad)


def test_bound_mps(capsys):
    code, out, _ = run(capsys, "bound-mps", "--n", "4", "--d", "2", "--D", "2", "--k", "0..4")
    assert code == 0
    echo, rows = parse_csv(out)
    assert echo["command"] == "bound-mps" and echo["params"]["n"] == 4
    assert len(rows) == 5
    exact = [float(r["exact_avg_risk"]) for r in rows]
    assert all(a >= b for a, b in zip(exact, exact[1:]))
    assert exact[0] == pytest.approx(0.9359, abs=1e-12)
    assert exact[3] == exact_avg_risk_1d(4, 2, 2, 3)
    assert set(rows[0]) == {"k", "t_k", "thm1_bound", "exact_avg_risk", "mpo_bound", "quantum_nfl_baseline", "negative"}


def test_malformed_range_exits_2(capsys):
    code, _, err = run(capsys, "bound-mps", "--n", "4", "--d", "2", "--D", "2", "--k", "0..x")
    assert code == 2 and "malformed" in err
    code, _, _ = run(capsys, "bound-mps", "--n", "4", "--d", "2", "--D", "2", "--k", "0..9")
    assert code == 2


def test_bound_peps(capsys):
    code, out, _ = run(capsys, "bound-peps", "--L", "7", "--d", "2", "--D", "2", "--k", "0..49")
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["thm2_bound"]) == pytest.approx(1.0, abs=1e-12)
    assert float(rows[0]["thm2_thermo_limit"]) == pytest.approx(1.0, abs=1e-12)
    assert float(rows[-1]["thm2_thermo_limit"]) == 0.0
    code, _, err = run(capsys, "bound-peps", "--L", "3", "--d", "2", "--D", "2", "--k", "1", "--c", "-1")
    assert code == 2 and "c must be" in err


def test_bound_curve_n50(capsys, tmp_path):
    out = tmp_path / "curve.csv"
    assert run(capsys, "bound-curve", "--n", "50", "--d", "2", "--D", "2", "--out", str(out))[0] == 0
    echo, rows = parse_csv(out.read_text())
    assert echo["params"]["L"] == 7
    assert [int(r["k"]) for r in rows] == list(range(1, 50))


def test_missing_config_and_unknown_fields(capsys, tmp_path):
    assert run(capsys, "experiment", "--config", str(tmp_path / "nope.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 3, "colour": "red"}))
    code, _, err = run(capsys, "experiment", "--config", str(bad))
    assert code == 2 and "colour" in err
    assert run(capsys, "experiment")[0] == 2


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"n": 5, "d": 2, "D": 2, "k": "0..2"}))
    code, out, _ = run(capsys, "bound-mps", "--config", str(cfg), "--n", "4")
    assert code == 0
    echo, rows = parse_csv(out)
    assert echo["params"]["n"] == 4 and len(rows) == 3


def test_experiment_reproducible_bytes(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"n": 3, "k_grid": [0, 1, 2, 3], "n_targets": 3, "n_test": 50, "trainer": "construct"}))
    monkeypatch.setenv("TNNFL_SEED", "9")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "experiment", "--config", str(cfg), "--out", str(a), "--workers", "1")[0] == 0
    assert run(capsys, "experiment", "--config", str(cfg), "--out", str(b), "--workers", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    echo, rows = parse_csv(a.read_text())
    assert echo["params"]["seed"] == 9
    assert rows[-1]["k"] == "full" and float(rows[-1]["mean_risk"]) <= 1e-8
    # an explicit flag beats the environment
    c = tmp_path / "c.csv"
    run(capsys, "experiment", "--config", str(cfg), "--out", str(c), "--seed", "10")
    assert parse_csv(c.read_text())[0]["params"]["seed"] == 10


def test_experiment_plot(capsys, tmp_path):
    pytest.importorskip("matplotlib")
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"n": 3, "k_grid": [0, 1, 2], "n_targets": 2, "n_test": 20}))
    png = tmp_path / "fig.png"
    assert run(capsys, "experiment", "--config", str(cfg), "--out", str(tmp_path / "o.csv"), "--plot", str(png))[0] == 0
    assert png.read_bytes()[:4] == b"\x89PNG"


def test_verify_suites(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "polyomino", "--budget", "0")
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert all(c["status"] == "pass" for c in report["checks"])
    code, out, err = run(capsys, "verify", "--suite", "mps-moment", "--budget", "0")
    report = json.loads(out)
    assert code == 0 and "skipped" in {c["status"] for c in report["checks"]}
    assert "skipped" in err
    assert run(capsys, "verify", "--suite", "nonsense")[0] == 2


def test_verify_mps_moment_full_budget(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "mps-moment", "--budget", "100000", "--seed", "3")
    report = json.loads(out)
    assert code == 0, report
    stats = [c for c in report["checks"] if c["kind"] == "statistical"]
    assert stats and all(c["status"] in ("pass", "warn") for c in stats)


def test_verify_zterms(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "zterms", "--budget", "20000", "--seed", "4")
    assert code == 0, out


def test_check_failure_exit_code(capsys, monkeypatch):
    import tnnfl.verify as verify

    monkeypatch.setitem(verify.SUITES, "polyomino", lambda b, s, w: [verify._exact_check("forced", 1, 2)])
    code, out, _ = run(capsys, "verify", "--suite", "polyomino", "--budget", "0")
    assert code == 1 and not json.loads(out)["passed"]


def test_argparse_errors_exit_2():
    proc = subprocess.run([sys.executable, "-m", "tnnfl", "bound-mps", "--n", "x"], capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "tnnfl", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
