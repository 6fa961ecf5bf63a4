import json
import subprocess
import sys

import numpy as np
import pytest

import tirever.cli as cli
from tirever.cli import main
from tirever.errors import FitError


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TIREVER_SEED", raising=False)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSimulate:
    def test_length_and_determinism(self, workdir, capsys):
        args = ["simulate", "--r", 1, "--s", 1, "--phi", 0.8, "--varphi", 0.8, "--nu", 3, "--T", 500, "--seed", 4]
        code, out, _ = run(capsys, *args, "--out", "a.csv")
        assert code == 0 and "MAR(1,1)" in out
        run(capsys, *args, "--out", "b.csv")
        a, b = (workdir / "a.csv").read_bytes(), (workdir / "b.csv").read_bytes()
        assert a == b
        assert len(a.decode().splitlines()) == 501

    def test_env_seed_default(self, workdir, capsys, monkeypatch):
        run(capsys, "simulate", "--phi", 0.5, "--T", 60, "--seed", 17, "--out", "x.csv")
        monkeypatch.setenv("TIREVER_SEED", "17")
        run(capsys, "simulate", "--phi", 0.5, "--T", 60, "--out", "y.csv")
        assert (workdir / "x.csv").read_bytes() == (workdir / "y.csv").read_bytes()

    def test_root_violation_exits_2(self, workdir, capsys):
        code, _, err = run(capsys, "simulate", "--phi", 1.2, "--T", 50)
        assert code == 2 and "root condition" in err

    def test_order_mismatch_exits_2(self, workdir, capsys):
        code, _, err = run(capsys, "simulate", "--r", 2, "--phi", 0.5, "--T", 50)
        assert code == 2 and "--r 2" in err

    def test_trend_overlay_to_stdout(self, workdir, capsys):
        code, out, _ = run(capsys, "simulate", "--phi", 0.5, "--T", 300, "--trend", "rwd", "--delta", 1.0, "--seed", 1)
        values = np.array([float(line.split(",")[1]) for line in out.splitlines()[1:]])
        assert code == 0 and values.size == 300 and values[-1] - values[0] > 100


class TestDetect:
    def test_gaussian_ar1(self, workdir, capsys):
        run(capsys, "simulate", "--phi", 0.5, "--nu", 200, "--T", 500, "--seed", 2, "--out", "g.csv")
        code, out, _ = run(capsys, "detect", "g.csv", "--strategy", 1)
        assert code == 0 and "reversible_gaussian" in out

    def test_mar10_report_and_verify(self, workdir, capsys):
        run(capsys, "simulate", "--phi", 0.8, "--nu", 3, "--T", 1000, "--seed", 3, "--out", "m.csv")
        code, out, _ = run(capsys, "detect", "m.csv", "--strategy", 2, "--out", "rep.json")
        assert code == 0
        assert "verdict            : irreversible" in out
        assert "phi_1" in out and "(0." in out  # coefficient table with standard errors
        report = json.loads((workdir / "rep.json").read_text())
        assert report["command"] == "detect" and report["version"] and report["seed"] == 0
        assert report["payload"]["verdict"] == "irreversible"
        assert set(report) >= {"input", "options", "payload", "duration_seconds"}

        code, out, _ = run(capsys, "verify", "rep.json")
        assert code == 0 and "reproduced" in out

        report["payload"]["decisive_statistic"] += 1.0
        (workdir / "tampered.json").write_text(json.dumps(report))
        assert run(capsys, "verify", "tampered.json")[0] == 1

        (workdir / "m.csv").write_text((workdir / "m.csv").read_text() + "1001,0.0\n")
        code, _, err = run(capsys, "verify", "rep.json")
        assert code == 2 and "changed" in err

    def test_detrend_records_monthly_lambda(self, workdir, capsys):
        run(capsys, "simulate", "--phi", 0.8, "--T", 400, "--trend", "rwd", "--seed", 5, "--out", "t.csv")
        code, out, _ = run(capsys, "detect", "t.csv", "--detrend", "--freq", "monthly", "--out", "r.json")
        assert code == 0 and "HP lambda          : 129600" in out
        payload = json.loads((workdir / "r.json").read_text())["payload"]
        assert payload["detrended"] and payload["hp_lambda"] == 129600.0

    def test_rr_strategy(self, workdir, capsys):
        run(capsys, "simulate", "--phi", 0.8, "--T", 300, "--seed", 6, "--out", "s.csv")
        code, out, _ = run(capsys, "detect", "s.csv", "--strategy", "rr", "--k", 3, "--out", "rr.json")
        assert code == 0 and "lag k              : 3" in out
        assert run(capsys, "verify", "rr.json")[0] == 0

    def test_data_errors_exit_2(self, workdir, capsys):
        assert run(capsys, "detect", "missing.csv")[0] == 2
        (workdir / "bad.csv").write_text("value\n1\n2\nfoo\n")
        code, _, err = run(capsys, "detect", "bad.csv")
        assert code == 2 and "row 4" in err
        (workdir / "short.csv").write_text("\n".join(str(i % 3) for i in range(20)))
        assert run(capsys, "detect", "short.csv")[0] == 2

    def test_fit_failure_exits_3(self, workdir, capsys, monkeypatch):
        run(capsys, "simulate", "--phi", 0.8, "--T", 200, "--seed", 7, "--out", "f.csv")

        def boom(*args, **kwargs):
            raise FitError("MAR(1,1): optimisation diverged from every start")

        monkeypatch.setattr(cli, "run_pipeline", boom)
        code, _, err = run(capsys, "detect", "f.csv")
        assert code == 3 and "diverged" in err


class TestHpFilter:
    def test_linear_input(self, workdir, capsys):
        (workdir / "lin.csv").write_text("\n".join(f"{2 + 0.5 * i}" for i in range(60)))
        code, out, _ = run(capsys, "hpfilter", "lin.csv", "--freq", "quarterly", "--out", "hp.csv")
        assert code == 0 and "lambda = 1600" in out
        rows = (workdir / "hp.csv").read_text().splitlines()
        assert rows[0] == "index,value,trend,cycle" and len(rows) == 61
        assert max(abs(float(r.split(",")[3])) for r in rows[1:]) < 1e-8

    @pytest.mark.parametrize("flags, echoed", [(["--freq", "annual", "--exponent", 4], "6.25"), (["--lambda", 50], "50")])
    def test_lambda_echo(self, workdir, capsys, flags, echoed):
        (workdir / "y.csv").write_text("\n".join(str(np.sin(i)) for i in range(30)))
        code, out, _ = run(capsys, "hpfilter", "y.csv", *flags)
        assert code == 0 and f"lambda = {echoed}\n" in out
        assert "max |value - trend - cycle|" in out

    def test_errors(self, workdir, capsys):
        (workdir / "tiny.csv").write_text("1\n2\n3\n")
        assert run(capsys, "hpfilter", "tiny.csv", "--lambda", 10)[0] == 2
        assert run(capsys, "hpfilter", "tiny.csv")[0] == 2


class TestMonteCarlo:
    CONFIG = {
        "name": "mini",
        "dgp": {"phi": [0.8], "varphi": [0.1]},
        "T_list": [100],
        "n_reps": 4,
        "strategies": ["s1", "s2", "rr"],
    }

    def test_jobs_invariance_and_verify(self, workdir, capsys):
        (workdir / "mini.json").write_text(json.dumps(self.CONFIG))
        assert run(capsys, "montecarlo", "--config", "mini.json", "--jobs", 1, "--out", "one")[0] == 0
        assert run(capsys, "montecarlo", "--config", "mini.json", "--jobs", 2, "--out", "two")[0] == 0
        for ext in (".csv", ".md"):
            assert (workdir / f"one{ext}").read_bytes() == (workdir / f"two{ext}").read_bytes()
        report = json.loads((workdir / "one.json").read_text())
        assert report["command"] == "montecarlo" and report["seed"] == 20230601
        assert run(capsys, "verify", "one.json")[0] == 0

    def test_shipped_config_with_reps_override(self, workdir, capsys):
        code, out, _ = run(capsys, "montecarlo", "--config", "table1_panel4", "--reps", 1, "--out", "p4")
        assert code == 0 and "| T=1000 |" in out
        assert len((workdir / "p4.csv").read_text().splitlines()) == 1 + 4 * 3

    def test_missing_dgp_exits_2(self, workdir, capsys):
        (workdir / "nodgp.json").write_text(json.dumps({"T_list": [100]}))
        code, _, err = run(capsys, "montecarlo", "--config", "nodgp.json")
        assert code == 2 and "dgp" in err


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "tirever.cli", "hpfilter", "nope.csv", "--lambda", "5"],
        cwd=tmp_path,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2 and "cannot read" in proc.stderr
