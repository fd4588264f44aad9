import shutil
import subprocess

import pytest

from sumopt import cli


def _strip_wall_ms(csv_text):
    lines = csv_text.strip().splitlines()
    header = lines[0].split(",")
    if "wall_ms" not in header:
        return lines
    drop = header.index("wall_ms")
    return [",".join(v for i, v in enumerate(line.split(",")) if i != drop)
            for line in lines]


QUICKSTART = "configs/quadratic_quickstart.toml"


def test_run_writes_one_row_per_step(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = cli.main(["run", "--config", QUICKSTART, "--seed", "0",
                     "--out", str(out), "--set", "run.steps=50"])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 51   # header + 50 steps
    printed = capsys.readouterr().out
    assert "final full loss" in printed
    assert "min" in printed and "avg" in printed


def test_run_is_bit_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.main(["run", "--config", QUICKSTART, "--seed", "3",
                         "--out", str(out), "--set", "run.steps=40"]) == 0
    assert _strip_wall_ms(a.read_text()) == _strip_wall_ms(b.read_text())


def test_run_rejects_out_of_range_interpolation(tmp_path, capsys):
    code = cli.main(["run", "--config", QUICKSTART, "--seed", "0",
                     "--out", str(tmp_path / "x.csv"),
                     "--set", "optimizer.lambda=10.1"])
    assert code != 0
    err = capsys.readouterr().err
    assert "10" in err   # names the top of the admissible interval


def test_run_without_output_path_fails(capsys):
    code = cli.main(["run", "--config", QUICKSTART, "--seed", "0"])
    assert code == 2
    assert "--out" in capsys.readouterr().err


def test_missing_mnist_file_names_the_path(tmp_path, capsys):
    code = cli.main(["run", "--config", "configs/mnist_sweep.toml",
                     "--seed", "0", "--out", str(tmp_path / "m.csv")])
    assert code != 0
    err = capsys.readouterr().err
    assert "train-images" in err


def test_divergence_exit_code(tmp_path, capsys):
    # eta * L = 0.9 * 10 blows up the quadratic within a few steps
    code = cli.main(["run", "--config", QUICKSTART, "--seed", "0",
                     "--out", str(tmp_path / "x.csv"),
                     "--set", "schedule.alpha=0.9", "--set", "run.steps=200",
                     "--set", "optimizer.mu=0.0"])
    assert code == 3
    err = capsys.readouterr().err
    assert "step" in err
    assert "alpha" in err   # remediation hint


def test_sweep_produces_runs_aggregates_and_summary(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = cli.main(["sweep", "--config", QUICKSTART, "--out", str(out),
                     "--lambdas", "0,1", "--seeds", "2",
                     "--set", "run.steps=30"])
    assert code == 0
    run_files = sorted(p.name for p in out.glob("noisy_quadratic-*.csv"))
    assert len(run_files) == 4
    assert sorted(p.name for p in out.glob("aggregate-*.csv")) == [
        "aggregate-lam0.csv", "aggregate-lam1.csv"]
    summary = (out / "sweep-summary.txt").read_text()
    assert summary.count("lambda=") == 2
    assert "mean final grad norm" in summary


def test_sweep_aggregate_has_mean_and_std_columns(tmp_path):
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--config", QUICKSTART, "--out", str(out),
                     "--lambdas", "0.5", "--seeds", "2",
                     "--set", "run.steps=20"]) == 0
    header = (out / "aggregate-lam0.5.csv").read_text().splitlines()[0]
    assert header == "t,full_loss_mean,full_loss_std,grad_norm_mean,grad_norm_std"


def test_sweep_rejects_bad_lambda_before_any_run(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = cli.main(["sweep", "--config", QUICKSTART, "--out", str(out),
                     "--lambdas", "0,12", "--seeds", "1",
                     "--set", "run.steps=20"])
    assert code == 2
    assert "before any run" in capsys.readouterr().err
    assert not list(out.glob("*.csv")) if out.exists() else True


def test_sweep_parallel_matches_serial(tmp_path):
    serial, parallel = tmp_path / "s", tmp_path / "p"
    for out, jobs in ((serial, "1"), (parallel, "2")):
        assert cli.main(["sweep", "--config", QUICKSTART, "--out", str(out),
                         "--lambdas", "0,1", "--seeds", "1", "--jobs", jobs,
                         "--set", "run.steps=25"]) == 0
    for name in sorted(p.name for p in serial.glob("*.csv")):
        assert _strip_wall_ms((serial / name).read_text()) == \
            _strip_wall_ms((parallel / name).read_text())


def test_lambda_list_parse_errors(tmp_path, capsys):
    out = str(tmp_path / "never")
    assert cli.main(["sweep", "--config", QUICKSTART, "--out", out,
                     "--lambdas", ",", "--seeds", "1"]) == 2
    assert cli.main(["sweep", "--config", QUICKSTART, "--out", out,
                     "--lambdas", "abc", "--seeds", "1"]) == 2
    capsys.readouterr()


def test_entry_point_is_installed():
    exe = shutil.which("sumopt")
    if exe is None:
        pytest.skip("console script not on PATH in this environment")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "sweep" in proc.stdout and "verify" in proc.stdout


def test_verify_rejects_unknown_scope(capsys):
    with pytest.raises(SystemExit):
        cli.main(["verify", "--scope", "medium"])
    capsys.readouterr()
