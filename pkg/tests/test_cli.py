import csv
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fracspread.cli import emit_plot_script, main, write_csv

SMALL = """model:
  m: 2
  alpha: [1.0, 0.5]
  K: [[0.0, 1.0], [1.0, 0.0]]
  r: [{r}, {r}]
  q: [1.0, 1.0]
  delta: 1.0
  lambda_big: 2.0
grid:
  n: {n}
  L: {L}
time:
  dt: 0.05
  t_end: {t_end}
  cadence: 0.25
ic:
  h: [1.0, 1.0]
verify:
  n_samples: 200
  residual_n: 4096
  residual_L: 512.0
output:
  directory: out
  snapshot_stride: 8
"""


def write_cfg(tmp_path, name="run.cfg", r=0.0, n=4096, L=512.0, t_end=1.0):
    p = tmp_path / name
    p.write_text(SMALL.format(r=r, n=n, L=L, t_end=t_end))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- exit-code contract -------------------------------------------------------------


def test_exit_0_hypotheses_pass(tmp_path, capsys):
    out = tmp_path / "ok"
    assert main(["verify", "--what", "hypotheses", "--config", write_cfg(tmp_path), "--out", str(out)]) == 0
    rows = read_csv(out / "certificate.csv")
    assert [r["check"] for r in rows][:1] == ["H1"]
    assert all(r["pass"] == "true" for r in rows)
    assert (out / "run.csv").exists()


def test_exit_1_hypotheses_fail_names_h1(tmp_path, capsys):
    out = tmp_path / "bad"
    code = main(["verify", "--what", "hypotheses", "--config", write_cfg(tmp_path, r=-3.0), "--out", str(out)])
    assert code == 1
    assert "H1" in capsys.readouterr().err
    rows = {r["check"]: r for r in read_csv(out / "certificate.csv")}
    assert rows["H1"]["pass"] == "false"


def test_exit_2_guard_band(tmp_path, capsys):
    cfg = write_cfg(tmp_path, n=512, L=64.0, t_end=4.0)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "g")]) == 2
    assert "guard band" in capsys.readouterr().err


def test_config_error_exit_1_with_line(tmp_path, capsys):
    p = tmp_path / "typo.cfg"
    p.write_text(SMALL.format(r=0.0, n=4096, L=512.0, t_end=1.0).replace("delta:", "detla:"))
    assert main(["eigen", "--config", str(p), "--out", str(tmp_path / "e")]) == 1
    assert "line 7" in capsys.readouterr().err


# -- subcommands ----------------------------------------------------------------------


def test_eigen_subcommand(tmp_path, capsys):
    out = tmp_path / "eig"
    assert main(["eigen", "--out", str(out)]) == 0
    vals = {r["name"]: float(r["value"]) for r in read_csv(out / "eigen.csv")}
    assert vals["lambda1"] == pytest.approx(1.0)
    assert vals["gamma_11"] == 4.0 and vals["gamma_12"] == 1.0 and vals["l"] == 5.0


def test_kernel_subcommand(tmp_path, capsys):
    out = tmp_path / "k"
    assert main(["kernel", "--alpha", "0.5", "--n", "4096", "--L", "1024", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "mass=1" in text and "algebraic=true" in text
    assert len(read_csv(out / "kernel.csv")) == 4096


def test_linsys_subcommand(tmp_path, capsys):
    out = tmp_path / "ls"
    assert main(["linsys", "--t", "1.0", "--radii", "0", "1", "4", "--n", "1024", "--L", "128", "--out", str(out)]) == 0
    assert all(float(r["slack"]) >= 0 for r in read_csv(out / "sector.csv"))
    assert max(float(r["residual"]) for r in read_csv(out / "duhamel.csv")) <= 1e-8
    assert list(read_csv(out / "linsys_kernel.csv")[0]) == ["x", "K_11", "K_12", "K_21", "K_22"]


def test_simulate_outputs_deterministic(tmp_path, capsys):
    cfg = write_cfg(tmp_path, n=8192, L=2048.0, t_end=0.5)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert "snap_t0.0000.csv" in files and "snap_t0.5000.csv" in files
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        if name != "run.csv":  # the manifest carries a timestamp
            assert (a / name).read_bytes() == (b / name).read_bytes()
    snap = read_csv(a / "snap_t0.5000.csv")
    assert len(snap) == 8192 // 8 and list(snap[0]) == ["x", "u_1", "u_2"]
    manifest = {r["key"]: r["value"] for r in read_csv(a / "run.csv")}
    assert manifest["n"] == "8192" and "model_hash" in manifest and "created" in manifest


def test_front_speed_short_run_misses_tolerance(tmp_path, capsys):
    # a short run is still in the diffusive transient: exit 1, but all files are written
    out = tmp_path / "fs"
    cfg = write_cfg(tmp_path, n=2**16, L=2.0**14, t_end=3.0)
    assert main(["front-speed", "--config", cfg, "--out", str(out), "--mu", "0.01", "0.001"]) == 1
    assert "miss the tolerance" in capsys.readouterr().err
    summary = read_csv(out / "summary.csv")
    assert len(summary) == 4
    assert list(summary[0]) == ["component", "mu", "slope", "stderr", "predicted", "rel_err"]
    assert len(read_csv(out / "fronts.csv")) == 4 * 13
    assert (out / "plot_fronts.py").exists()


# -- plot script -------------------------------------------------------------------------


def test_plot_script_requires_csvs(tmp_path):
    with pytest.raises(Exception, match="missing"):
        emit_plot_script(tmp_path)


def _fake_outputs(d, series):
    rows, summ = [], []
    for comp, mu in series:
        for t in (1.0, 2.0, 3.0):
            rows.append((comp, mu, t, 2.0 ** t))
        summ.append((comp, mu, 0.69, 0.0, 0.5, 0.38))
    write_csv(d / "fronts.csv", ["component", "mu", "t", "R"], rows)
    write_csv(d / "summary.csv", ["component", "mu", "slope", "stderr", "predicted", "rel_err"], summ)


@pytest.mark.parametrize("series", [[], [(1, 0.01), (1, 0.001)]])
def test_plot_script_runs(tmp_path, series):
    pytest.importorskip("matplotlib")
    _fake_outputs(tmp_path, series)
    script = emit_plot_script(tmp_path)
    text = script.read_text()
    assert "insufficient data" in text and "predicted slope" in text
    env = {"MPLBACKEND": "Agg", "PATH": "/usr/bin:/bin"}
    subprocess.run([sys.executable, script.name], cwd=tmp_path, check=True, env=env, capture_output=True)
    assert (tmp_path / "fronts.png").exists()


def test_console_script_version():
    exe = shutil.which("fracspread")
    if exe is None:
        pytest.skip("console script not on PATH")
    out = subprocess.run([exe, "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "0.1.0"
