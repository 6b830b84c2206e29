import subprocess
import sys

import numpy as np
import pytest

from nqs_scaling import cli, vmc
from nqs_scaling.cli import COLUMNS, SCHEMA_LINE, heatmap_grid, main, read_results
from nqs_scaling.scaling import ScalingCurve, write_curve


def write_run_config(tmp_path, ham, arch="made", steps=20, extra=""):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        f"[hamiltonian]\npath = {ham}\n\n[ansatz]\narchitecture = {arch}\nd_model = 8\n"
        f"made_hidden = 8\nphase_hidden = 8\n\n[train]\nsteps = {steps}\nmax_unique = 4\nseed = 1\n{extra}"
    )
    return cfg


def write_sweep_config(tmp_path, ham, archs="made, transformer", dims="8, 16", steps="10"):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        f"[sweep]\nhamiltonians = {ham}\narchitectures = {archs}\nd_model = {dims}\nmade_hidden = {dims}\n"
        f"phase_hidden = 8\nsteps = {steps}\nmax_unique = 4\nseeds = 0\n"
    )
    return cfg


def strip_time(row):
    return {k: v for k, v in row.items() if k != "timestamp"}


def test_run_appends_one_row(tmp_path, toy_path):
    out = tmp_path / "res.csv"
    cfg = write_run_config(tmp_path, toy_path)
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_results(out)
    assert len(rows) == 1
    assert out.read_text().splitlines()[0] == SCHEMA_LINE
    assert out.read_text().splitlines()[1] == ",".join(COLUMNS)
    assert rows[0]["status"] == "ok" and rows[0]["ansatz"] == "made" and rows[0]["n_qubits"] == "1"
    assert (tmp_path / "checkpoints" / f"{rows[0]['config_hash']}.ckpt").is_file()


def test_rerun_gives_identical_row(tmp_path, h2_path):
    out = tmp_path / "res.csv"
    cfg = write_run_config(tmp_path, h2_path, arch="retnet", steps=15)
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    a, b = read_results(out)
    assert strip_time(a) == strip_time(b)
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "9"]) == 0
    assert read_results(out)[2]["config_hash"] != a["config_hash"]


def test_missing_hamiltonian_leaves_no_row(tmp_path):
    out = tmp_path / "res.csv"
    cfg = write_run_config(tmp_path, tmp_path / "nope.ham")
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 1
    assert not out.exists() or read_results(out) == []


def test_config_errors_name_the_field(tmp_path, toy_path, capsys):
    cfg = write_run_config(tmp_path, toy_path, extra="peak_lr = fast\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "r.csv")]) == 1
    assert "train.peak_lr" in capsys.readouterr().err
    cfg.write_text(f"[hamiltonian]\npath = {toy_path}\n\n[ansatz]\narchitecture = lstm\n")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "ansatz.architecture" in capsys.readouterr().err


def test_sweep_counts_rows(tmp_path, h2_path):
    out = tmp_path / "res.csv"
    cfg = write_sweep_config(tmp_path, h2_path)
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_results(out)
    assert len(rows) == 4 and all(r["status"] == "ok" for r in rows)
    assert len({r["config_hash"] for r in rows}) == 4
    # a second pass without --resume is refused, with --resume it does nothing
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 1
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--resume"]) == 0
    assert len(read_results(out)) == 4


def test_sweep_resume_after_interruption(tmp_path, h2_path, monkeypatch):
    out = tmp_path / "res.csv"
    cfg = write_sweep_config(tmp_path, h2_path)
    real = cli.execute
    calls = []

    def interrupting(spec, ckpt=None):
        calls.append(spec.config_hash())
        if len(calls) == 3:
            raise KeyboardInterrupt
        return real(spec, ckpt)

    monkeypatch.setattr(cli, "execute", interrupting)
    with pytest.raises(KeyboardInterrupt):
        cli.cmd_sweep(cfg, out)
    assert len(read_results(out)) == 2
    calls.clear()
    monkeypatch.setattr(cli, "execute", lambda spec, ckpt=None: (calls.append(spec.config_hash()), real(spec, ckpt))[1])
    cli.cmd_sweep(cfg, out, resume=True)
    rows = read_results(out)
    assert len(rows) == 4 and len(calls) == 2
    assert [r["config_hash"] for r in rows[2:]] == calls


def test_diverged_run_is_isolated(tmp_path, h2_path, monkeypatch):
    out = tmp_path / "res.csv"
    cfg = write_sweep_config(tmp_path, h2_path, dims="8")
    real_train = cli.train

    def flaky(h, acfg, tcfg, *a, **kw):
        if acfg.architecture.value != "made":
            return real_train(h, acfg, tcfg, *a, **kw)
        with monkeypatch.context() as m:
            m.setattr(vmc, "local_energies", lambda s, p, X: np.full(len(X), np.nan + 0j))
            return real_train(h, acfg, tcfg, *a, **kw)

    monkeypatch.setattr(cli, "train", flaky)
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    status = {r["ansatz"]: r["status"] for r in read_results(out)}
    assert status == {"made": "diverged", "transformer": "ok"}


def test_parallel_sweep_matches_sequential(tmp_path, h2_path):
    cfg = write_sweep_config(tmp_path, h2_path)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b.csv"), "--workers", "2"]) == 0
    a = [strip_time(r) for r in read_results(tmp_path / "a.csv")]
    b = [strip_time(r) for r in read_results(tmp_path / "b.csv")]
    for r in a + b:
        r.pop("timestamp", None)
    assert a == b


def synthetic_results(path, curve, n=30, undefined=0, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        N, D = 10 ** rng.uniform(0, 2), 10 ** rng.uniform(0, 2)
        v = float(curve.predict(N, D)) * float(np.exp(0.02 * rng.normal()))
        rows.append({
            "config_hash": f"{i:016x}", "ansatz": "transformer", "molecule": "syn", "N_k": N, "D_prime": D,
            "vscore": "undefined" if i < undefined else v, "abs_error": v, "status": "ok",
        })  # fmt: skip
    cli.append_rows(path, rows)


def test_fit_recovers_and_reports_skips(tmp_path, capsys):
    truth = ScalingCurve(1e-6, 0.2, 7e-3, 8.0, 2.4)
    res = tmp_path / "res.csv"
    synthetic_results(res, truth, n=40, undefined=3)
    curve_path = tmp_path / "curve.txt"
    assert main(["fit", str(res), "--metric", "vscore", "--out", str(curve_path), "--steps", "3000"]) == 0
    text = capsys.readouterr().out
    assert "skipped 3 rows with undefined vscore" in text
    assert "alpha1" in text
    c = cli.read_curve(curve_path)
    assert c.alpha1 == pytest.approx(8.0, rel=0.1) and c.alpha2 == pytest.approx(2.4, rel=0.1)


def test_fit_single_n_is_degenerate(tmp_path, capsys):
    res = tmp_path / "res.csv"
    cli.append_rows(res, [
        {"config_hash": f"{i:016x}", "ansatz": "made", "N_k": 5.0, "D_prime": 2.0**i, "vscore": 0.1 / (i + 1),
         "status": "ok"} for i in range(12)
    ])  # fmt: skip
    assert main(["fit", str(res), "--steps", "10"]) == 1
    assert "error" in capsys.readouterr().err


def test_fit_needs_ten_rows(tmp_path):
    res = tmp_path / "res.csv"
    synthetic_results(res, ScalingCurve(0, 1, 1, 1, 1), n=9)
    assert main(["fit", str(res), "--steps", "10"]) == 1


@pytest.mark.parametrize(
    "row, expected",
    [((9.37e-11, 2.58e-5, 5.53e-2, 1.459, 2.828), "D' = 0.0525368 * N^0.515912"),
     ((2.83e-9, 0.720, 0.039, 5.274, 0.637), "N^8.27943")],
)  # fmt: skip
def test_frontier_prints_table_rows(tmp_path, capsys, row, expected):
    path = tmp_path / "c.txt"
    write_curve(path, ScalingCurve(*row))
    assert main(["frontier", str(path), "--budget", "1e9", "--k", "17"]) == 0
    out = capsys.readouterr().out
    assert expected in out
    N, D = (float(t.split("=")[1]) for t in out.splitlines()[1].split("  ")[:2])
    assert 17 * N * D == pytest.approx(1e9, rel=1e-5)


def test_frontier_exact_flag(tmp_path, capsys):
    path = tmp_path / "c.txt"
    write_curve(path, ScalingCurve(9.37e-11, 2.58e-5, 5.53e-2, 1.459, 2.828))
    assert main(["frontier", str(path), "--exact"]) == 0
    assert "D' = 19.0343 * N^0.515912" in capsys.readouterr().out


def test_heatmap_cells(tmp_path):
    one = [{"status": "ok", "N_k": "3.0", "D_prime": "20.0", "vscore": "0.01", "abs_error": "0"}]
    grid = heatmap_grid(one, "abserr")
    assert len(grid) == 1 and grid[0][2] == pytest.approx(1e-5, rel=1e-12) and grid[0][3] == 1
    rows = one + [{"status": "ok", "N_k": "3.1", "D_prime": "21.0", "vscore": "1e-12", "abs_error": "1"},
                  {"status": "diverged", "N_k": "3", "D_prime": "3", "vscore": "", "abs_error": ""},
                  {"status": "ok", "N_k": "300", "D_prime": "0.2", "vscore": "undefined", "abs_error": "1"}]  # fmt: skip
    g = heatmap_grid(rows, "vscore")
    assert len(g) == 1 and g[0][2] == pytest.approx(1e-5) and g[0][3] == 2
    assert heatmap_grid(rows, "vscore") == g


def test_heatmap_command_writes_grid(tmp_path):
    res, out = tmp_path / "res.csv", tmp_path / "grid.csv"
    synthetic_results(res, ScalingCurve(0, 1, 1, 1, 1), n=12)
    assert main(["heatmap", str(res), "--metric", "abserr", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "log10_N,log10_D_prime,abserr,count"
    assert sum(int(l.split(",")[3]) for l in lines[1:]) == 12


def test_exact_on_shipped_files(tmp_path, h2_path, toy_path, capsys):
    from nqs_scaling.pauli import load_hamiltonian

    assert main(["exact", str(h2_path), "--out", str(tmp_path / "h2.ham")]) == 0
    out = capsys.readouterr().out
    energy = float(out.splitlines()[0].split(":")[1])
    assert energy == pytest.approx(load_hamiltonian(h2_path).fci_energy, abs=1e-6)
    assert "suggested header: %fci" in out
    assert load_hamiltonian(tmp_path / "h2.ham").fci_energy == energy
    assert main(["exact", str(toy_path)]) == 0
    assert float(capsys.readouterr().out.splitlines()[0].split(":")[1]) == pytest.approx(-1.0)


def test_exact_refuses_large_files(tmp_path, capsys):
    big = tmp_path / "big.ham"
    big.write_text("%n_qubits 30\n1.0 " + "Z" + "I" * 29 + "\n")
    assert main(["exact", str(big)]) == 2
    assert "14-qubit limit" in capsys.readouterr().err


def test_flops_command(capsys):
    assert main(["flops", "--ansatz", "made", "--n", "4", "--M", "2", "--B", "16", "--T", "1",
                 "--N-mod", "100", "--N-ph", "50", "--S", "441", "--D-prime", "100", "--N-raw", "1000"]) == 0  # fmt: skip
    out = capsys.readouterr().out
    assert "table1: 33600" in out and "simplified: 2.646e+08" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "nqs_scaling", "flops", "--ansatz", "transformer", "--n", "4",
                        "--M", "2", "--B", "16", "--T", "1", "--N-mod", "100", "--N-ph", "50"],
                       capture_output=True, text=True)  # fmt: skip
    assert r.returncode == 0 and "table1: 52" in r.stdout
