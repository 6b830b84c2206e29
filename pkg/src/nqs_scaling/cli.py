"""Command-line front end: single runs, sweeps, curve fits, frontiers, heat-map grids.

Config files are INI-style (flat ``key = value`` pairs under section
headers). A run config looks like::

    [hamiltonian]
    path = h2.ham

    [ansatz]
    architecture = transformer
    d_model = 16

    [train]
    steps = 2000
    max_unique = 16
    seed = 0

A sweep config replaces ``[ansatz]`` with a ``[sweep]`` section whose
values are comma-separated lists.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import flops as fl
from .ansatz import AnsatzConfig, Architecture
from .numeric import save_checkpoint
from .oracle import OperatorTooLarge, ground_energy
from .pauli import HamiltonianParseError, format_hamiltonian, load_hamiltonian
from .scaling import (
    METRIC_FLOORS,
    DataPoint,
    DegenerateData,
    efficient_frontier,
    fit_curve,
    optimal_allocation,
    read_curve,
    write_curve,
)
from .vmc import TrainConfig, train

log = logging.getLogger("nqs_scaling")

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# nqs-scaling results schema {SCHEMA_VERSION}"
COLUMNS = (
    "config_hash", "ansatz", "molecule", "n_qubits", "n_electrons", "N_raw", "N_k", "T",
    "max_unique", "B_mean", "SF", "D_prime", "energy", "variance", "vscore", "abs_error",
    "flops_table1", "flops_simplified", "status", "seed", "timestamp",
)  # fmt: skip
METRIC_COLUMNS = {"vscore": "vscore", "abserr": "abs_error"}
EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending ``section.key``."""


# --- configuration -------------------------------------------------------------------

_TRAIN_FIELDS = {
    "steps": int, "max_unique": int, "draws_start": float, "draws_end": float,
    "peak_lr": float, "final_lr": float, "warmup_fraction": float,
    "reuse_every": int, "reuse_fraction": float, "seed": int,
}  # fmt: skip


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one training run."""

    hamiltonian: str
    molecule: str
    ansatz: dict
    train: dict

    def config_hash(self) -> str:
        with open(self.hamiltonian, "rb") as fh:
            ham_digest = hashlib.sha256(fh.read()).hexdigest()
        blob = json.dumps({"h": ham_digest, "a": self.ansatz, "t": self.train}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SweepConfig:
    hamiltonians: list
    architectures: list
    d_model: list = field(default_factory=lambda: [16])
    made_hidden: list = field(default_factory=lambda: [32])
    phase_hidden: list = field(default_factory=lambda: [32])
    n_blocks: list = field(default_factory=lambda: [1])
    steps: list = field(default_factory=lambda: [12500])
    max_unique: list = field(default_factory=lambda: [1000])
    seeds: list = field(default_factory=lambda: [0])
    train: dict = field(default_factory=dict)
    results: str | None = None

    def grid(self) -> list[RunSpec]:
        """Deterministic enumeration of the cross product."""
        specs = []
        for path, arch in itertools.product(self.hamiltonians, self.architectures):
            if arch is Architecture.MADE:
                shapes = [dict(made_hidden_dims=[w], n_blocks=1, d_model=16) for w in self.made_hidden]
            else:
                shapes = [dict(d_model=d, n_blocks=b) for d in self.d_model for b in self.n_blocks]
            for shape, ph, T, mu, seed in itertools.product(
                shapes, self.phase_hidden, self.steps, self.max_unique, self.seeds
            ):
                ansatz = {"architecture": arch.value, "phase_hidden_dims": [ph], **shape}
                tr = {**self.train, "steps": T, "max_unique": mu, "seed": seed}
                specs.append(RunSpec(path, Path(path).stem, ansatz, tr))
        return specs


def _read_ini(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from exc
    return cp


def _convert(section: str, key: str, raw: str, kind):
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind.__name__}") from None
    is_seed = key in ("seed", "seeds")
    if kind in (int, float) and not value > 0 and not is_seed:
        raise ConfigError(f"{section}.{key}: must be positive, got {raw}")
    if is_seed and value < 0:
        raise ConfigError(f"{section}.{key}: must be nonnegative")
    return value


def _list(section: str, key: str, raw: str, kind=str) -> list:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{section}.{key}: empty list")
    return [_convert(section, key, s, kind) for s in items]


def _resolve(base: Path, p: str) -> str:
    q = Path(p).expanduser()
    return str(q if q.is_absolute() else (base / q))


def _train_section(cp, base_section="train") -> dict:
    out = {}
    if cp.has_section(base_section):
        for key, raw in cp.items(base_section):
            if key not in _TRAIN_FIELDS:
                raise ConfigError(f"{base_section}.{key}: unknown key")
            out[key] = _convert(base_section, key, raw, _TRAIN_FIELDS[key])
    return out


def _architecture(section, key, raw) -> Architecture:
    try:
        return Architecture.parse(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: unknown architecture {raw!r}") from None


def load_run_config(path, seed: int | None = None) -> tuple[RunSpec, str | None]:
    cp = _read_ini(path)
    base = Path(path).resolve().parent
    for section in ("hamiltonian", "ansatz"):
        if not cp.has_section(section):
            raise ConfigError(f"{section}: missing section")
    if not cp.has_option("hamiltonian", "path"):
        raise ConfigError("hamiltonian.path: missing")
    ham = _resolve(base, cp.get("hamiltonian", "path"))
    molecule = cp.get("hamiltonian", "name", fallback=Path(ham).stem)
    a = cp["ansatz"]
    if "architecture" not in a:
        raise ConfigError("ansatz.architecture: missing")
    ansatz = {"architecture": _architecture("ansatz", "architecture", a["architecture"]).value}
    for key, target in (("d_model", "d_model"), ("n_blocks", "n_blocks")):
        if key in a:
            ansatz[target] = _convert("ansatz", key, a[key], int)
    for key, target in (("made_hidden", "made_hidden_dims"), ("phase_hidden", "phase_hidden_dims")):
        if key in a:
            ansatz[target] = _list("ansatz", key, a[key], int)
    unknown = set(a) - {"architecture", "d_model", "n_blocks", "made_hidden", "phase_hidden"}
    if unknown:
        raise ConfigError(f"ansatz.{sorted(unknown)[0]}: unknown key")
    tr = _train_section(cp)
    if seed is not None:
        tr["seed"] = seed
    results = cp.get("output", "results", fallback=None)
    return RunSpec(ham, molecule, ansatz, tr), (_resolve(base, results) if results else None)


def load_sweep_config(path, seed: int | None = None) -> SweepConfig:
    cp = _read_ini(path)
    base = Path(path).resolve().parent
    if not cp.has_section("sweep"):
        raise ConfigError("sweep: missing section")
    s = cp["sweep"]
    for key in ("hamiltonians", "architectures"):
        if key not in s:
            raise ConfigError(f"sweep.{key}: missing")
    cfg = SweepConfig(
        hamiltonians=[_resolve(base, p) for p in _list("sweep", "hamiltonians", s["hamiltonians"])],
        architectures=[_architecture("sweep", "architectures", v) for v in _list("sweep", "architectures", s["architectures"])],
    )
    ints = ("d_model", "made_hidden", "phase_hidden", "n_blocks", "steps", "max_unique")
    for key in ints:
        if key in s:
            setattr(cfg, key, _list("sweep", key, s[key], int))
    if "seeds" in s:
        cfg.seeds = _list("sweep", "seeds", s["seeds"], int)
    unknown = set(s) - {"hamiltonians", "architectures", "seeds", *ints}
    if unknown:
        raise ConfigError(f"sweep.{sorted(unknown)[0]}: unknown key")
    cfg.train = _train_section(cp)
    for key in ("steps", "max_unique", "seed"):
        cfg.train.pop(key, None)
    if seed is not None:
        cfg.seeds = [seed]
    results = cp.get("output", "results", fallback=None)
    cfg.results = _resolve(base, results) if results else None
    return cfg


# --- results files ---------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_results(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if rows and tuple(rows[0].keys()) != COLUMNS:
        raise ConfigError(f"results: {path} does not have the expected columns")
    return rows


def append_rows(path, rows: list[dict]) -> None:
    """Append rows, writing the schema line and header for a new file.

    The file is rewritten through a temporary file and renamed into place,
    so a crash never leaves a partial row behind.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    existing = path.read_text() if path.exists() else f"{SCHEMA_LINE}\n{','.join(COLUMNS)}\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".results-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(existing)
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        for row in rows:
            w.writerow({k: _fmt(row.get(k)) for k in COLUMNS})
    os.replace(tmp, path)


def build_configs(spec: RunSpec, h) -> tuple[AnsatzConfig, TrainConfig]:
    try:
        acfg = AnsatzConfig(
            n_qubits=h.n_qubits,
            n_electrons=h.n_electrons,
            multiplicity=h.spin_multiplicity,
            seed=spec.train.get("seed", 0),
            **{k: tuple(v) if isinstance(v, list) else v for k, v in spec.ansatz.items()},
        )
    except ValueError as exc:
        raise ConfigError(f"ansatz: {exc}") from None
    try:
        tcfg = TrainConfig(**spec.train)
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from None
    return acfg, tcfg


def execute(spec: RunSpec, checkpoint_dir=None) -> dict:
    """Train one grid point and return its results row."""
    h = load_hamiltonian(spec.hamiltonian)
    acfg, tcfg = build_configs(spec, h)
    result = train(h, acfg, tcfg)
    rec = result.record
    digest = spec.config_hash()
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
        meta = {"config_hash": digest, "ansatz": json.dumps(acfg.to_dict()), "status": rec.status}
        save_checkpoint(result.state.params, Path(checkpoint_dir) / f"{digest}.ckpt", meta)
    row = {k: v for k, v in rec.to_dict().items() if k in COLUMNS}
    row.update(
        config_hash=digest,
        molecule=spec.molecule,
        vscore="undefined" if rec.vscore is None and rec.status == "ok" else rec.vscore,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    )
    return row


def failed_row(spec: RunSpec, status: str = "failed") -> dict:
    return {
        "config_hash": spec.config_hash(),
        "ansatz": spec.ansatz["architecture"],
        "molecule": spec.molecule,
        "T": spec.train.get("steps"),
        "max_unique": spec.train.get("max_unique"),
        "seed": spec.train.get("seed", 0),
        "status": status,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _safe_execute(args) -> dict:
    spec, ckpt, staging = args
    try:
        row = execute(spec, ckpt)
    except Exception as exc:  # a failing grid point must not stop the sweep
        log.error("run %s failed: %s", spec.config_hash(), exc)
        row = failed_row(spec)
    if staging is not None:
        path = Path(staging) / f"{row['config_hash']}.csv"
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", newline="") as fh:
            csv.DictWriter(fh, fieldnames=COLUMNS).writerows([{k: _fmt(row.get(k)) for k in COLUMNS}])
        os.replace(tmp, path)
    return row


def _merge_staging(staging: Path, results: Path, order: list[str]) -> int:
    rows = {}
    for p in staging.glob("*.csv"):
        with open(p, newline="") as fh:
            for r in csv.DictReader(fh, fieldnames=COLUMNS):
                rows[r["config_hash"]] = r
    ordered = [rows[h] for h in order if h in rows]
    if ordered:
        append_rows(results, ordered)
    for p in staging.glob("*.csv"):
        p.unlink()
    return len(ordered)


# --- commands --------------------------------------------------------------------------


def cmd_run(config_path, out=None, seed=None) -> dict:
    spec, results = load_run_config(config_path, seed)
    results = out or results or "results.csv"
    if not Path(spec.hamiltonian).is_file():
        raise ConfigError(f"hamiltonian.path: file not found: {spec.hamiltonian}")
    build_configs(spec, load_hamiltonian(spec.hamiltonian))  # validate before training
    row = execute(spec, Path(results).parent / "checkpoints")
    append_rows(results, [row])
    return row


def cmd_sweep(config_path, out=None, resume: bool = False, workers: int = 1, seed=None) -> list[dict]:
    cfg = load_sweep_config(config_path, seed)
    results = Path(out or cfg.results or "results.csv")
    for p in cfg.hamiltonians:
        if not Path(p).is_file():
            raise ConfigError(f"sweep.hamiltonians: file not found: {p}")
        load_hamiltonian(p)
    specs = cfg.grid()
    order = [s.config_hash() for s in specs]
    staging = results.parent / f".{results.name}.staging"
    if staging.exists():
        _merge_staging(staging, results, order)  # runs finished before an interruption
    done = {r["config_hash"] for r in read_results(results)}
    if done and not resume:
        raise ConfigError(f"output: {results} already has rows; pass --resume to continue it")
    todo = [s for s, h in zip(specs, order) if h not in done]
    log.info("%d grid points, %d already done, %d to run", len(specs), len(specs) - len(todo), len(todo))
    ckpt = results.parent / "checkpoints"
    staging.mkdir(parents=True, exist_ok=True)
    jobs = [(s, ckpt, str(staging)) for s in todo]
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_safe_execute, jobs))
        _merge_staging(staging, results, order)
    else:
        for job in jobs:
            rows.append(_safe_execute(job))
            _merge_staging(staging, results, order)
    staging.rmdir()
    return rows


def load_points(results, metric: str, ansatz: str | None = None) -> tuple[list[DataPoint], int]:
    """Usable fit points and the number of rows skipped for an undefined metric."""
    col = METRIC_COLUMNS[metric]
    points, skipped = [], 0
    for r in read_results(results):
        if r["status"] != "ok" or (ansatz and r["ansatz"] != ansatz):
            continue
        if r[col] in ("", "undefined"):
            skipped += 1
            continue
        points.append(DataPoint(float(r["N_k"]), float(r["D_prime"]), float(r[col])))
    return points, skipped


def cmd_fit(results, metric: str = "vscore", ansatz: str | None = None, out=None, steps: int = 50_000):
    points, skipped = load_points(results, metric, ansatz)
    if skipped:
        print(f"skipped {skipped} rows with undefined {metric}")
    if len(points) < 10:
        raise DegenerateData(f"{len(points)} usable rows; at least 10 are needed")
    curve = fit_curve(points, metric, ansatz=ansatz or "all", steps=steps)
    print(f"{'ansatz':<12} {'metric':<7} {'A0':>10} {'A1':>10} {'alpha1':>8} {'A2':>10} {'alpha2':>8} {'R2':>6}")
    print(
        f"{curve.ansatz:<12} {metric:<7} {curve.A0:10.3e} {curve.A1:10.3e} {curve.alpha1:8.3f} "
        f"{curve.A2:10.3e} {curve.alpha2:8.3f} {curve.r2_log:6.3f}"
    )
    if out:
        write_curve(out, curve)
    return curve


def cmd_frontier(curve_path, budget: float | None = None, k: float | None = None, exact: bool = False):
    curve = read_curve(curve_path)
    fr = efficient_frontier(curve, exact=exact)
    print(f"frontier: D' = {fr.a:.6g} * N^{fr.b:.6g}")
    out = {"a": fr.a, "b": fr.b}
    if budget is not None and k is not None:
        N, D = optimal_allocation(curve, budget, k, exact=exact)
        print(f"N* = {N:.6g}  D'* = {D:.6g}  k*N*D' = {k * N * D:.6g}")
        out.update(N=N, D_prime=D)
    return out


def heatmap_grid(rows: list[dict], metric: str, bins_per_decade: int = 4) -> list[tuple]:
    """``(log10 N, log10 D', value, count)`` cells; values are floored then geometric-averaged."""
    col = METRIC_COLUMNS[metric]
    floor = METRIC_FLOORS[metric]
    cells: dict[tuple[int, int], list[float]] = {}
    for r in rows:
        if r["status"] != "ok" or r[col] in ("", "undefined"):
            continue
        i = math.floor(math.log10(float(r["N_k"])) * bins_per_decade + 1e-9)
        j = math.floor(math.log10(float(r["D_prime"])) * bins_per_decade + 1e-9)
        cells.setdefault((i, j), []).append(max(float(r[col]), floor))
    out = []
    for (i, j), vals in sorted(cells.items()):
        value = float(np.exp(np.mean(np.log(vals))))
        out.append(((i + 0.5) / bins_per_decade, (j + 0.5) / bins_per_decade, value, len(vals)))
    return out


def cmd_heatmap(results, metric: str = "vscore", ansatz: str | None = None, out=None, bins_per_decade: int = 4):
    rows = [r for r in read_results(results) if not ansatz or r["ansatz"] == ansatz]
    grid = heatmap_grid(rows, metric, bins_per_decade)
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["log10_N", "log10_D_prime", metric, "count"])
        for cell in grid:
            w.writerow([repr(cell[0]), repr(cell[1]), repr(cell[2]), cell[3]])
    finally:
        if out:
            fh.close()
    return grid


def cmd_exact(hamiltonian_path, out=None) -> float:
    h = load_hamiltonian(hamiltonian_path)
    energy = ground_energy(h)
    print(f"ground energy: {energy!r}")
    if h.fci_energy is not None:
        print(f"file %fci: {h.fci_energy!r} (difference {energy - h.fci_energy:.3e})")
    print(f"suggested header: %fci {energy!r}")
    if out:
        Path(out).write_text(format_hamiltonian(replace_fci(h, energy)))
    return energy


def replace_fci(h, energy):
    return type(h)(h.n_qubits, h.terms, h.n_electrons, h.spin_multiplicity, energy)


def cmd_flops(ansatz: str, n: int, M: int, B: float, T: int, N_mod: float, N_ph: float,
              n_b: int = 1, d_m: int = 8, S=None, D_prime=None, N_raw=None) -> dict:  # fmt: skip
    x = fl.FlopInputs(n, B, T, M, N_mod, N_ph, n_b, d_m)
    out = {"table1": fl.training_flops(ansatz, x), "assembled": fl.assembled_training_flops(ansatz, x)}
    if S is not None and D_prime is not None:
        out["simplified"] = fl.simplified_flops(ansatz, M, n, d_m, S, D_prime, N_raw or N_mod + N_ph)
    for k, v in out.items():
        print(f"{k}: {v:.6g}")
    return out


# --- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nqs-scaling", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train one configuration and append a results row")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)

    s = sub.add_parser("sweep", help="run every point of a sweep grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--resume", action="store_true")
    s.add_argument("--workers", type=int, default=1)

    f = sub.add_parser("fit", help="fit the scaling curve to a results CSV")
    f.add_argument("results")
    f.add_argument("--metric", choices=sorted(METRIC_COLUMNS), default="vscore")
    f.add_argument("--ansatz", choices=[a.value for a in Architecture])
    f.add_argument("--out")
    f.add_argument("--steps", type=int, default=50_000)

    fr = sub.add_parser("frontier", help="efficient frontier and optimal allocation from a curve")
    fr.add_argument("curve")
    fr.add_argument("--budget", type=float)
    fr.add_argument("--k", type=float)
    fr.add_argument("--exact", action="store_true", help="true loss minimiser instead of the default closed form")

    hm = sub.add_parser("heatmap", help="binned (log N, log D', metric) grid")
    hm.add_argument("results")
    hm.add_argument("--metric", choices=sorted(METRIC_COLUMNS), default="vscore")
    hm.add_argument("--ansatz", choices=[a.value for a in Architecture])
    hm.add_argument("--out")
    hm.add_argument("--bins-per-decade", type=int, default=4)

    ex = sub.add_parser("exact", help="exact ground energy of a Hamiltonian file")
    ex.add_argument("hamiltonian")
    ex.add_argument("--out", help="write the Hamiltonian with a %%fci header here")

    fp = sub.add_parser("flops", help="evaluate the FLOP estimators")
    fp.add_argument("--ansatz", choices=[a.value for a in Architecture], required=True)
    fp.add_argument("--n", type=int, required=True)
    fp.add_argument("--M", type=int, required=True)
    fp.add_argument("--B", type=float, required=True)
    fp.add_argument("--T", type=int, required=True)
    fp.add_argument("--N-mod", type=float, required=True)
    fp.add_argument("--N-ph", type=float, required=True)
    fp.add_argument("--n-b", type=int, default=1)
    fp.add_argument("--d-m", type=int, default=8)
    fp.add_argument("--S", type=float)
    fp.add_argument("--D-prime", type=float)
    fp.add_argument("--N-raw", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            row = cmd_run(args.config, args.out, args.seed)
            print(f"{row['config_hash']} {row['status']} energy={row['energy']}")
            return EXIT_OK if row["status"] == "ok" else EXIT_RUNTIME
        if args.command == "sweep":
            rows = cmd_sweep(args.config, args.out, args.resume, args.workers, args.seed)
            bad = sum(r["status"] != "ok" for r in rows)
            print(f"{len(rows)} runs, {bad} not ok")
            return EXIT_OK
        if args.command == "fit":
            cmd_fit(args.results, args.metric, args.ansatz, args.out, args.steps)
        elif args.command == "frontier":
            cmd_frontier(args.curve, args.budget, args.k, args.exact)
        elif args.command == "heatmap":
            cmd_heatmap(args.results, args.metric, args.ansatz, args.out, args.bins_per_decade)
        elif args.command == "exact":
            cmd_exact(args.hamiltonian, args.out)
        elif args.command == "flops":
            cmd_flops(args.ansatz, args.n, args.M, args.B, args.T, args.N_mod, args.N_ph,
                      args.n_b, args.d_m, args.S, args.D_prime, args.N_raw)  # fmt: skip
    except (ConfigError, HamiltonianParseError, DegenerateData, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OperatorTooLarge, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
