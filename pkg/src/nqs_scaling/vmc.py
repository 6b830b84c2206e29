"""Variational Monte Carlo: local energies, V-score, gradient estimator and the training loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .ansatz import AnsatzConfig, AnsatzState
from .flops import FlopInputs, simplified_flops, training_flops
from .numeric import Tape, backward
from .oracle import reference_energy
from .pauli import LocalEnergyPlan, PauliHamiltonian, config_index, search_space_size
from .sampler import sample_unique

log = logging.getLogger(__name__)


class NonFiniteError(FloatingPointError):
    pass


# --- local energies -------------------------------------------------------------


def local_energies(state, plan: LocalEnergyPlan, X: np.ndarray) -> np.ndarray:
    """``l(x) = sum_x' H_{x x'} psi(x') / psi(x)`` for every row of ``X``.

    Connected configurations outside the ansatz's particle sector have zero
    amplitude and are skipped. Each distinct ``x'`` is evaluated once.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
    diag, off = plan.row_amplitudes(X)
    out = diag.copy()
    if plan.n_groups == 0:
        return out
    log_x = state.log_amplitude(X)
    conn = plan.connected(X).reshape(-1, X.shape[1])
    # the plan holds <x'|H|x>; Hermiticity gives the row element <x|H|x'> as its conjugate
    amp = off.reshape(-1).conj()
    use = state.is_feasible(conn) & (amp != 0)
    if use.any():
        labels = config_index(conn[use])
        uniq, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        log_conn = state.log_amplitude(conn[use][first])[inverse]
        rows = np.repeat(np.arange(len(X)), plan.n_groups)[use]
        ratio = np.exp(log_conn - log_x[rows])
        np.add.at(out, rows, amp[use] * ratio)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite local energy")
    return out


def local_energy(state, h: PauliHamiltonian, groups: LocalEnergyPlan | None, x) -> complex:
    """Local energy of a single configuration; ``groups`` may be ``None``."""
    plan = groups if groups is not None else LocalEnergyPlan(h)
    return complex(local_energies(state, plan, np.asarray(x)[None])[0])


@dataclass
class EnergyEstimate:
    energy: float
    variance: float
    n_unique: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / max(self.n_unique, 1))


def energy_and_variance(weights, local: np.ndarray) -> EnergyEstimate:
    """Weighted mean of ``Re l`` and population variance ``sum w |l - mean(l)|^2``.

    ``weights`` may be raw counts, normalised weights, or a batch object
    exposing ``.weights``.
    """
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    local = np.asarray(local, dtype=complex)
    if w.size == 0 or w.shape != local.shape:
        raise ValueError("empty or misaligned batch")
    w = w / w.sum()
    mean = np.sum(w * local)
    var = float(np.sum(w * np.abs(local - mean) ** 2))
    return EnergyEstimate(float(mean.real), var, len(local))


def vscore(estimate: EnergyEstimate, n_qubits: int, identity_weight: float = 0.0) -> float | None:
    """Size-intensive ``n Var / (E - w0)^2``; ``None`` (undefined) when the denominator vanishes.

    ``w0`` is the identity coefficient of the Hamiltonian, the energy of an
    infinite-temperature state.
    """
    denom = (estimate.energy - identity_weight) ** 2
    if denom == 0.0 or not np.isfinite(denom):
        return None
    return n_qubits * estimate.variance / denom


# --- gradient -------------------------------------------------------------------


def gradient(state: AnsatzState, batch, local: np.ndarray, baseline: float | None = None) -> dict[str, np.ndarray]:
    """Energy gradient with local energies held fixed.

    Differentiates ``sum_x w_x [2 (Re l - b) Re log psi + 2 Im l * phi]``,
    which equals ``2 Re E[(l - b) d log psi*]`` for real ``log|psi|``
    and phase ``phi``.
    """
    w = np.asarray(batch.weights, dtype=float)
    w = w / w.sum()
    local = np.asarray(local, dtype=complex)
    if baseline is None:
        baseline = float(np.sum(w * local.real))
    coef_re = 2.0 * w * (local.real - baseline)
    coef_im = 2.0 * w * local.imag
    with Tape() as tape:
        params = state.tensors(requires_grad=True)
        re, im = state.log_amplitude_parts(batch.configs, params)
        surrogate = (re * coef_re + im * coef_im).sum()
    grads = backward(tape, surrogate)
    out = {}
    for name, value in state.params.items():
        g = grads.get(name)
        out[name] = np.zeros_like(value) if g is None else g
        if not np.all(np.isfinite(out[name])):
            raise NonFiniteError(f"non-finite gradient for {name}")
    return out


# --- optimisation -----------------------------------------------------------------


@dataclass
class TrainConfig:
    steps: int = 200
    max_unique: int = 1000
    draws_start: float = 1e4
    draws_end: float = 1e12
    peak_lr: float = 2.5e-3
    final_lr: float = 5e-8
    warmup_fraction: float = 0.04
    reuse_every: int = 10
    reuse_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1 or self.max_unique < 1:
            raise ValueError("steps and max_unique must be positive")


def cosine_lr(step: int, cfg: TrainConfig) -> float:
    """Linear warm-up to ``peak_lr`` then cosine decay reaching ``final_lr`` on the last step."""
    T = cfg.steps
    warm = cfg.warmup_fraction * T
    if step <= warm:
        return cfg.peak_lr * step / warm if warm > 0 else cfg.peak_lr
    span = (T - 1) - warm
    frac = min((step - warm) / span, 1.0) if span > 0 else 1.0
    return cfg.final_lr + 0.5 * (cfg.peak_lr - cfg.final_lr) * (1.0 + math.cos(math.pi * frac))


def draw_count(step: int, cfg: TrainConfig) -> int:
    """Geometric interpolation of the nominal draw count across training."""
    if cfg.steps == 1:
        return int(cfg.draws_end)
    frac = step / (cfg.steps - 1)
    return int(round(cfg.draws_start * (cfg.draws_end / cfg.draws_start) ** frac))


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, lr: float, opt: AdamState):
    """In-place Adam update of a :class:`~nqs_scaling.numeric.ParameterStore`."""
    opt.t += 1
    b1, b2 = opt.beta1, opt.beta2
    new = {}
    for name, value in params.items():
        g = grads[name]
        m = opt.m.get(name, np.zeros_like(value))
        v = opt.v.get(name, np.zeros_like(value))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        opt.m[name], opt.v[name] = m, v
        mhat = m / (1 - b1**opt.t)
        vhat = v / (1 - b2**opt.t)
        new[name] = value - lr * mhat / (np.sqrt(vhat) + opt.eps)
    params.update(new)
    return params


# --- training ----------------------------------------------------------------------


@dataclass
class RunRecord:
    ansatz: str
    n_qubits: int
    n_electrons: int | None
    N_raw: int
    N_mod: int
    N_ph: int
    T: int
    max_unique: int
    M: int
    B_mean: float
    SF: float
    D_prime: float
    energy: float
    variance: float
    vscore: float | None
    abs_error: float | None
    reference_energy: float | None
    flops_table1: float
    flops_simplified: float
    status: str
    seed: int
    wall_time: float

    @property
    def N_k(self) -> float:
        return self.N_raw / 1000.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_k"] = self.N_k
        return d


@dataclass
class TrainResult:
    record: RunRecord
    state: AnsatzState
    energies: list


def _scaled(T: int, B_mean: float, S: float) -> tuple[float, float]:
    """``(SF, D')`` with ``SF = B / S`` and ``D' = T * SF``."""
    sf = B_mean / S
    return sf, T * sf


def evaluate(state, h: PauliHamiltonian, draws: int, max_unique: int, seed=None, plan=None):
    """Fresh batch, its local energies and their weighted statistics."""
    plan = plan if plan is not None else LocalEnergyPlan(h)
    batch = sample_unique(state, draws, max_unique, seed)
    local = local_energies(state, plan, batch.configs)
    return batch, local, energy_and_variance(batch, local)


def train(
    h: PauliHamiltonian,
    ansatz: AnsatzConfig | AnsatzState,
    cfg: TrainConfig,
    reference: float | None = None,
    callback=None,
) -> TrainResult:
    """Optimise an ansatz on ``h`` and evaluate it on a fresh final batch.

    During the first ``reuse_fraction`` of the steps a batch (and its local
    energies) is drawn every ``reuse_every`` steps and reused in between;
    afterwards every step draws a new batch. A non-finite energy or gradient
    ends the run with status ``"diverged"``.
    """
    start = time.perf_counter()
    state = ansatz if isinstance(ansatz, AnsatzState) else AnsatzState(ansatz)
    acfg = state.config
    if acfg.n_qubits != h.n_qubits:
        raise ValueError(f"ansatz has {acfg.n_qubits} qubits, Hamiltonian has {h.n_qubits}")
    plan = LocalEnergyPlan(h)
    rng = np.random.default_rng(cfg.seed)
    opt = AdamState()
    energies, sizes = [], []
    status = "ok"
    batch = local = est = None
    try:
        for step in range(cfg.steps):
            reuse = batch is not None and step < cfg.reuse_fraction * cfg.steps and step % cfg.reuse_every
            if not reuse:
                batch, local, est = evaluate(state, h, draw_count(step, cfg), cfg.max_unique, rng, plan)
                if not np.isfinite(est.energy):
                    raise NonFiniteError("non-finite energy")
            sizes.append(len(batch))
            energies.append(est.energy)
            grads = gradient(state, batch, local, est.energy)
            adam_step(state.params, grads, cosine_lr(step, cfg), opt)
            if callback is not None:
                callback(step, est)
        _, _, est = evaluate(state, h, int(cfg.draws_end), cfg.max_unique, rng, plan)
        if not (np.isfinite(est.energy) and np.isfinite(est.variance)):
            raise NonFiniteError("non-finite final energy")
    except (NonFiniteError, FloatingPointError) as exc:
        log.warning("run diverged: %s", exc)
        status = "diverged"
        est = EnergyEstimate(float("nan"), float("nan"), 0)

    if reference is None:
        reference = reference_energy(h)
    S = search_space_size(h.n_qubits, acfg.n_electrons, acfg.multiplicity)
    B_mean = float(np.mean(sizes)) if sizes else 1.0
    sf, d_prime = _scaled(cfg.steps, B_mean, S)
    n_mod, n_ph = state.params.modulus_count, state.params.phase_count
    n_even = h.n_qubits + (h.n_qubits % 2)
    fin = FlopInputs(n_even, B_mean, cfg.steps, plan.n_groups, n_mod, n_ph, acfg.n_blocks, acfg.d_model)
    ok = status == "ok"
    record = RunRecord(
        ansatz=acfg.architecture.value,
        n_qubits=h.n_qubits,
        n_electrons=h.n_electrons,
        N_raw=state.n_params,
        N_mod=n_mod,
        N_ph=n_ph,
        T=cfg.steps,
        max_unique=cfg.max_unique,
        M=plan.n_groups,
        B_mean=B_mean,
        SF=sf,
        D_prime=d_prime,
        energy=est.energy,
        variance=est.variance,
        vscore=vscore(est, h.n_qubits, h.identity_weight) if ok else None,
        abs_error=abs(est.energy - reference) if ok and reference is not None else None,
        reference_energy=reference,
        flops_table1=training_flops(acfg.architecture, fin),
        flops_simplified=simplified_flops(acfg.architecture, plan.n_groups, n_even, acfg.d_model, S, d_prime, state.n_params),
        status=status,
        seed=cfg.seed,
        wall_time=time.perf_counter() - start,
    )
    return TrainResult(record, state, energies)
