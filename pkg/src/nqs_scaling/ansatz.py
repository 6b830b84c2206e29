"""Autoregressive neural quantum state ansatze.

Three modulus networks share one interface:

* ``MADE`` reads the full n-qubit configuration and emits one binary
  conditional per qubit.
* ``TRANSFORMER`` and ``RETNET`` read ``n/2`` spatial-orbital tokens
  (0 empty, 1 up, 2 down, 3 double) preceded by a begin-of-sequence token
  and emit one 4-way conditional per orbital.

A feedforward phase network supplies the imaginary part of the log amplitude,
``log psi(x) = 0.5 * sum_j log p_j(x) + i * phi(x)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import numeric as nm
from .numeric import NEG_LARGE, ParameterStore, Tensor
from .pauli import spin_counts

log = logging.getLogger(__name__)

HEAD_DIM = 8  # hidden dimensions per attention/retention head
N_ORBITAL_STATES = 4
BOS_TOKEN = 4


class Architecture(str, enum.Enum):
    MADE = "made"
    TRANSFORMER = "transformer"
    RETNET = "retnet"

    @classmethod
    def parse(cls, value) -> "Architecture":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown architecture {value!r}; expected made, transformer or retnet") from None


class InfeasibleConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class AnsatzConfig:
    architecture: Architecture
    n_qubits: int
    n_electrons: int | None = None
    multiplicity: int = 1
    d_model: int = 16
    n_blocks: int = 1
    made_hidden_dims: tuple[int, ...] = (32,)
    phase_hidden_dims: tuple[int, ...] = (32,)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture.parse(self.architecture))
        object.__setattr__(self, "made_hidden_dims", tuple(int(d) for d in self.made_hidden_dims))
        object.__setattr__(self, "phase_hidden_dims", tuple(int(d) for d in self.phase_hidden_dims))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.architecture is not Architecture.MADE:
            if self.n_qubits % 2:
                raise ValueError("token-based ansatze need an even number of qubits")
            if self.d_model < HEAD_DIM or self.d_model % HEAD_DIM:
                raise ValueError(f"d_model must be a positive multiple of {HEAD_DIM}")
            if self.n_blocks < 1:
                raise ValueError("n_blocks must be positive")
        if self.n_electrons is not None:
            if self.n_qubits % 2:
                raise ValueError("particle-number constraint needs an even number of qubits")
            n_up, n_down = spin_counts(self.n_electrons, self.multiplicity)
            if max(n_up, n_down) > self.n_qubits // 2:
                raise ValueError("electrons do not fit in the orbitals")

    @property
    def n_seq(self) -> int:
        return self.n_qubits // 2

    @property
    def n_heads(self) -> int:
        return self.d_model // HEAD_DIM

    @property
    def d_attn(self) -> int:
        return HEAD_DIM

    @property
    def feedforward_dim(self) -> int:
        return 4 * self.d_model

    @property
    def sector(self) -> tuple[int, int] | None:
        if self.n_electrons is None:
            return None
        return spin_counts(self.n_electrons, self.multiplicity)

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture.value,
            "n_qubits": self.n_qubits,
            "n_electrons": self.n_electrons,
            "multiplicity": self.multiplicity,
            "d_model": self.d_model,
            "n_blocks": self.n_blocks,
            "made_hidden_dims": list(self.made_hidden_dims),
            "phase_hidden_dims": list(self.phase_hidden_dims),
            "seed": self.seed,
        }


@dataclass
class ConditionalDistribution:
    """Per-position categorical log-probabilities, shape ``(batch, positions, outcomes)``."""

    log_probs: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    @property
    def n_outcomes(self) -> int:
        return self.log_probs.shape[-1]


# --- parameter counts ------------------------------------------------------------


def _mlp_count(dims) -> int:
    return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


def expected_param_counts(cfg: AnsatzConfig) -> tuple[int, int]:
    """Closed-form ``(N_mod, N_ph)`` for a configuration."""
    n_ph = _mlp_count((cfg.n_qubits, *cfg.phase_hidden_dims, 1))
    if cfg.architecture is Architecture.MADE:
        return _mlp_count((cfg.n_qubits, *cfg.made_hidden_dims, cfg.n_qubits)), n_ph
    d = cfg.d_model
    per_block = 12 * d * d + 9 * d
    n_mod = 5 * d + cfg.n_blocks * per_block + 2 * d + 4 * d + 4
    if cfg.architecture is Architecture.TRANSFORMER:
        n_mod += cfg.n_seq * d
    else:
        n_mod += cfg.n_blocks * 2 * d
    return n_mod, n_ph


# --- masks and constants ------------------------------------------------------------


def made_masks(n: int, hidden: tuple[int, ...]) -> list[np.ndarray]:
    """Connectivity masks of shape ``(fan_in, fan_out)`` for sequential degrees."""
    in_deg = np.arange(1, n + 1)
    degrees = [in_deg]
    cycle = max(n - 1, 1)
    for h in hidden:
        degrees.append(np.arange(h) % cycle + 1)
    masks = [(degrees[i + 1][None, :] >= degrees[i][:, None]).astype(float) for i in range(len(hidden))]
    masks.append((in_deg[None, :] > degrees[-1][:, None]).astype(float))
    return masks


def retention_decays(n_heads: int) -> np.ndarray:
    return 1.0 - 2.0 ** (-5.0 - np.arange(n_heads))


def _rotation_tables(length: int, dh: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    freqs = 1.0 / 10000 ** (np.arange(dh // 2) / (dh // 2))
    angles = np.repeat(np.arange(length)[:, None] * freqs[None, :], 2, axis=1)
    swap = np.zeros((dh, dh))
    for i in range(dh // 2):
        swap[2 * i + 1, 2 * i] = -1.0
        swap[2 * i, 2 * i + 1] = 1.0
    return np.cos(angles), np.sin(angles), swap


# --- particle-number constraint -------------------------------------------------------


def orbital_outcome_mask(tokens: np.ndarray, n_orbitals: int, sector: tuple[int, int] | None) -> np.ndarray:
    """Forbidden-outcome mask ``(B, L+1 capped at n_orbitals, 4)`` for orbital tokens.

    Entry ``[b, j, o]`` is True when choosing outcome ``o`` at orbital ``j``
    (given the first ``j`` tokens) makes the target electron counts unreachable.
    """
    tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    B, L = tokens.shape
    P = min(L + 1, n_orbitals)
    mask = np.zeros((B, P, N_ORBITAL_STATES), dtype=bool)
    if sector is None:
        return mask
    n_up, n_down = sector
    up = np.concatenate([np.zeros((B, 1), np.int64), np.cumsum(tokens & 1, axis=1)], axis=1)[:, :P]
    dn = np.concatenate([np.zeros((B, 1), np.int64), np.cumsum(tokens >> 1, axis=1)], axis=1)[:, :P]
    remaining = n_orbitals - 1 - np.arange(P)
    for o in range(N_ORBITAL_STATES):
        u, d = o & 1, o >> 1
        bad = (up + u > n_up) | (up + u + remaining < n_up) | (dn + d > n_down) | (dn + d + remaining < n_down)
        mask[:, :, o] = bad
    return mask


def qubit_outcome_mask(X: np.ndarray, sector: tuple[int, int] | None) -> np.ndarray:
    """Forbidden-outcome mask ``(B, n, 2)`` for per-qubit binary conditionals."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    B, n = X.shape
    mask = np.zeros((B, n, 2), dtype=bool)
    if sector is None:
        return mask
    spin = np.arange(n) % 2
    targets = np.array(sector)[spin]
    for s in (0, 1):
        cols = spin == s
        xs = X * cols
        before = np.cumsum(xs, axis=1) - xs
        after = cols[::-1].cumsum()[::-1] - cols  # same-spin positions strictly after j
        for b in (0, 1):
            bad = (before + b > targets) | (before + b + after < targets)
            mask[:, cols, b] |= bad[:, cols]
    return mask


def apply_particle_constraint(partial_tokens, logits, n_electrons: int, multiplicity: int = 1, n_orbitals=None):
    """Mask and renormalise the 4-way logits of the next orbital.

    ``partial_tokens`` are the orbital tokens placed so far. Returns
    log-probabilities with forbidden outcomes at ``NEG_LARGE``.
    """
    partial = np.asarray(partial_tokens, dtype=np.int64).reshape(1, -1)
    sector = spin_counts(n_electrons, multiplicity)
    if n_orbitals is None:
        raise ValueError("n_orbitals is required")
    if partial.shape[1] >= n_orbitals:
        raise ValueError("partial configuration already covers every orbital")
    mask = orbital_outcome_mask(partial, n_orbitals, sector)[0, partial.shape[1]]
    # infeasible prefix: no outcome keeps the counts reachable
    if mask.all():
        raise InfeasibleConfiguration(f"partial configuration {partial[0].tolist()} cannot reach {sector}")
    masked = np.where(mask, NEG_LARGE, np.asarray(logits, dtype=float))
    shifted = masked - masked.max()
    return shifted - np.log(np.exp(shifted).sum())


def tokens_from_bits(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    return X[:, 0::2] + 2 * X[:, 1::2]


def bits_from_tokens(tokens) -> np.ndarray:
    t = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    X = np.empty((t.shape[0], 2 * t.shape[1]), dtype=np.uint8)
    X[:, 0::2] = t & 1
    X[:, 1::2] = t >> 1
    return X


# --- state --------------------------------------------------------------------------


class AnsatzState:
    """Parameters plus architecture constants for one ansatz."""

    def __init__(self, config: AnsatzConfig, params: ParameterStore | None = None):
        self.config = config
        self.params = params if params is not None else init_params(config)
        n_mod, n_ph = expected_param_counts(config)
        if (self.params.modulus_count, self.params.phase_count) != (n_mod, n_ph):
            raise ValueError(
                f"parameter counts {(self.params.modulus_count, self.params.phase_count)} "
                f"do not match config {(n_mod, n_ph)}"
            )
        if config.architecture is not Architecture.MADE:
            leading = 12 * config.n_blocks * config.d_model**2
            if abs(n_mod - leading) > 0.2 * leading:
                log.warning("N_mod=%d deviates more than 20%% from 12*n_b*d_m^2=%d", n_mod, leading)
        if config.architecture is Architecture.MADE:
            self.made_masks = made_masks(config.n_qubits, config.made_hidden_dims)
        else:
            self.gammas = retention_decays(config.n_heads)
            self.cos, self.sin, self.swap = _rotation_tables(config.n_seq, HEAD_DIM)
            idx = np.arange(config.n_seq)
            rel = idx[:, None] - idx[None, :]
            self.decay = np.where(
                rel[None] >= 0, self.gammas[:, None, None] ** np.maximum(rel, 0)[None], 0.0
            )

    @property
    def n_params(self) -> int:
        return self.params.total_count

    @property
    def sector(self):
        return self.config.sector

    def copy(self) -> "AnsatzState":
        return AnsatzState(self.config, self.params.copy())

    def tensors(self, requires_grad: bool = False) -> dict[str, Tensor]:
        return self.params.tensors(requires_grad)

    def is_feasible(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        if self.sector is None:
            return np.ones(X.shape[0], dtype=bool)
        return (X[:, 0::2].sum(1) == self.sector[0]) & (X[:, 1::2].sum(1) == self.sector[1])

    # forward passes ---------------------------------------------------------------

    def conditional_log_probs(self, X, params: Mapping[str, Tensor] | None = None) -> Tensor:
        """Masked conditional log-probabilities ``(B, P, K)`` for full configurations."""
        p = params if params is not None else self.tensors()
        X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        if self.config.architecture is Architecture.MADE:
            return _made_log_probs(self, p, X)
        return _decoder_log_probs(self, p, tokens_from_bits(X))

    def phase(self, X, params: Mapping[str, Tensor] | None = None) -> Tensor:
        p = params if params is not None else self.tensors()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        h = Tensor(2.0 * X - 1.0)
        n_layers = len(self.config.phase_hidden_dims) + 1
        for i in range(n_layers):
            h = h @ p[f"phase.l{i}.w"] + p[f"phase.l{i}.b"]
            if i < n_layers - 1:
                h = nm.tanh(h)
        return h.reshape(h.shape[0])

    def log_amplitude_parts(self, X, params: Mapping[str, Tensor] | None = None) -> tuple[Tensor, Tensor]:
        """Real and imaginary parts of ``log <x|psi>`` as differentiable tensors."""
        p = params if params is not None else self.tensors()
        X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        lp = self.conditional_log_probs(X, p)
        outcomes = X if self.config.architecture is Architecture.MADE else tokens_from_bits(X)
        onehot = np.eye(lp.shape[-1])[outcomes]
        re = (lp * onehot).sum(axis=2).sum(axis=1) * 0.5
        return re, self.phase(X, p)

    def log_amplitude(self, X, check: bool = True) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        if check and not self.is_feasible(X).all():
            bad = X[~self.is_feasible(X)][0]
            raise InfeasibleConfiguration(f"configuration {bad.tolist()} violates the particle-number sector")
        re, im = self.log_amplitude_parts(X)
        return re.data + 1j * im.data


def _made_log_probs(state: AnsatzState, p, X: np.ndarray) -> Tensor:
    cfg = state.config
    h = Tensor(2.0 * X.astype(float) - 1.0)
    n_layers = len(cfg.made_hidden_dims) + 1
    for i in range(n_layers):
        h = h @ (p[f"made.l{i}.w"] * state.made_masks[i]) + p[f"made.l{i}.b"]
        if i < n_layers - 1:
            h = nm.relu(h)
    B, n = X.shape
    logits = nm.concat([Tensor(np.zeros((B, n, 1))), h.reshape(B, n, 1)], axis=2)
    logits = nm.masked_fill(logits, qubit_outcome_mask(X, cfg.sector), NEG_LARGE)
    return nm.log_softmax(logits, axis=-1)


def _embed(state: AnsatzState, p, tokens: np.ndarray) -> tuple[Tensor, np.ndarray]:
    cfg = state.config
    tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    inputs = np.concatenate([np.full((tokens.shape[0], 1), BOS_TOKEN), tokens], axis=1)[:, : cfg.n_seq]
    h = nm.embed_lookup(p["tok_emb"], inputs)
    if cfg.architecture is Architecture.TRANSFORMER:
        h = h + p["pos_emb"][: inputs.shape[1]]
    return h, inputs


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    B, L, d = x.shape
    return x.reshape(B, L, n_heads, d // n_heads).swapaxes(1, 2)


def _attention(state: AnsatzState, p, a: Tensor, blk: str) -> Tensor:
    cfg = state.config
    B, L, d = a.shape
    q = _split_heads(a @ p[f"{blk}.wq"], cfg.n_heads)
    k = _split_heads(a @ p[f"{blk}.wk"], cfg.n_heads)
    v = _split_heads(a @ p[f"{blk}.wv"], cfg.n_heads)
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(HEAD_DIM))
    causal = np.triu(np.ones((L, L), dtype=bool), k=1)
    att = nm.softmax(nm.masked_fill(scores, causal, NEG_LARGE), axis=-1)
    out = (att @ v).swapaxes(1, 2).reshape(B, L, d)
    return out @ p[f"{blk}.wo"]


def _rotate(state: AnsatzState, x: Tensor, positions: slice) -> Tensor:
    return x * state.cos[positions] + (x @ state.swap) * state.sin[positions]


def _retention_parallel(state: AnsatzState, p, a: Tensor, blk: str) -> Tensor:
    cfg = state.config
    B, L, d = a.shape
    q = _rotate(state, _split_heads(a @ p[f"{blk}.wq"], cfg.n_heads), slice(0, L))
    k = _rotate(state, _split_heads(a @ p[f"{blk}.wk"], cfg.n_heads), slice(0, L))
    v = _split_heads(a @ p[f"{blk}.wv"], cfg.n_heads)
    scores = (q @ k.swapaxes(-1, -2)) * (state.decay[:, :L, :L] / math.sqrt(HEAD_DIM))
    out = (scores @ v).swapaxes(1, 2).reshape(B, L, d)
    out = nm.group_norm(out, cfg.n_heads, p[f"{blk}.gn.g"], p[f"{blk}.gn.b"])
    return out @ p[f"{blk}.wo"]


def _feedforward(p, h: Tensor, blk: str) -> Tensor:
    a = nm.layer_norm(h, p[f"{blk}.ln2.g"], p[f"{blk}.ln2.b"])
    return nm.relu(a @ p[f"{blk}.ff1.w"] + p[f"{blk}.ff1.b"]) @ p[f"{blk}.ff2.w"] + p[f"{blk}.ff2.b"]


def _head(state: AnsatzState, p, h: Tensor, tokens: np.ndarray) -> Tensor:
    h = nm.layer_norm(h, p["ln_f.g"], p["ln_f.b"])
    logits = h @ p["head.w"] + p["head.b"]
    mask = orbital_outcome_mask(tokens, state.config.n_seq, state.sector)
    return nm.log_softmax(nm.masked_fill(logits, mask, NEG_LARGE), axis=-1)


def _decoder_log_probs(state: AnsatzState, p, tokens: np.ndarray) -> Tensor:
    cfg = state.config
    h, _ = _embed(state, p, tokens)
    mixer = _attention if cfg.architecture is Architecture.TRANSFORMER else _retention_parallel
    for b in range(cfg.n_blocks):
        blk = f"b{b}"
        h = h + mixer(state, p, nm.layer_norm(h, p[f"{blk}.ln1.g"], p[f"{blk}.ln1.b"]), blk)
        h = h + _feedforward(p, h, blk)
    return _head(state, p, h, tokens)


# --- public forward functions ---------------------------------------------------------


def _require(state: AnsatzState, *archs: Architecture):
    if state.config.architecture not in archs:
        names = ", ".join(a.value for a in archs)
        raise ValueError(f"operation needs a {names} ansatz, got {state.config.architecture.value}")


def made_forward(state: AnsatzState, X) -> ConditionalDistribution:
    _require(state, Architecture.MADE)
    return ConditionalDistribution(_made_log_probs(state, state.tensors(), np.atleast_2d(X)).data)


def transformer_forward(state: AnsatzState, tokens) -> ConditionalDistribution:
    """4-way conditionals for orbitals ``0..len(tokens)`` (capped at ``n/2``)."""
    _require(state, Architecture.TRANSFORMER)
    tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    if tokens.shape[1] > state.config.n_seq:
        raise ValueError(f"sequence of length {tokens.shape[1]} exceeds n/2 = {state.config.n_seq}")
    return ConditionalDistribution(_decoder_log_probs(state, state.tensors(), tokens).data)


def retnet_forward_parallel(state: AnsatzState, tokens) -> ConditionalDistribution:
    _require(state, Architecture.RETNET)
    tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    if tokens.shape[1] > state.config.n_seq:
        raise ValueError(f"sequence of length {tokens.shape[1]} exceeds n/2 = {state.config.n_seq}")
    return ConditionalDistribution(_decoder_log_probs(state, state.tensors(), tokens).data)


@dataclass
class RetentionState:
    """Recurrent retention memory: one ``(B, H, d_attn, d_attn)`` matrix per block."""

    S: list[np.ndarray]
    position: int = 0
    tokens: np.ndarray = field(default_factory=lambda: np.zeros((1, 0), dtype=np.int64))

    @classmethod
    def zeros(cls, state: AnsatzState, batch: int = 1) -> "RetentionState":
        cfg = state.config
        S = [np.zeros((batch, cfg.n_heads, HEAD_DIM, HEAD_DIM)) for _ in range(cfg.n_blocks)]
        return cls(S, 0, np.zeros((batch, 0), dtype=np.int64))

    def select(self, index) -> "RetentionState":
        return RetentionState([s[index] for s in self.S], self.position, self.tokens[index])


def retnet_forward_recurrent(state: AnsatzState, head_states: RetentionState, next_token):
    """Feed one input token per sequence; return the next orbital's conditional.

    The first call of a sequence feeds ``BOS_TOKEN``; later calls feed the
    sampled orbital tokens. Returns ``(log_probs (B, 4), updated state)``.
    """
    _require(state, Architecture.RETNET)
    cfg = state.config
    t = head_states.position
    if t >= cfg.n_seq:
        raise ValueError("sequence already complete")
    next_token = np.asarray(next_token, dtype=np.int64).reshape(-1)
    B = head_states.S[0].shape[0]
    if any(s.shape != (B, cfg.n_heads, HEAD_DIM, HEAD_DIM) for s in head_states.S) or next_token.size not in (1, B):
        raise ValueError("recurrent state shape mismatch")
    next_token = np.broadcast_to(next_token, (B,))
    if (t == 0) != bool((next_token == BOS_TOKEN).all()):
        raise ValueError("the first recurrent input must be BOS_TOKEN and only the first")
    tokens = head_states.tokens if t == 0 else np.concatenate([head_states.tokens, next_token[:, None]], axis=1)
    p = state.tensors()
    h = nm.embed_lookup(p["tok_emb"], next_token[:, None])  # (B, 1, d)
    new_S = []
    for b in range(cfg.n_blocks):
        blk = f"b{b}"
        a = nm.layer_norm(h, p[f"{blk}.ln1.g"], p[f"{blk}.ln1.b"])
        pos = slice(t, t + 1)
        q = _rotate(state, _split_heads(a @ p[f"{blk}.wq"], cfg.n_heads), pos).data  # (B,H,1,dh)
        k = _rotate(state, _split_heads(a @ p[f"{blk}.wk"], cfg.n_heads), pos).data / math.sqrt(HEAD_DIM)
        v = _split_heads(a @ p[f"{blk}.wv"], cfg.n_heads).data
        S = state.gammas[None, :, None, None] * head_states.S[b] + np.swapaxes(k, -1, -2) @ v
        new_S.append(S)
        out = Tensor((q @ S).swapaxes(1, 2).reshape(B, 1, cfg.d_model))
        out = nm.group_norm(out, cfg.n_heads, p[f"{blk}.gn.g"], p[f"{blk}.gn.b"]) @ p[f"{blk}.wo"]
        h = h + out
        h = h + _feedforward(p, h, blk)
    h = nm.layer_norm(h, p["ln_f.g"], p["ln_f.b"])
    logits = (h @ p["head.w"] + p["head.b"]).data[:, 0, :]
    mask = orbital_outcome_mask(tokens, cfg.n_seq, state.sector)[:, t, :]
    logits = np.where(mask, NEG_LARGE, logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    lp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return lp, RetentionState(new_S, t + 1, tokens)


def phase_forward(state: AnsatzState, X) -> np.ndarray:
    return state.phase(X).data


def log_amplitude(state, X) -> np.ndarray:
    return state.log_amplitude(X)


# --- initialisation ---------------------------------------------------------------------


def init_params(cfg: AnsatzConfig) -> ParameterStore:
    rng = np.random.default_rng(cfg.seed)
    store = ParameterStore()

    def dense(name, fan_in, fan_out, group="modulus", scale=1.0, bias=True):
        store.add(f"{name}.w", rng.normal(0.0, scale / math.sqrt(fan_in), (fan_in, fan_out)), group)
        if bias:
            store.add(f"{name}.b", np.zeros(fan_out), group)

    if cfg.architecture is Architecture.MADE:
        dims = (cfg.n_qubits, *cfg.made_hidden_dims, cfg.n_qubits)
        for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            dense(f"made.l{i}", a, b)
    else:
        d = cfg.d_model
        store.add("tok_emb", rng.normal(0.0, 1.0, (BOS_TOKEN + 1, d)))
        if cfg.architecture is Architecture.TRANSFORMER:
            store.add("pos_emb", rng.normal(0.0, 0.1, (cfg.n_seq, d)))
        for b in range(cfg.n_blocks):
            blk = f"b{b}"
            store.add(f"{blk}.ln1.g", np.ones(d))
            store.add(f"{blk}.ln1.b", np.zeros(d))
            for w in ("wq", "wk", "wv", "wo"):
                store.add(f"{blk}.{w}", rng.normal(0.0, 1.0 / math.sqrt(d), (d, d)))
            if cfg.architecture is Architecture.RETNET:
                store.add(f"{blk}.gn.g", np.ones(d))
                store.add(f"{blk}.gn.b", np.zeros(d))
            store.add(f"{blk}.ln2.g", np.ones(d))
            store.add(f"{blk}.ln2.b", np.zeros(d))
            dense(f"{blk}.ff1", d, cfg.feedforward_dim)
            dense(f"{blk}.ff2", cfg.feedforward_dim, d)
        store.add("ln_f.g", np.ones(d))
        store.add("ln_f.b", np.zeros(d))
        dense("head", d, N_ORBITAL_STATES, scale=0.1)
    dims = (cfg.n_qubits, *cfg.phase_hidden_dims, 1)
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        dense(f"phase.l{i}", a, b, group="phase")
    return store


def zero_params(state: AnsatzState) -> AnsatzState:
    """Copy of ``state`` with every parameter set to zero."""
    new = state.copy()
    new.params.set_flat(np.zeros(new.params.total_count))
    return new


def randomize(state: AnsatzState, seed: int, scale: float = 1.0) -> AnsatzState:
    """Copy with every parameter drawn i.i.d. normal, including norms and biases."""
    rng = np.random.default_rng(seed)
    new = state.copy()
    new.params.set_flat(rng.normal(0.0, scale, new.params.total_count))
    return new


def build(architecture, n_qubits: int, **kw) -> AnsatzState:
    return AnsatzState(AnsatzConfig(Architecture.parse(architecture), n_qubits, **kw))


def with_config(cfg: AnsatzConfig, **changes) -> AnsatzConfig:
    return replace(cfg, **changes)
