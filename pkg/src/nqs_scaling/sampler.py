"""Breadth-first autoregressive sampling of unique configurations with counts."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ansatz import (
    BOS_TOKEN,
    AnsatzState,
    Architecture,
    RetentionState,
    _decoder_log_probs,
    _made_log_probs,
    bits_from_tokens,
    retnet_forward_recurrent,
)
from .pauli import config_index, sector_basis

MAX_DRAWS = 2**63 - 1


@dataclass
class SampleBatch:
    configs: np.ndarray  # (B, n) uint8, pairwise distinct
    counts: np.ndarray  # (B,) int64
    total_draws: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total_draws:
            raise ValueError("counts do not sum to total_draws")

    def __len__(self):
        return len(self.configs)

    @property
    def weights(self) -> np.ndarray:
        return self.counts / float(self.total_draws)


@dataclass
class EnumeratedBatch:
    """Every feasible configuration weighted by its exact probability."""

    configs: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.configs)


class NoFeasibleConfiguration(RuntimeError):
    pass


def _split_counts(rng: np.random.Generator, counts: np.ndarray, log_probs: np.ndarray) -> np.ndarray:
    probs = np.exp(log_probs)
    probs /= probs.sum(axis=1, keepdims=True)
    return rng.multinomial(counts, probs)


def _truncate(counts: np.ndarray, max_unique: int) -> np.ndarray:
    """Indices of kept branches and their counts after redistributing dropped mass."""
    order = np.lexsort((np.arange(len(counts)), -counts))
    keep = np.sort(order[:max_unique])
    kept = counts[keep].astype(np.int64)
    dropped = int(counts.sum() - kept.sum())
    if dropped:
        share = dropped * (kept / kept.sum())
        extra = np.floor(share).astype(np.int64)
        leftover = dropped - int(extra.sum())
        frac_order = np.lexsort((np.arange(len(kept)), -(share - extra)))
        extra[frac_order[:leftover]] += 1
        kept = kept + extra
    return keep, kept


def sample_unique(state: AnsatzState, total_draws: int, max_unique: int, seed=None) -> SampleBatch:
    """Draw ``total_draws`` samples, tracking at most ``max_unique`` distinct branches.

    ``seed`` may be an int or a ``numpy.random.Generator``. When the frontier
    grows beyond ``max_unique`` the highest-count branches survive and the
    dropped counts are shared among them in proportion to their counts.
    """
    if total_draws < 1 or max_unique < 1:
        raise ValueError("total_draws and max_unique must be at least 1")
    if total_draws > MAX_DRAWS:
        warnings.warn(f"total_draws {total_draws} capped at 2**63 - 1")
        total_draws = MAX_DRAWS
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cfg = state.config
    counts = np.array([total_draws], dtype=np.int64)
    p = state.tensors()

    if cfg.architecture is Architecture.MADE:
        n = cfg.n_qubits
        prefix = np.zeros((1, n), dtype=np.uint8)
        for j in range(n):
            lp = _made_log_probs(state, p, prefix).data[:, j, :]
            split = _split_counts(rng, counts, lp)
            parent, outcome = np.nonzero(split)
            prefix = prefix[parent].copy()
            prefix[:, j] = outcome
            counts = split[parent, outcome]
            if len(counts) > max_unique:
                keep, counts = _truncate(counts, max_unique)
                prefix = prefix[keep]
        configs = prefix
    else:
        tokens = np.zeros((1, 0), dtype=np.int64)
        recurrent = cfg.architecture is Architecture.RETNET
        rstate = RetentionState.zeros(state, 1) if recurrent else None
        last = np.array([BOS_TOKEN])
        for j in range(cfg.n_seq):
            if recurrent:
                lp, rstate = retnet_forward_recurrent(state, rstate, last)
            else:
                lp = _decoder_log_probs(state, p, tokens).data[:, j, :]
            split = _split_counts(rng, counts, lp)
            parent, outcome = np.nonzero(split)
            tokens = np.concatenate([tokens[parent], outcome[:, None]], axis=1)
            counts = split[parent, outcome]
            if recurrent:
                rstate = rstate.select(parent)
            if len(counts) > max_unique:
                keep, counts = _truncate(counts, max_unique)
                tokens = tokens[keep]
                if recurrent:
                    rstate = rstate.select(keep)
            last = tokens[:, -1]
        configs = bits_from_tokens(tokens)

    if len(configs) == 0 or not state.is_feasible(configs).all():
        raise NoFeasibleConfiguration("sampling produced no feasible configuration")
    order = np.argsort(config_index(configs), kind="stable")
    return SampleBatch(configs[order].astype(np.uint8), counts[order].astype(np.int64), total_draws)


def batch_log_probs(state, batch) -> np.ndarray:
    return 2.0 * state.log_amplitude(batch.configs).real


def enumerate_batch(state) -> EnumeratedBatch:
    """The whole feasible space weighted by ``|psi(x)|^2``."""
    X = sector_basis(state.config.n_qubits, state.sector)
    logp = 2.0 * state.log_amplitude(X).real
    return EnumeratedBatch(X, np.exp(logp))
