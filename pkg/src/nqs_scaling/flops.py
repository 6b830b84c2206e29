"""FLOP estimates for sampling, local-energy evaluation and training of NQS ansatze.

Every ``log B`` in the training totals is base 4: it counts the orbital
positions the sampler needs before the frontier reaches ``B`` unique
branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ansatz import Architecture


@dataclass(frozen=True)
class FlopInputs:
    n: int  # qubits
    B: float  # mean unique batch size
    T: int  # training steps
    M: int  # unique flip patterns
    N_mod: float
    N_ph: float
    n_b: int = 1
    d_m: int = 8

    def __post_init__(self):
        if self.n % 2:
            raise ValueError("n must be even")
        if min(self.n, self.B, self.T, self.N_mod) <= 0 or self.M < 0 or self.N_ph < 0:
            raise ValueError("FLOP inputs must be positive")

    @property
    def n_seq(self) -> int:
        return self.n // 2

    @property
    def d_attn(self) -> int:
        return self.d_m


def log4(x: float) -> float:
    return math.log(x) / math.log(4.0)


def floor_log4(B: float) -> int:
    """Largest k with 4**k <= B."""
    k = 0
    while 4 ** (k + 1) <= B:
        k += 1
    return k


def forward_flops(
    architecture, mode: str = "full", *, n_params: float, n_seq: int = 1, n_blocks: int = 1, d_attn: int = 8
) -> float:
    """Cost of one forward pass over a whole input sequence."""
    arch = Architecture.parse(architecture)
    if arch is Architecture.MADE and mode == "full":
        return 3.0 * n_params
    if arch in (Architecture.TRANSFORMER, Architecture.RETNET) and mode == "parallel":
        return n_seq * (2.0 * n_params + 4.0 * n_blocks * n_seq * d_attn)
    if arch is Architecture.RETNET and mode == "recurrent":
        return n_seq * (2.0 * n_params + 5.0 * n_blocks * d_attn**2)
    raise ValueError(f"mode {mode!r} is not defined for {arch.value}")


def sampling_flops(F_mod: float, T: float, B: float, n: int) -> float:
    """Breadth-first sampling cost with per-token modulus cost ``F_mod``."""
    if B < 1:
        raise ValueError("B must be at least 1")
    k = floor_log4(B)
    branching = (4**k - 1) / 3.0  # sum_{m<k} 4**m
    return F_mod * T * (branching + B * (n / 2 - k))


def loss_flops(F_mod: float, F_ph: float, B: float, T: float, M: int, n: int) -> float:
    """M numerator passes, one denominator pass and a backward pass per unique sample."""
    if M < 0:
        raise ValueError("M must be nonnegative")
    return B * T * (M + 3) * ((n / 2) * F_mod + F_ph)


def training_flops(architecture, x: FlopInputs) -> float:
    """Closed-form total training cost of one run."""
    arch = Architecture.parse(architecture)
    n, B, T, M = x.n, x.B, x.T, x.M
    L = log4(B)
    phase = 2.0 * (M + 3) * x.N_ph
    if arch is Architecture.MADE:
        return B * T * ((1.5 * n + 3 * M + 10 - 3 * L) * x.N_mod + phase)
    nbd = x.n_b * x.d_m
    if arch is Architecture.RETNET:
        return B * T * (
            ((M + 4) * n - 2 * L) * x.N_mod + phase + nbd * (2.5 * x.d_m * ((M + 1) * n - 2 * L) + 3 * n**2)
        )
    return B * T * (
        ((M + 4) * n - 4.0 / 3.0 * L) * x.N_mod
        + phase
        + nbd * ((M + 3.5) * n**2 - 8.0 / 9.0 * L - 2.0 / 3.0 * L**2)
    )


def assembled_training_flops(architecture, x: FlopInputs, approximate: bool = False) -> float:
    """Training cost built from :func:`sampling_flops` and :func:`loss_flops` directly.

    With ``approximate=True`` the branching sum becomes ``B/3`` and
    ``floor(log4 B)`` becomes ``log4 B``; for MADE this reproduces
    :func:`training_flops` exactly.
    """
    arch = Architecture.parse(architecture)
    n, B, T, M = x.n, x.B, x.T, x.M
    k = log4(B) if approximate else floor_log4(B)
    branching = B / 3.0 if approximate else (4 ** floor_log4(B) - 1) / 3.0
    F_ph = 2.0 * x.N_ph
    if arch is Architecture.MADE:
        # one 3N_mod pass per sampling position and per loss evaluation
        sample = 3.0 * x.N_mod * T * (branching + B * (n / 2 - k))
        return sample + loss_flops(3.0 * x.N_mod / (n / 2), F_ph, B, T, M, n)
    d, nb = x.d_m, x.n_b
    if arch is Architecture.RETNET:
        F_rec = 2.0 * x.N_mod + 5.0 * nb * d**2
        F_par = 2.0 * x.N_mod + 4.0 * nb * (n / 2) * d
        sample = F_rec * T * (branching + B * (n / 2 - k))
        numerators = B * T * M * (n / 2) * F_rec
        rest = B * T * (3 * (n / 2) * F_par + (M + 3) * F_ph)
        return sample + numerators + rest
    # transformer: prefixes grow by one token per position, no dummy tokens
    K = int(round(k)) if not approximate else floor_log4(B)
    sample = T * sum((m + 1) * 4**m * (2 * x.N_mod + 4 * (m + 1) * nb * d) for m in range(K))
    sample += T * B * sum(2 * x.N_mod + 4 * m * nb * d for m in range(K + 1, n // 2 + 1))
    loss = B * T * ((M + 3) * n * x.N_mod + (M + 3) * F_ph + nb * d * (M + 3) * n**2)
    return sample + loss


def simplified_flops(architecture, M: int, n: int, d_m: int, S: float, D_prime: float, N_raw: float) -> float:
    """Cost of the form ``k * D' * N`` used for compute-constrained allocation."""
    return simplified_cost_factor(architecture, M, n, d_m, S) * D_prime * N_raw


def simplified_cost_factor(architecture, M: int, n: int, d_m: int, S: float) -> float:
    """The factor ``k`` in ``C = k * D' * N``."""
    arch = Architecture.parse(architecture)
    if arch is Architecture.MADE:
        return 3.0 * M * S
    if arch is Architecture.RETNET:
        return (15.5 * M * n + 3.0 * n**2 / d_m) * S / 13.0
    return M * (n + n**2 / (12.0 * d_m)) * S
