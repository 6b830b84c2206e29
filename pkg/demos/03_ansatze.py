"""
Autoregressive ansatze
======================

MADE works on single qubits, the transformer and RetNet on four-state
spatial orbitals. All three are normalised over the particle-number
sector by construction.
"""

import numpy as np

from nqs_scaling.ansatz import (
    BOS_TOKEN,
    RetentionState,
    build,
    randomize,
    retnet_forward_parallel,
    retnet_forward_recurrent,
)
from nqs_scaling.pauli import bitstring, sector_basis
from nqs_scaling.sampler import sample_unique

n, ne = 8, 4
for arch in ("made", "transformer", "retnet"):
    state = randomize(build(arch, n, n_electrons=ne, d_model=16), seed=1, scale=0.5)
    X = sector_basis(n, state.sector)
    prob = np.exp(2 * state.log_amplitude(X).real)
    print(
        f"{arch:>11}: N_mod={state.params.modulus_count:5d} N_ph={state.params.phase_count:4d}"
        f"  sum |psi|^2 over {len(X)} determinants = {prob.sum():.12f}"
    )

# Retention has a parallel form (used for training) and a recurrent one
# (used for sampling). They give the same conditionals.
state = randomize(build("retnet", 16, d_model=16, n_blocks=2), seed=3, scale=0.5)
tokens = np.array([[1, 3, 0, 2, 2, 1, 0, 3]])
par = retnet_forward_parallel(state, tokens).log_probs
rs, last, rec = RetentionState.zeros(state, 1), np.array([BOS_TOKEN]), []
for j in range(tokens.shape[1]):
    lp, rs = retnet_forward_recurrent(state, rs, last)
    rec.append(lp)
    last = tokens[:, j]
print("retnet parallel vs recurrent max |diff|:", np.abs(par - np.stack(rec, 1)).max())

# Breadth-first sampling returns unique configurations with counts.
state = randomize(build("transformer", n, n_electrons=ne, d_model=16), seed=2, scale=1.0)
batch = sample_unique(state, 10**6, max_unique=6, seed=0)
for x, c in zip(batch.configs, batch.counts):
    print(f"  {bitstring(x)}  {c:7d}")
print("draws", batch.total_draws, "unique", len(batch))
