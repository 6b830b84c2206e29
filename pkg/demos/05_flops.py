"""
Counting FLOPs
==============

Closed-form training costs for the three ansatze, checked against the
costs assembled from the sampling and loss counts.
"""

from nqs_scaling.flops import (
    FlopInputs,
    assembled_training_flops,
    forward_flops,
    loss_flops,
    sampling_flops,
    simplified_flops,
    training_flops,
)

print("MADE forward, N=1000:", forward_flops("made", "full", n_params=1000))
print("transformer forward, N=1000, 10 tokens:", forward_flops("transformer", "parallel", n_params=1000, n_seq=10))

# Sampling pays for every branch opened before the batch saturates.
print("sampling, B=4, n=4:", sampling_flops(1, 1, 4, 4))
print("loss, M=2, n=4, B=16:", loss_flops(100, 50, 16, 1, 2, 4))

x = FlopInputs(n=4, B=16, T=1, M=2, N_mod=100, N_ph=50)
for arch in ("made", "transformer", "retnet"):
    print(f"{arch:>11}: closed form {training_flops(arch, x):.4e}  assembled {assembled_training_flops(arch, x):.4e}")

# For realistic batch sizes the two routes agree closely.
big = FlopInputs(n=28, B=4000, T=20000, M=4508, N_mod=12 * 32**2, N_ph=5000, n_b=1, d_m=32)
for arch in ("made", "transformer", "retnet"):
    a, b = training_flops(arch, big), assembled_training_flops(arch, big)
    print(f"{arch:>11}: {a:.3e} vs {b:.3e} (ratio {b / a:.3f})")

# Recurrent retention beats the parallel form once sequences get long.
for n_seq in (4, 10, 11, 40):
    par = forward_flops("retnet", "parallel", n_params=5000, n_seq=n_seq, d_attn=8)
    rec = forward_flops("retnet", "recurrent", n_params=5000, n_seq=n_seq, d_attn=8)
    print(f"n_seq {n_seq:2d}: parallel {par:.0f}, recurrent {rec:.0f}")

print("simplified MADE cost (M=10, S=441, D'=100, N=1000):", simplified_flops("made", 10, 14, 8, 441, 100, 1000))
