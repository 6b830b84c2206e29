"""
Variational Monte Carlo on H2
=============================

Train a small transformer on the shipped H2 Hamiltonian with the default
schedule (cosine learning rate with warm-up, geometric sample counts,
batch reuse early on) and report the run's metrics.
"""

from importlib import resources

from nqs_scaling.ansatz import build
from nqs_scaling.oracle import ground_energy
from nqs_scaling.pauli import load_hamiltonian
from nqs_scaling.vmc import TrainConfig, cosine_lr, draw_count, train

h = load_hamiltonian(resources.files("nqs_scaling") / "data" / "h2_sto3g.ham")
cfg = TrainConfig(steps=2000, max_unique=16, seed=0)

for step in (0, 80, 500, 1000, 1999):
    print(f"step {step:4d}: lr {cosine_lr(step, cfg):.2e}, draws {draw_count(step, cfg):.1e}")

history = []
state = build("transformer", 4, n_electrons=2, d_model=16, n_blocks=1)
result = train(h, state.config, cfg, callback=lambda step, est: history.append(est.energy))
e0 = ground_energy(h)
for step in range(0, cfg.steps, 250):
    print(f"step {step:4d}: E - E0 = {history[step] - e0:.3e}")

r = result.record
print(f"final energy {r.energy:.8f} Ha, |E - E0| = {r.abs_error:.2e} Ha (chemical accuracy 1.6e-3)")
print(f"V-score {r.vscore:.2e}, N = {r.N_k:.3f}k, B_mean = {r.B_mean:.2f}, SF = {r.SF:.2f}, D' = {r.D_prime:.0f}")
print(f"FLOPs: closed form {r.flops_table1:.3e}, simplified {r.flops_simplified:.3e}")
