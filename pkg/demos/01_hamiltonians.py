"""
Pauli Hamiltonians and exact references
=======================================

Load the shipped H2 (STO-3G) Hamiltonian, look at its flip-group
structure, and diagonalise it inside the two-electron singlet sector.
"""

from importlib import resources

import numpy as np

from nqs_scaling.oracle import build_operator, ground_energy, spectrum
from nqs_scaling.pauli import (
    bits,
    bitstring,
    connected_elements,
    diagonal_terms,
    group_flip_patterns,
    load_hamiltonian,
    search_space_size,
)

path = resources.files("nqs_scaling") / "data" / "h2_sto3g.ham"
h = load_hamiltonian(path)
print(f"{h.n_qubits} qubits, {len(h.terms)} Pauli terms, {h.n_electrons} electrons")

# Terms sharing an X/Y pattern flip the same bits, so each group costs one
# amplitude evaluation per local energy.
groups = group_flip_patterns(h)
print(f"M = {len(groups)} flip groups, {len(diagonal_terms(h))} diagonal terms")
for g in groups:
    print("  mask", bitstring(g.flip_mask), "holds", len(g.terms), "terms")

# Row of H seen from the Hartree-Fock determinant (both electrons in orbital 0).
hf = bits("1100")
for x, amp in connected_elements(groups, diagonal_terms(h), hf):
    print(f"  <{bitstring(x)}|H|1100> = {amp.real:+.6f}")

# Only determinants with one up and one down electron matter.
print("search space S =", search_space_size(4, 2))
op = build_operator(h, restrict_to_sector=True)
print("sector basis:", [bitstring(x) for x in op.basis])
print("sector spectrum:", np.round(spectrum(op), 6))

e0 = ground_energy(h)
print(f"ground energy {e0:.10f} Ha, file header {h.fci_energy:.10f} Ha")

# Larger molecules only need the counting formula.
for name, n, ne in [("H2O", 14, 10), ("N2", 20, 14), ("Li2O", 30, 14)]:
    print(f"{name:>5}: S = {search_space_size(n, ne):,}")
