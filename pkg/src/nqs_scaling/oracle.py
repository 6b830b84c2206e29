"""Exact reference quantities: sparse Hamiltonian matrices, ground states, expectations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp

from .pauli import PauliHamiltonian, config_index, sector_basis, spin_counts

MAX_QUBITS_FULL = 14
MAX_QUBITS_SECTOR = 24
MAX_NONZEROS = 50_000_000
DENSE_LIMIT = 2048


class OperatorTooLarge(ValueError):
    pass


class NotConverged(RuntimeError):
    pass


@dataclass
class SparseOperator:
    matrix: sp.csr_matrix
    basis: np.ndarray  # (dim, n) configurations labelling rows/columns
    n_qubits: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def hamiltonian_sector(h: PauliHamiltonian):
    if h.n_electrons is None:
        return None
    return spin_counts(h.n_electrons, h.spin_multiplicity)


def build_operator(h: PauliHamiltonian, restrict_to_sector: bool = False) -> SparseOperator:
    """Assemble ``H`` as a CSR matrix over the full or sector-restricted basis.

    Restricted rows keep only columns inside the sector.
    """
    n = h.n_qubits
    sector = hamiltonian_sector(h) if restrict_to_sector else None
    limit = MAX_QUBITS_SECTOR if sector is not None else MAX_QUBITS_FULL
    if n > limit:
        raise OperatorTooLarge(f"{n} qubits exceeds the {limit}-qubit limit for this operator")
    basis = sector_basis(n, sector)
    dim = len(basis)
    if dim * max(len(h.terms), 1) > MAX_NONZEROS:
        raise OperatorTooLarge(f"dimension {dim} x {len(h.terms)} terms exceeds the memory budget")
    labels = config_index(basis)
    if sector is not None:
        lookup = np.full(2**n, -1, dtype=np.int64)
        lookup[labels] = np.arange(dim)
    src = np.arange(dim)
    Xi = basis.astype(np.int64)
    rows, cols, vals = [], [], []
    for t in h.terms:
        sign = 1.0 - 2.0 * ((Xi @ t.phase_mask.astype(np.int64)) % 2)
        amp = t.coefficient * sign * (1j) ** t.n_y
        target = config_index(basis ^ t.flip_mask)
        if sector is not None:
            target = lookup[target]
        keep = target >= 0
        # <x'|t|x> lands in row x' = x ^ flip, column x
        rows.append(target[keep])
        cols.append(src[keep])
        vals.append(amp[keep])
    if rows:
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        ).tocsr()
    else:
        mat = sp.csr_matrix((dim, dim), dtype=complex)
    mat.sum_duplicates()
    return SparseOperator(mat, basis, n)


def lanczos_ground_state(
    matvec, dim: int, tol: float = 1e-9, max_iter: int = 5000, krylov: int = 80, seed: int = 0
) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a Hermitian operator by restarted Lanczos.

    Every Krylov vector is reorthogonalised against all previous ones. The
    iteration restarts from the current Ritz vector until the residual
    ``||Hv - Ev||`` drops below ``tol`` or ``max_iter`` matvecs are spent.
    """
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    used = 0
    m = min(krylov, dim)
    while used < max_iter:
        V = np.zeros((m, dim), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        V[0] = v
        k = m
        for j in range(m):
            w = matvec(V[j])
            used += 1
            alpha[j] = np.vdot(V[j], w).real
            w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
            w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
            if j + 1 == m:
                break
            b = np.linalg.norm(w)
            if b < 1e-14:
                k = j + 1
                break
            beta[j] = b
            V[j + 1] = w / b
        T = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
        evals, evecs = np.linalg.eigh(T)
        v = evecs[:, 0] @ V[:k]
        v /= np.linalg.norm(v)
        hv = matvec(v)
        used += 1
        energy = np.vdot(v, hv).real
        if np.linalg.norm(hv - energy * v) <= tol:
            return float(energy), v
    raise NotConverged(f"Lanczos did not reach residual {tol} in {max_iter} iterations")


def ground_state(op: SparseOperator, tol: float = 1e-9, max_iter: int = 5000) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector of ``op``."""
    if op.dimension < DENSE_LIMIT:
        evals, evecs = np.linalg.eigh(op.toarray())
        return float(evals[0]), evecs[:, 0]
    return lanczos_ground_state(op.matvec, op.dimension, tol=tol, max_iter=max_iter)


def spectrum(op: SparseOperator) -> np.ndarray:
    if op.dimension >= DENSE_LIMIT:
        raise OperatorTooLarge("full spectra are limited to dense-sized operators")
    return np.linalg.eigvalsh(op.toarray())


def write_spectrum_csv(path, energies) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "energy"])
        for i, e in enumerate(energies):
            w.writerow([i, repr(float(e))])


def ground_energy(h: PauliHamiltonian) -> float:
    """Ground energy within the Hamiltonian's particle-number sector (if any)."""
    return ground_state(build_operator(h, restrict_to_sector=h.n_electrons is not None))[0]


def reference_energy(h: PauliHamiltonian, max_qubits: int = 20) -> float | None:
    """FCI energy from the file, else the exact sector ground energy when affordable."""
    if h.fci_energy is not None:
        return h.fci_energy
    if h.n_qubits <= max_qubits:
        try:
            return ground_energy(h)
        except OperatorTooLarge:
            return None
    return None


def state_vector(state, basis: np.ndarray) -> np.ndarray:
    """Amplitudes ``<x|psi>`` over ``basis``; infeasible rows get zero."""
    psi = np.zeros(len(basis), dtype=complex)
    ok = state.is_feasible(basis)
    if ok.any():
        psi[ok] = np.exp(state.log_amplitude(basis[ok]))
    return psi


def exact_expectation(state, h: PauliHamiltonian, max_qubits: int = 12) -> tuple[float, float]:
    """``(<H>, <H^2> - <H>^2)`` by full enumeration; ``H^2`` is never formed."""
    if h.n_qubits > max_qubits:
        raise OperatorTooLarge(f"exact expectation limited to {max_qubits} qubits")
    op = build_operator(h)
    psi = state_vector(state, op.basis)
    hpsi = op.matvec(psi)
    norm = np.vdot(psi, psi).real
    energy = np.vdot(psi, hpsi).real / norm
    second = np.vdot(hpsi, hpsi).real / norm
    return float(energy), float(max(second - energy**2, 0.0))


class LookupAnsatz:
    """Fixed normalised state given as a vector over a basis.

    Stands in for an :class:`~nqs_scaling.ansatz.AnsatzState` wherever only
    amplitudes are needed (local energies, exact expectations).
    """

    def __init__(self, basis: np.ndarray, amplitudes: np.ndarray, sector=None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        self.basis = np.asarray(basis, dtype=np.uint8)
        self.amplitudes = amplitudes / np.linalg.norm(amplitudes)
        self.config = SimpleNamespace(n_qubits=self.basis.shape[1])
        self.sector = sector
        self._index = {int(k): i for i, k in enumerate(config_index(self.basis))}

    def is_feasible(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        if self.sector is None:
            return np.ones(len(X), dtype=bool)
        return (X[:, 0::2].sum(1) == self.sector[0]) & (X[:, 1::2].sum(1) == self.sector[1])

    def log_amplitude(self, X, check: bool = True) -> np.ndarray:
        amps = np.array([self.amplitudes[self._index[int(k)]] for k in config_index(X)])
        with np.errstate(divide="ignore"):
            return np.log(np.abs(amps)) + 1j * np.angle(amps)

    @classmethod
    def ground_state_of(cls, h: PauliHamiltonian) -> tuple["LookupAnsatz", float]:
        op = build_operator(h, restrict_to_sector=h.n_electrons is not None)
        energy, vec = ground_state(op)
        return cls(op.basis, vec, hamiltonian_sector(h)), energy
