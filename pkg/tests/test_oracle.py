import numpy as np
import pytest

from nqs_scaling.ansatz import build, randomize
from nqs_scaling.oracle import (
    LookupAnsatz,
    NotConverged,
    OperatorTooLarge,
    build_operator,
    exact_expectation,
    ground_energy,
    ground_state,
    lanczos_ground_state,
    reference_energy,
    spectrum,
    write_spectrum_csv,
)
from nqs_scaling.pauli import PauliHamiltonian, load_hamiltonian

from conftest import random_hamiltonian, random_number_conserving, single

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def kron_matrix(h: PauliHamiltonian) -> np.ndarray:
    """Dense matrix with qubit 0 as the most significant bit."""
    out = np.zeros((2**h.n_qubits,) * 2, dtype=complex)
    for t in h.terms:
        m = np.array([[1.0]])
        for c in t.ops:
            m = np.kron(m, PAULI[c])
        out += t.coefficient * m
    return out


def test_z_and_x():
    assert np.allclose(build_operator(single("Z")).toarray(), np.diag([1, -1]))
    assert np.allclose(build_operator(single("X")).toarray(), [[0, 1], [1, 0]])


@pytest.mark.parametrize("seed", range(3))
def test_matches_kronecker_construction(seed):
    h = random_hamiltonian(4, 20, seed)
    assert np.allclose(build_operator(h).toarray(), kron_matrix(h), atol=1e-14)


def test_hermitian():
    m = build_operator(random_hamiltonian(5, 40, 7)).toarray()
    assert np.allclose(m, m.conj().T, atol=1e-12)


def test_ground_state_trivial():
    e, v = ground_state(build_operator(single("Z")))
    assert e == pytest.approx(-1) and abs(v[1]) == pytest.approx(1)
    e, v = ground_state(build_operator(single("X")))
    assert e == pytest.approx(-1)
    assert abs(np.vdot(v, np.array([1, -1]) / np.sqrt(2))) == pytest.approx(1)


def test_shipped_h2_matches_header(h2_path):
    h = load_hamiltonian(h2_path)
    assert ground_energy(h) == pytest.approx(h.fci_energy, abs=1e-6)


def test_lanczos_matches_dense():
    h = random_hamiltonian(11, 60, 3)
    op = build_operator(h)
    e_lanczos, v = lanczos_ground_state(op.matvec, op.dimension)
    e_dense = np.linalg.eigvalsh(op.toarray())[0]
    assert e_lanczos == pytest.approx(e_dense, abs=1e-8)
    assert np.linalg.norm(op.matvec(v) - e_lanczos * v) <= 1e-9


def test_lanczos_iteration_cap():
    op = build_operator(random_hamiltonian(11, 60, 3))
    with pytest.raises(NotConverged):
        lanczos_ground_state(op.matvec, op.dimension, max_iter=3, krylov=2)


def test_sector_restriction_commutes():
    h = random_number_conserving(8, seed=5, n_electrons=4)
    restricted = ground_energy(h)
    op = build_operator(h)
    X = op.basis
    in_sector = (X[:, 0::2].sum(1) == 2) & (X[:, 1::2].sum(1) == 2)
    dense = op.toarray()[np.ix_(in_sector, in_sector)]
    assert restricted == pytest.approx(np.linalg.eigvalsh(dense)[0], abs=1e-10)


def test_size_limits():
    big = PauliHamiltonian.from_terms(30, [("Z" * 30, 1.0)], n_electrons=14)
    with pytest.raises(OperatorTooLarge) as err:
        build_operator(big, restrict_to_sector=True)
    assert "24" in str(err.value)
    with pytest.raises(OperatorTooLarge):
        build_operator(PauliHamiltonian.from_terms(16, [("Z" * 16, 1.0)]))


def test_spectrum_csv(tmp_path):
    path = tmp_path / "spectrum.csv"
    write_spectrum_csv(path, spectrum(build_operator(single("Z"))))
    assert path.read_text().splitlines() == ["index,energy", "0,-1.0", "1,1.0"]


def test_reference_energy_prefers_header(h2_path):
    h = load_hamiltonian(h2_path)
    assert reference_energy(h) == h.fci_energy
    assert reference_energy(single("Z")) == pytest.approx(-1.0)


def test_eigenstate_expectation():
    h = random_number_conserving(6, seed=1, n_electrons=2)
    look, e0 = LookupAnsatz.ground_state_of(h)
    e, var = exact_expectation(look, h)
    assert e == pytest.approx(e0, abs=1e-10)
    assert var < 1e-10


def test_uniform_state_on_z():
    look = LookupAnsatz(np.array([[0], [1]], dtype=np.uint8), np.ones(2))
    e, var = exact_expectation(look, single("Z"))
    assert e == pytest.approx(0, abs=1e-15) and var == pytest.approx(1)


@pytest.mark.parametrize("arch", ["made", "transformer", "retnet"])
def test_rayleigh_ritz(arch):
    h = random_number_conserving(6, seed=2, n_electrons=3)
    h = PauliHamiltonian(h.n_qubits, h.terms, 3, 2)
    e0 = ground_energy(h)
    for seed in range(3):
        state = randomize(build(arch, 6, n_electrons=3, multiplicity=2, d_model=16), seed, 0.5)
        assert exact_expectation(state, h)[0] >= e0 - 1e-10


def test_exact_expectation_limit():
    with pytest.raises(OperatorTooLarge):
        exact_expectation(build("made", 14), PauliHamiltonian.from_terms(14, [("Z" * 14, 1.0)]))
