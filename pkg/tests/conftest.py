from importlib import resources

import numpy as np
import pytest

from nqs_scaling.pauli import PauliHamiltonian, PauliString


def data_path(name: str) -> str:
    return str(resources.files("nqs_scaling") / "data" / name)


@pytest.fixture
def h2_path():
    return data_path("h2_sto3g.ham")


@pytest.fixture
def toy_path():
    return data_path("toy_z.ham")


def hopping_string(n: int, i: int, j: int, a: str, b: str) -> str:
    """``a_i Z...Z b_j`` with identities elsewhere (Jordan-Wigner hop)."""
    ops = ["I"] * n
    ops[i], ops[j] = a, b
    for k in range(i + 1, j):
        ops[k] = "Z"
    return "".join(ops)


def random_number_conserving(n: int, seed: int, n_electrons: int | None = None, n_diag: int = 6) -> PauliHamiltonian:
    """Random Hamiltonian commuting with the up and down particle counts."""
    rng = np.random.default_rng(seed)
    terms = [("I" * n, rng.normal())]
    for _ in range(n_diag):
        mask = rng.random(n) < 0.5
        terms.append(("".join("Z" if m else "I" for m in mask), rng.normal()))
    for i in range(n):
        for j in range(i + 2, n, 2):  # same spin species
            c = rng.normal()
            terms.append((hopping_string(n, i, j, "X", "X"), c))
            terms.append((hopping_string(n, i, j, "Y", "Y"), c))
    return PauliHamiltonian.from_terms(n, terms, n_electrons=n_electrons)


def random_hamiltonian(n: int, n_terms: int, seed: int) -> PauliHamiltonian:
    rng = np.random.default_rng(seed)
    terms = [("".join(rng.choice(list("IXYZ"), n)), rng.normal()) for _ in range(n_terms)]
    return PauliHamiltonian.from_terms(n, terms)


def single(ops: str, c: float = 1.0) -> PauliHamiltonian:
    return PauliHamiltonian(len(ops), (PauliString(ops, c),))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in mod.TITLES.items():
        parts = mod.RESULTS.get(n)
        if not parts:
            continue
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2} {status}  {title}")
        for label, ok, detail in parts:
            terminalreporter.write_line(f"      {'ok  ' if ok else 'miss'} {label}: {detail}")
