"""Pauli-string Hamiltonians: parsing, flip-pattern grouping and matrix elements.

Configurations are 0/1 arrays of length ``n``. The leftmost Pauli symbol of a
string acts on the leftmost entry of a configuration. Qubit ``2j`` holds the
spin-up occupancy of spatial orbital ``j`` and qubit ``2j + 1`` the spin-down
occupancy.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PAULI_SYMBOLS = "IXYZ"
# warn when a Hamiltonian has more than this many terms per n**4
TERM_WARNING_FACTOR = 10


class HamiltonianParseError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PauliString:
    ops: str
    coefficient: float

    def __post_init__(self):
        bad = [c for c in self.ops if c not in PAULI_SYMBOLS]
        if bad:
            raise ValueError(f"invalid Pauli symbol {bad[0]!r} in {self.ops!r}")
        if not math.isfinite(self.coefficient):
            raise ValueError(f"non-finite coefficient for {self.ops}")

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    @property
    def flip_mask(self) -> np.ndarray:
        return np.array([c in "XY" for c in self.ops], dtype=np.uint8)

    @property
    def phase_mask(self) -> np.ndarray:
        """Positions contributing a (-1)**bit sign (Z and Y)."""
        return np.array([c in "YZ" for c in self.ops], dtype=np.uint8)

    @property
    def n_y(self) -> int:
        return self.ops.count("Y")

    @property
    def is_diagonal(self) -> bool:
        return all(c in "IZ" for c in self.ops)

    @property
    def is_identity(self) -> bool:
        return all(c == "I" for c in self.ops)


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real linear combination of Pauli strings on ``n_qubits`` qubits.

    ``n_electrons`` may be ``None``, in which case no particle-number sector is
    imposed anywhere downstream.
    """

    n_qubits: int
    terms: tuple[PauliString, ...]
    n_electrons: int | None = None
    spin_multiplicity: int = 1
    fci_energy: float | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.n_electrons is not None and not 0 <= self.n_electrons <= self.n_qubits:
            raise ValueError(f"n_electrons={self.n_electrons} outside [0, {self.n_qubits}]")
        if self.spin_multiplicity < 1:
            raise ValueError("multiplicity must be positive")
        seen = set()
        for t in self.terms:
            if t.n_qubits != self.n_qubits:
                raise ValueError(f"term {t.ops} has length {t.n_qubits}, expected {self.n_qubits}")
            if t.ops in seen:
                raise ValueError(f"duplicate term {t.ops}")
            seen.add(t.ops)
        if len(self.terms) > TERM_WARNING_FACTOR * max(self.n_qubits, 2) ** 4:
            warnings.warn(f"{len(self.terms)} terms is unusually many for {self.n_qubits} qubits")

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[str, float] | PauliString], **kw):
        """Build a Hamiltonian, summing the coefficients of repeated strings."""
        merged: dict[str, float] = {}
        for t in terms:
            ops, c = (t.ops, t.coefficient) if isinstance(t, PauliString) else t
            merged[ops] = merged.get(ops, 0.0) + float(c)
        return cls(n_qubits, tuple(PauliString(o, c) for o, c in merged.items()), **kw)

    @property
    def identity_weight(self) -> float:
        for t in self.terms:
            if t.is_identity:
                return t.coefficient
        return 0.0

    def scaled(self, factor: float) -> "PauliHamiltonian":
        return PauliHamiltonian(
            self.n_qubits,
            tuple(PauliString(t.ops, factor * t.coefficient) for t in self.terms),
            self.n_electrons,
            self.spin_multiplicity,
            None if self.fci_energy is None else factor * self.fci_energy,
        )


@dataclass(frozen=True)
class FlipGroup:
    flip_mask: tuple[int, ...]
    member_term_indices: tuple[int, ...]
    terms: tuple[PauliString, ...] = field(repr=False, default=())


# --- parsing -----------------------------------------------------------------

_HEADERS = ("n_qubits", "n_electrons", "multiplicity", "fci")
_REQUIRED = ("n_qubits",)


def parse_hamiltonian(text: str) -> PauliHamiltonian:
    """Parse the plain-text Hamiltonian format.

    Header directives (``%n_qubits``, ``%n_electrons``, ``%multiplicity``,
    ``%fci``) come first and in that order; only ``%n_qubits`` is mandatory.
    Each following non-blank line is ``<coefficient> <pauli_string>``; ``#``
    starts a comment.
    """
    header: dict[str, float | int] = {}
    terms: dict[str, float] = {}
    last_header = -1
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("%"):
            if terms:
                raise HamiltonianParseError("header directive after terms", lineno)
            parts = line[1:].split()
            if len(parts) != 2 or parts[0] not in _HEADERS:
                raise HamiltonianParseError(f"malformed header {line!r}", lineno)
            key, value = parts
            pos = _HEADERS.index(key)
            if pos <= last_header:
                raise HamiltonianParseError(f"header %{key} out of order or repeated", lineno)
            last_header = pos
            try:
                header[key] = float(value) if key == "fci" else int(value)
            except ValueError:
                raise HamiltonianParseError(f"bad value {value!r} for %{key}", lineno) from None
            if key == "n_qubits":
                n = header[key]
            continue
        if n is None:
            raise HamiltonianParseError("term before %n_qubits header", lineno)
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianParseError(f"expected '<coefficient> <pauli_string>', got {line!r}", lineno)
        coef_s, ops = parts
        try:
            coef = float(coef_s)
        except ValueError:
            raise HamiltonianParseError(f"unparseable coefficient {coef_s!r}", lineno) from None
        if not math.isfinite(coef):
            raise HamiltonianParseError(f"non-finite coefficient {coef_s!r}", lineno)
        for c in ops:
            if c not in PAULI_SYMBOLS:
                raise HamiltonianParseError(f"invalid Pauli symbol {c!r}", lineno)
        if len(ops) != n:
            raise HamiltonianParseError(f"Pauli string length {len(ops)} != n_qubits {n}", lineno)
        terms[ops] = terms.get(ops, 0.0) + coef
    for key in _REQUIRED:
        if key not in header:
            raise HamiltonianParseError(f"missing %{key} header")
    try:
        return PauliHamiltonian(
            int(header["n_qubits"]),
            tuple(PauliString(o, c) for o, c in terms.items()),
            n_electrons=header.get("n_electrons"),
            spin_multiplicity=int(header.get("multiplicity", 1)),
            fci_energy=header.get("fci"),
        )
    except ValueError as exc:
        raise HamiltonianParseError(str(exc)) from None


def load_hamiltonian(path) -> PauliHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


def format_hamiltonian(h: PauliHamiltonian) -> str:
    lines = [f"%n_qubits {h.n_qubits}"]
    if h.n_electrons is not None:
        lines.append(f"%n_electrons {h.n_electrons}")
    lines.append(f"%multiplicity {h.spin_multiplicity}")
    if h.fci_energy is not None:
        lines.append(f"%fci {h.fci_energy!r}")
    lines += [f"{t.coefficient!r} {t.ops}" for t in h.terms]
    return "\n".join(lines) + "\n"


# --- flip groups and matrix elements -------------------------------------------


def group_flip_patterns(h: PauliHamiltonian) -> list[FlipGroup]:
    """Group the off-diagonal terms by the set of qubits they flip.

    Diagonal (I/Z only) terms are excluded; see :func:`diagonal_terms`.
    The groups come back sorted by mask so the order is reproducible.
    """
    buckets: dict[tuple[int, ...], list[int]] = {}
    for i, t in enumerate(h.terms):
        if t.is_diagonal:
            continue
        buckets.setdefault(tuple(int(b) for b in t.flip_mask), []).append(i)
    return [
        FlipGroup(mask, tuple(idx), tuple(h.terms[i] for i in idx))
        for mask, idx in sorted(buckets.items())
    ]


def diagonal_terms(h: PauliHamiltonian) -> list[PauliString]:
    return [t for t in h.terms if t.is_diagonal]


def _as_config(x, n: int | None = None) -> np.ndarray:
    if isinstance(x, str):
        x = [int(c) for c in x]
    x = np.asarray(x, dtype=np.uint8)
    if n is not None and x.shape[-1] != n:
        raise ValueError(f"configuration length {x.shape[-1]} != {n}")
    return x


def matrix_element(t: PauliString, x) -> tuple[np.ndarray, complex]:
    """Return ``(x', <x'|t|x>)`` for the unique ``x'`` connected to ``x``."""
    x = _as_config(x, t.n_qubits)
    sign = -1 if int(np.dot(t.phase_mask, x)) % 2 else 1
    amp = t.coefficient * sign * (1j) ** t.n_y
    return x ^ t.flip_mask, complex(amp)


def connected_elements(groups: Sequence[FlipGroup], diagonal_set: Sequence[PauliString], x):
    """Nonzero candidates of row ``x``: the diagonal entry first, then one per group.

    Entries whose amplitudes cancel to exactly zero are kept.
    """
    x = _as_config(x)
    diag = 0.0 + 0.0j
    for t in diagonal_set:
        diag += matrix_element(t, x)[1]
    out = [(x.copy(), diag)]
    for g in groups:
        amp = 0.0 + 0.0j
        for t in g.terms:
            amp += matrix_element(t, x)[1]
        out.append((x ^ np.asarray(g.flip_mask, dtype=np.uint8), amp))
    return out


class LocalEnergyPlan:
    """Vectorised form of the flip groups used for batched row evaluation.

    ``row_amplitudes(X)`` returns the diagonal amplitudes ``(B,)`` and the
    per-group amplitudes ``(B, M)`` for a batch of configurations.
    """

    def __init__(self, h: PauliHamiltonian):
        self.n_qubits = h.n_qubits
        self.groups = group_flip_patterns(h)
        diag = diagonal_terms(h)
        self.flip_masks = np.array([g.flip_mask for g in self.groups], dtype=np.uint8).reshape(
            len(self.groups), h.n_qubits
        )
        self._diag_phase = np.array([t.phase_mask for t in diag], dtype=np.int64).reshape(-1, h.n_qubits)
        self._diag_coef = np.array([t.coefficient for t in diag], dtype=float)
        off = [(gi, t) for gi, g in enumerate(self.groups) for t in g.terms]
        self._off_phase = np.array([t.phase_mask for _, t in off], dtype=np.int64).reshape(-1, h.n_qubits)
        self._off_coef = np.array([t.coefficient * (1j) ** t.n_y for _, t in off], dtype=complex)
        assign = np.zeros((len(off), len(self.groups)))
        for k, (gi, _) in enumerate(off):
            assign[k, gi] = 1.0
        self._assign = assign

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def row_amplitudes(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        dsign = 1.0 - 2.0 * ((X @ self._diag_phase.T) % 2)
        diag = dsign @ self._diag_coef
        osign = 1.0 - 2.0 * ((X @ self._off_phase.T) % 2)
        off = (osign * self._off_coef) @ self._assign
        return diag.astype(complex), off

    def connected(self, X: np.ndarray) -> np.ndarray:
        """Flipped configurations, shape ``(B, M, n)``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        return X[:, None, :] ^ self.flip_masks[None, :, :]


# --- particle-number sectors ---------------------------------------------------


def spin_counts(n_electrons: int, multiplicity: int = 1, two_sz: int | None = None) -> tuple[int, int]:
    """Split an electron count into ``(n_up, n_down)``.

    By default the projection is the highest-weight one (``2 S_z = multiplicity
    - 1``), putting the unpaired electrons in the up sector.
    """
    if two_sz is None:
        two_sz = multiplicity - 1
    if abs(two_sz) > multiplicity - 1 or (multiplicity - 1 - two_sz) % 2:
        raise ValueError(f"2*Sz={two_sz} incompatible with multiplicity {multiplicity}")
    if (n_electrons + two_sz) % 2 or two_sz > n_electrons:
        raise ValueError(f"{n_electrons} electrons inconsistent with multiplicity {multiplicity}")
    return (n_electrons + two_sz) // 2, (n_electrons - two_sz) // 2


def search_space_size(
    n: int, n_electrons: int | None, spin_multiplicity: int = 1, two_sz: int | None = None
) -> int:
    """Number of Slater determinants with the requested electron counts.

    ``n_electrons=None`` means no constraint (``2**n``). For the default
    projection a triplet gets ``C(n/2, N/2+1) * C(n/2, N/2-1)``; pass
    ``two_sz=0`` to count the balanced sector instead.
    """
    if n_electrons is None:
        return 2**n
    if n % 2:
        raise ValueError("search space size needs an even number of spin-orbitals")
    n_up, n_down = spin_counts(n_electrons, spin_multiplicity, two_sz)
    half = n // 2
    if n_up > half or n_down > half:
        raise ValueError(f"{n_electrons} electrons do not fit in {half} spatial orbitals")
    return math.comb(half, n_up) * math.comb(half, n_down)


def bits(s: str) -> np.ndarray:
    """``bits("0110") -> array([0, 1, 1, 0], dtype=uint8)``"""
    if not re.fullmatch(r"[01]+", s):
        raise ValueError(f"not a bit string: {s!r}")
    return np.array([int(c) for c in s], dtype=np.uint8)


def bitstring(x) -> str:
    return "".join(str(int(b)) for b in np.asarray(x).ravel())


def sector_basis(n: int, sector: tuple[int, int] | None) -> np.ndarray:
    """All configurations with ``sector = (n_up, n_down)`` electrons, lexicographic order.

    ``sector=None`` enumerates the full ``2**n`` basis.
    """
    idx = np.arange(2**n, dtype=np.int64)
    X = ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
    if sector is None:
        return X
    keep = (X[:, 0::2].sum(1) == sector[0]) & (X[:, 1::2].sum(1) == sector[1])
    return X[keep]


def config_index(X) -> np.ndarray:
    """Integer label of each configuration (leftmost bit most significant)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    return X @ (1 << np.arange(X.shape[1] - 1, -1, -1, dtype=np.int64))
