"""Symplectic representation of the n-qubit Pauli group.

A :class:`PauliOperator` stores its X and Z components as bit masks packed
into Python integers (bit ``j`` is qubit ``j``, qubit 0 being the leftmost
character of the text form and the most significant tensor factor of the
matrix).  The operator it denotes is

    i**phase * sigma(x_0, z_0) (x) ... (x) sigma(x_{n-1}, z_{n-1})

with sigma(0,0)=I, sigma(1,0)=X, sigma(0,1)=Z and sigma(1,1)=Y=iXZ, so every
phase-0 operator is Hermitian.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

MATRIX_QUBIT_CAP = 12

_LABELS = "IXZY"  # indexed by x + 2*z
_PHASE_TOKENS = {"+": 0, "+i": 1, "-": 2, "-i": 3}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PHASE_VALUES = (1, 1j, -1, -1j)


@dataclass(frozen=True, eq=True)
class PauliOperator:
    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a Pauli operator needs at least one qubit")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"bit masks do not fit in {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_bits(cls, x_bits, z_bits, phase=0) -> "PauliOperator":
        x_bits, z_bits = list(x_bits), list(z_bits)
        if len(x_bits) != len(z_bits):
            raise ValueError("x_bits and z_bits must have the same length")
        x = sum(int(b) << j for j, b in enumerate(x_bits))
        z = sum(int(b) << j for j, b in enumerate(z_bits))
        return cls(len(x_bits), x, z, phase)

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, label: str) -> "PauliOperator":
        """The operator ``label`` (one of I, X, Y, Z) on ``qubit`` of ``n``."""
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for n={n}")
        code = _LABELS.index(label.upper())
        return cls(n, (code & 1) << qubit, (code >> 1) << qubit, 0)

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        """Parse e.g. ``"XIZ"``, ``"-iZXXZI"`` or ``"+YY"``."""
        text = text.strip()
        phase = 0
        for token in ("+i", "-i", "+", "-"):
            if text.startswith(token):
                phase = _PHASE_TOKENS[token]
                text = text[len(token):]
                break
        if not text:
            raise ValueError("empty Pauli string")
        x = z = 0
        for j, ch in enumerate(text.upper()):
            if ch not in _LABELS:
                raise ValueError(f"invalid Pauli character {ch!r}")
            code = _LABELS.index(ch)
            x |= (code & 1) << j
            z |= (code >> 1) << j
        return cls(len(text), x, z, phase)

    @property
    def x_bits(self) -> tuple[int, ...]:
        return tuple((self.x >> j) & 1 for j in range(self.n))

    @property
    def z_bits(self) -> tuple[int, ...]:
        return tuple((self.z >> j) & 1 for j in range(self.n))

    def labels(self) -> str:
        return "".join(
            _LABELS[((self.x >> j) & 1) | (((self.z >> j) & 1) << 1)] for j in range(self.n)
        )

    def to_string(self, explicit_sign: bool = False) -> str:
        if self.phase == 0 and not explicit_sign:
            return self.labels()
        return _PHASE_TEXT[self.phase] + self.labels()

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"PauliOperator({self.to_string()!r})"

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return pauli_mul(self, other)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def unsigned(self) -> "PauliOperator":
        """Same operator with the phase dropped."""
        return PauliOperator(self.n, self.x, self.z, 0)

    def with_phase(self, phase: int) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, phase)

    def inverse(self) -> "PauliOperator":
        # sigma's square to I, so only the scalar needs inverting
        return PauliOperator(self.n, self.x, self.z, -self.phase)

    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def to_matrix(self, cap: int = MATRIX_QUBIT_CAP) -> np.ndarray:
        return pauli_to_matrix(self, cap)


def _check_dims(a: PauliOperator, b: PauliOperator) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n} qubits")


def pauli_mul(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Exact product ``a @ b`` with the phase tracked mod 4."""
    _check_dims(a, b)
    x, z = a.x ^ b.x, a.z ^ b.z
    # In X^x Z^z form the ordering phase is (-1)^{z_a . x_b}; the Y-count terms
    # convert between that form and the Hermitian sigma form.
    phase = (
        a.phase
        + b.phase
        + (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        + 2 * (a.z & b.x).bit_count()
        - (x & z).bit_count()
    )
    return PauliOperator(a.n, x, z, phase)


def commutes(a: PauliOperator, b: PauliOperator) -> bool:
    _check_dims(a, b)
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0


def weight(a: PauliOperator) -> int:
    return a.weight


def pauli_to_matrix(a: PauliOperator, cap: int = MATRIX_QUBIT_CAP) -> np.ndarray:
    if a.n > cap:
        raise ValueError(f"refusing to build a dense matrix for {a.n} > {cap} qubits")
    factors = [_SINGLE[ch] for ch in a.labels()]
    return _PHASE_VALUES[a.phase] * reduce(np.kron, factors)


def enumerate_paulis(n: int, max_weight: int | None = None) -> list[PauliOperator]:
    """All phase-0 Paulis on ``n`` qubits of weight at most ``max_weight``.

    The order is lexicographic in the text form with I < X < Y < Z.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if max_weight is None or max_weight >= n:
        return [PauliOperator.from_string("".join(s)) for s in itertools.product("IXYZ", repeat=n)]
    out = []
    for w in range(max_weight + 1):
        for support in itertools.combinations(range(n), w):
            for letters in itertools.product("XYZ", repeat=w):
                chars = ["I"] * n
                for q, ch in zip(support, letters):
                    chars[q] = ch
                out.append("".join(chars))
    return [PauliOperator.from_string(s) for s in sorted(out)]


def paulis_by_weight(n: int, max_weight: int | None = None) -> list[PauliOperator]:
    """Like :func:`enumerate_paulis` but ordered by weight first."""
    return sorted(enumerate_paulis(n, max_weight), key=lambda g: (g.weight, g.labels().translate(_LEX)))


# I < X < Y < Z for sorting
_LEX = str.maketrans("IXYZ", "0123")
