"""Stabilizer codes, syndromes and the coset decomposition of Pauli errors.

Every Pauli ``g`` on the physical qubits is written uniquely as

    g = i**r * A_p * W_q * prod_i g_i**s_i

where ``g_i`` are the stabilizer generators, ``W_q`` is the canonical
representative of syndrome ``q`` (a product of destabilizers) and ``A_p`` is
the logical Pauli with index ``p``.  Bits ``2j`` and ``2j+1`` of ``p`` are the
exponents of the logical X and Z of encoded qubit ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .pauli import (
    MATRIX_QUBIT_CAP,
    PauliOperator,
    commutes,
    paulis_by_weight,
    pauli_mul,
)

ATOL = 1e-12


@dataclass(frozen=True)
class CosetIndex:
    r: int
    p: int
    q: int
    s_exponents: tuple[int, ...]


@dataclass(frozen=True)
class KnillLaflammeResult:
    holds: bool
    worst_pair: tuple[int, int] | None
    residual: float

    def __bool__(self) -> bool:
        return self.holds


def _product(paulis: Sequence[PauliOperator], n: int) -> PauliOperator:
    return reduce(pauli_mul, paulis, PauliOperator.identity(n))


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    generators: tuple[PauliOperator, ...]
    logical_x: tuple[PauliOperator, ...]
    logical_z: tuple[PauliOperator, ...]
    destabilizers: tuple[PauliOperator, ...]
    name: str = ""
    _logicals: tuple[PauliOperator, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_logicals", tuple(self._build_logicals()))

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def k(self) -> int:
        return len(self.logical_x)

    @property
    def num_syndromes(self) -> int:
        return 1 << (self.n - self.k)

    @property
    def num_logicals(self) -> int:
        return 1 << (2 * self.k)

    def _build_logicals(self):
        for p in range(self.num_logicals):
            factors = []
            n_y = 0
            for j in range(self.k):
                xj, zj = (p >> (2 * j)) & 1, (p >> (2 * j + 1)) & 1
                if xj:
                    factors.append(self.logical_x[j])
                if zj:
                    factors.append(self.logical_z[j])
                n_y += xj & zj
            # i * Xbar Zbar is the (Hermitian) logical Y
            op = _product(factors, self.n)
            yield op.with_phase(op.phase + n_y)

    def logical(self, p: int) -> PauliOperator:
        """The logical Pauli A_p."""
        if not 0 <= p < self.num_logicals:
            raise ValueError(f"logical index {p} out of range")
        return self._logicals[p]

    def representative_w(self, q: int) -> PauliOperator:
        """Canonical syndrome representative W_q = prod t_i**q_i."""
        if not 0 <= q < self.num_syndromes:
            raise ValueError(f"syndrome {q} out of range")
        return _product([t for i, t in enumerate(self.destabilizers) if (q >> i) & 1], self.n)

    def stabilizer_element(self, s_exponents: Sequence[int]) -> PauliOperator:
        return _product([g for g, s in zip(self.generators, s_exponents) if s], self.n)

    def syndrome(self, g: PauliOperator) -> int:
        if g.n != self.n:
            raise ValueError(f"dimension mismatch: code has {self.n} qubits, operator {g.n}")
        return sum((not commutes(g, gi)) << i for i, gi in enumerate(self.generators))

    def decompose(self, g: PauliOperator) -> CosetIndex:
        q = self.syndrome(g)
        w = self.representative_w(q)
        normalizer_part = pauli_mul(g, w.inverse())
        p = 0
        for j in range(self.k):
            # Xbar_j is detected by Zbar_j and vice versa
            if not commutes(normalizer_part, self.logical_z[j]):
                p |= 1 << (2 * j)
            if not commutes(normalizer_part, self.logical_x[j]):
                p |= 1 << (2 * j + 1)
        s = tuple(int(not commutes(normalizer_part, t)) for t in self.destabilizers)
        recon = pauli_mul(pauli_mul(self.logical(p), w), self.stabilizer_element(s))
        if (recon.x, recon.z) != (g.x, g.z):
            raise RuntimeError(f"coset decomposition failed for {g}")
        return CosetIndex(r=(g.phase - recon.phase) % 4, p=p, q=q, s_exponents=s)

    def reconstruct(self, idx: CosetIndex) -> PauliOperator:
        op = pauli_mul(
            pauli_mul(self.logical(idx.p), self.representative_w(idx.q)),
            self.stabilizer_element(idx.s_exponents),
        )
        return op.with_phase(op.phase + idx.r)

    @cached_property
    def coset_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(p, q) of every phase-0 Pauli, indexed by ``x + (z << n)``.

        Used to reduce Pauli channels without re-running :meth:`decompose`.
        """
        n = self.n
        size = 1 << (2 * n)
        ps = np.empty(size, dtype=np.int64)
        qs = np.empty(size, dtype=np.int64)
        mask = (1 << n) - 1
        for index in range(size):
            idx = self.decompose(PauliOperator(n, index & mask, index >> n))
            ps[index], qs[index] = idx.p, idx.q
        return ps, qs

    def projector(self) -> np.ndarray:
        """P_C = prod (I + g_i)/2."""
        dim = 1 << self.n
        proj = np.eye(dim, dtype=complex)
        for g in self.generators:
            proj = proj @ (np.eye(dim) + g.to_matrix()) / 2
        return proj

    @cached_property
    def encoder(self) -> np.ndarray:
        return encoder_isometry(self)

    def __repr__(self) -> str:
        return f"StabilizerCode(name={self.name!r}, n={self.n}, k={self.k})"


def _find_destabilizers(generators, logicals) -> tuple[PauliOperator, ...]:
    n = generators[0].n
    candidates = paulis_by_weight(n)
    out = []
    for i, gi in enumerate(generators):
        others = [g for j, g in enumerate(generators) if j != i] + list(logicals)
        for t in candidates:
            if not commutes(t, gi) and all(commutes(t, o) for o in others):
                out.append(t)
                break
        else:
            raise ValueError(f"no destabilizer found for generator {gi}")
    return tuple(out)


def _independent(generators: Sequence[PauliOperator]) -> bool:
    # rank over GF(2) of the symplectic rows
    n = generators[0].n
    rows = [g.x | (g.z << n) for g in generators]
    rank = 0
    for bit in range(2 * n):
        pivot = next((i for i in range(rank, len(rows)) if (rows[i] >> bit) & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and (rows[i] >> bit) & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank == len(generators)


def build_code(generators, logical_x, logical_z, name: str = "") -> StabilizerCode:
    """Validate generators and logicals and assemble a :class:`StabilizerCode`.

    Arguments may be :class:`PauliOperator` instances or Pauli strings.
    """
    parse = lambda ops: tuple(PauliOperator.from_string(o) if isinstance(o, str) else o for o in ops)
    gens, lx, lz = parse(generators), parse(logical_x), parse(logical_z)
    if not gens:
        raise ValueError("at least one generator is required")
    n = gens[0].n
    if any(op.n != n for op in gens + lx + lz):
        raise ValueError("all operators must act on the same number of qubits")
    k = len(lx)
    if len(lz) != k or len(gens) != n - k:
        raise ValueError(f"expected n-k={n - k} generators and {k} logical X/Z pairs")
    for g in gens:
        if g.phase != 0:
            raise ValueError(f"generator {g} must have phase +1")
    for i, a in enumerate(gens):
        for b in gens[i + 1:]:
            if not commutes(a, b):
                raise ValueError(f"generators {a} and {b} anticommute")
    if not _independent(gens):
        raise ValueError("generators are not independent")
    for logical in lx + lz:
        if not logical.is_hermitian():
            raise ValueError(f"logical operator {logical} is not Hermitian")
        for g in gens:
            if not commutes(logical, g):
                raise ValueError(f"logical {logical} anticommutes with generator {g}")
    for i in range(k):
        for j in range(k):
            if commutes(lx[i], lz[j]) != (i != j):
                raise ValueError(f"logical X{i} / Z{j} violate the commutation table")
            if i < j and not (commutes(lx[i], lx[j]) and commutes(lz[i], lz[j])):
                raise ValueError(f"logicals of qubits {i} and {j} do not commute")
    if not _independent(gens + lx + lz):
        raise ValueError("logical operators lie in the stabilizer group")
    destab = _find_destabilizers(gens, lx + lz)
    return StabilizerCode(gens, lx, lz, destab, name=name)


def encoder_isometry(code: StabilizerCode, cap: int = MATRIX_QUBIT_CAP) -> np.ndarray:
    """U_C with column j the logical basis state |j>.

    |0...0> is the normalized projection of the first computational basis state
    not annihilated by the code projector times the logical-Z projectors; the
    remaining columns apply logical X's.  Logical qubit 0 is the most
    significant bit of the column index.
    """
    if code.n > cap:
        raise ValueError(f"refusing to build a dense encoder for {code.n} > {cap} qubits")
    dim = 1 << code.n
    proj = code.projector()
    for lz in code.logical_z:
        proj = proj @ (np.eye(dim) + lz.to_matrix()) / 2
    for b in range(dim):
        col = proj[:, b]
        norm = np.linalg.norm(col)
        if norm > 1e-8:
            zero = col / norm
            break
    else:  # pragma: no cover - a valid code always has a logical zero
        raise RuntimeError("empty code space")
    cols = []
    for j in range(1 << code.k):
        state = zero
        for qubit in range(code.k):
            if (j >> (code.k - 1 - qubit)) & 1:
                state = code.logical_x[qubit].to_matrix() @ state
        cols.append(state)
    return np.column_stack(cols)


def knill_laflamme_check(code: StabilizerCode, kraus_ops, tol: float = 1e-12) -> KnillLaflammeResult:
    """Check P E_i^dag E_j P = c_i delta_ij P for the given operators.

    The result is truthy when the condition holds; ``worst_pair`` and
    ``residual`` report the largest violation (Frobenius norm).
    """
    dim = 1 << code.n
    ops = [np.asarray(e, dtype=complex) for e in kraus_ops]
    for e in ops:
        if e.shape != (dim, dim):
            raise ValueError(f"Kraus operator of shape {e.shape}, expected {(dim, dim)}")
    proj = code.projector()
    sandwiched = [e @ proj for e in ops]
    code_dim = 1 << code.k
    worst, worst_pair = 0.0, None
    for i, ei in enumerate(sandwiched):
        for j, ej in enumerate(sandwiched):
            block = ei.conj().T @ ej
            target = (np.trace(block) / code_dim) * proj if i == j else 0.0
            res = float(np.linalg.norm(block - target))
            if worst_pair is None or res > worst:
                worst, worst_pair = res, (i, j)
    return KnillLaflammeResult(worst <= tol, worst_pair, worst)


DIVINCENZO5 = dict(
    generators=["ZXXZI", "IZXXZ", "ZIZXX", "XZIZX"],
    logical_x=["XXXXX"],
    logical_z=["ZZZZZ"],
)
LAFLAMME5 = dict(
    generators=["XIXZX", "ZXZIX", "XYZYI", "XXIXZ"],
    logical_x=["XXYYX"],
    logical_z=["IXIZX"],
)
BITFLIP3 = dict(generators=["ZZI", "IZZ"], logical_x=["XXX"], logical_z=["ZZZ"])

BUILTIN_CODES = {"divincenzo5": DIVINCENZO5, "laflamme5": LAFLAMME5, "bitflip3": BITFLIP3}
_ALIASES = {"divincenzo": "divincenzo5", "laflamme": "laflamme5", "bitflip": "bitflip3"}
_cache: dict[str, StabilizerCode] = {}


def get_code(name: str) -> StabilizerCode:
    """Built-in code by name, or a code definition file path."""
    key = _ALIASES.get(name, name)
    if key in BUILTIN_CODES:
        if key not in _cache:
            _cache[key] = build_code(**BUILTIN_CODES[key], name=key)
        return _cache[key]
    path = Path(name)
    if path.exists():
        return load_code(path)
    raise KeyError(f"unknown code {name!r}; built-ins are {sorted(BUILTIN_CODES)}")


def parse_code_text(text: str, name: str = "") -> StabilizerCode:
    """Parse the sectioned format (``generators:``, ``logical_x:``, ``logical_z:``)."""
    sections: dict[str, list[str]] = {"generators": [], "logical_x": [], "logical_z": []}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith(":") and line[:-1].strip() in sections:
            current = line[:-1].strip()
            continue
        if current is None:
            raise ValueError(f"Pauli string {line!r} outside of a section")
        sections[current].append(line)
    return build_code(sections["generators"], sections["logical_x"], sections["logical_z"], name=name)


def load_code(path) -> StabilizerCode:
    path = Path(path)
    return parse_code_text(path.read_text(), name=path.stem)


def format_code(code: StabilizerCode) -> str:
    lines = ["generators:"] + [g.to_string() for g in code.generators]
    lines += ["logical_x:"] + [g.to_string() for g in code.logical_x]
    lines += ["logical_z:"] + [g.to_string() for g in code.logical_z]
    return "\n".join(lines) + "\n"
