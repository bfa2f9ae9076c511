"""Kraus and Pauli channels, channel fidelity, and reduction to coset tables."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Mapping

import numpy as np

from .pauli import MATRIX_QUBIT_CAP, PauliOperator, pauli_to_matrix
from .stabilizer import StabilizerCode

COMPLETENESS_TOL = 1e-10
PROBABILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A channel rho -> sum_i E_i rho E_i^dag.

    ``ops`` has shape ``(m, dim_out, dim_in)``.  Completeness is checked on
    construction unless ``check=False``.
    """

    ops: np.ndarray
    check: bool = True

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise ValueError("ops must be a non-empty stack of matrices")
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        if self.check:
            err = self.completeness_error()
            if err > COMPLETENESS_TOL:
                raise ValueError(f"Kraus operators are not trace preserving (error {err:.3e})")

    @property
    def dim_in(self) -> int:
        return self.ops.shape[2]

    @property
    def dim_out(self) -> int:
        return self.ops.shape[1]

    def __len__(self) -> int:
        return self.ops.shape[0]

    def completeness_error(self) -> float:
        total = np.einsum("kji,kjl->il", self.ops.conj(), self.ops)
        return float(np.max(np.abs(total - np.eye(self.dim_in))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("kij,jl,kml->im", self.ops, rho, self.ops.conj())


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """Channel with Kraus operators sqrt(a_i) g_i for phase-0 Paulis g_i."""

    n: int
    weights: Mapping[PauliOperator, float]

    def __post_init__(self):
        clean = {}
        for g, a in self.weights.items():
            if isinstance(g, str):
                g = PauliOperator.from_string(g)
            if g.n != self.n:
                raise ValueError(f"Pauli {g} does not act on {self.n} qubits")
            if a < 0:
                raise ValueError(f"negative weight {a} for {g}")
            g = g.unsigned()
            clean[g] = clean.get(g, 0.0) + float(a)
        total = sum(clean.values())
        if abs(total - 1) > PROBABILITY_TOL:
            raise ValueError(f"Pauli weights sum to {total}, expected 1")
        object.__setattr__(self, "weights", clean)

    def to_kraus(self) -> KrausChannel:
        items = [(g, a) for g, a in self.weights.items() if a > 0]
        return KrausChannel(np.stack([math.sqrt(a) * pauli_to_matrix(g) for g, a in items]))

    def fidelity(self) -> float:
        return self.weights.get(PauliOperator.identity(self.n), 0.0)


def channel_fidelity(ch: KrausChannel) -> float:
    """Sum_i |Tr E_i / d|^2."""
    if ch.dim_in != ch.dim_out:
        raise ValueError("channel fidelity needs a channel with equal input and output dimension")
    traces = np.trace(ch.ops, axis1=1, axis2=2)
    return float(np.sum(np.abs(traces) ** 2) / ch.dim_in**2)


def compose(r: KrausChannel, e: KrausChannel) -> KrausChannel:
    """r after e: Kraus operators R_j E_i, j major."""
    if r.dim_in != e.dim_out:
        raise ValueError(f"cannot compose: {r.dim_in} != {e.dim_out}")
    ops = np.einsum("jab,ibc->jiac", r.ops, e.ops).reshape(-1, r.dim_out, e.dim_in)
    return KrausChannel(ops, check=r.check and e.check)


def mix(e0: KrausChannel, ebar: KrausChannel, gamma: float) -> KrausChannel:
    """(1-gamma) e0 + gamma ebar as the scaled union of the two Kraus sets."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"mixing parameter {gamma} outside [0, 1]")
    if (e0.dim_in, e0.dim_out) != (ebar.dim_in, ebar.dim_out):
        raise ValueError("mixed channels must have equal dimensions")
    if gamma == 0:
        return e0
    if gamma == 1:
        return ebar
    ops = np.concatenate([math.sqrt(1 - gamma) * e0.ops, math.sqrt(gamma) * ebar.ops])
    return KrausChannel(ops, check=e0.check and ebar.check)


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel(np.asarray(u)[None], check=False)


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel(np.eye(dim)[None])


def tensor_iid(single, n: int, cap: int = MATRIX_QUBIT_CAP):
    """n independent copies of a single-qubit channel.

    A :class:`PauliChannel` stays a Pauli channel with product weights; a
    :class:`KrausChannel` gets all m**n Kronecker products, first factor major.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(single, PauliChannel):
        if single.n != 1:
            raise ValueError("tensor_iid needs a single-qubit channel")
        if n == 1:
            return single
        weights = {}
        items = list(single.weights.items())
        for combo in itertools.product(items, repeat=n):
            label = "".join(g.labels() for g, _ in combo)
            weights[PauliOperator.from_string(label)] = math.prod(a for _, a in combo)
        return PauliChannel(n, weights)
    if single.dim_in != 2 or single.dim_out != 2:
        raise ValueError("tensor_iid needs a single-qubit channel")
    if n > cap:
        raise ValueError(f"refusing to build a dense {n}-qubit channel (cap {cap})")
    if n == 1:
        return single
    ops = [reduce(np.kron, combo) for combo in itertools.product(single.ops, repeat=n)]
    return KrausChannel(np.stack(ops), check=single.check)


def _check_prob(p: float) -> None:
    if not 0 <= p <= 1:
        raise ValueError(f"noise parameter {p} outside [0, 1]")


def phase_damping(p: float) -> PauliChannel:
    """Z with probability p/2."""
    _check_prob(p)
    return PauliChannel(1, {PauliOperator.from_string("I"): 1 - p / 2, PauliOperator.from_string("Z"): p / 2})


def depolarizing(p: float) -> PauliChannel:
    _check_prob(p)
    weights = {PauliOperator.from_string("I"): 1 - 3 * p / 4}
    for label in "XYZ":
        weights[PauliOperator.from_string(label)] = p / 4
    return PauliChannel(1, weights)


def bit_flip(p: float) -> PauliChannel:
    _check_prob(p)
    return PauliChannel(1, {PauliOperator.from_string("I"): 1 - p, PauliOperator.from_string("X"): p})


def amplitude_damping(p: float) -> KrausChannel:
    _check_prob(p)
    e0 = np.array([[1, 0], [0, math.sqrt(1 - p)]])
    e1 = np.array([[0, math.sqrt(p)], [0, 0]])
    return KrausChannel(np.stack([e0, e1]))


def pure_states_rotation(theta: float, phi: float) -> KrausChannel:
    """Three-operator rotation channel with weights fixed by trace preservation.

    Substituting the operators into sum E^dag E = I leaves two diagonal
    equations, linear in alpha**2 and beta**2 (the off-diagonal terms of E_+
    and E_- cancel).
    """
    ct, st = math.cos(theta / 2), math.sin(theta / 2)
    if abs(ct) < 1e-12 or abs(st) < 1e-12:
        raise ValueError(f"degenerate theta={theta}")
    c1, s1 = math.cos((theta - phi) / 2), math.sin((theta - phi) / 2)
    # alpha^2 c1^2/ct^2 + 2 beta^2 st^2 = 1 ;  alpha^2 s1^2/st^2 + 2 beta^2 ct^2 = 1
    det = 2 * math.cos(theta - phi)
    if abs(det) < 1e-14:
        raise ValueError(f"no solution for theta={theta}, phi={phi}")
    alpha2 = math.cos(theta) / math.cos(theta - phi)
    beta2 = (c1**2 / ct**2 - s1**2 / st**2) / det
    if alpha2 < -1e-12 or beta2 < -1e-12:
        raise ValueError(f"no real alpha, beta for theta={theta}, phi={phi}")
    alpha, beta = math.sqrt(max(alpha2, 0.0)), math.sqrt(max(beta2, 0.0))
    e0 = alpha * np.diag([c1 / ct, s1 / st])
    ops = [e0]
    for sign in (1, -1):
        ops.append(beta * np.array([[c1 * st, sign * c1 * ct], [sign * s1 * st, s1 * ct]]))
    return KrausChannel(np.stack(ops))


@dataclass(frozen=True, eq=False)
class ReducedErrorTable:
    """a[p, q]: probability mass of the coset A_p W_q S."""

    code: StabilizerCode
    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        expected = (self.code.num_logicals, self.code.num_syndromes)
        if a.shape != expected:
            raise ValueError(f"table shape {a.shape}, expected {expected}")
        if np.any(a < -PROBABILITY_TOL):
            raise ValueError("negative probability in reduced table")
        if abs(a.sum() - 1) > PROBABILITY_TOL:
            raise ValueError(f"reduced table sums to {a.sum()}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    def syndrome_probabilities(self) -> np.ndarray:
        return self.a.sum(axis=0)


def pauli_weight_vector(ch: PauliChannel) -> np.ndarray:
    """Weights indexed like :attr:`StabilizerCode.coset_table`."""
    out = np.zeros(1 << (2 * ch.n))
    for g, a in ch.weights.items():
        out[g.x | (g.z << ch.n)] += a
    return out


def iid_weight_vector(single: PauliChannel, n: int) -> np.ndarray:
    """Product weights of ``n`` copies of a single-qubit Pauli channel, same indexing."""
    if single.n != 1:
        raise ValueError("expected a single-qubit Pauli channel")
    w = {(g.x, g.z): a for g, a in single.weights.items()}
    index = np.arange(1 << (2 * n))
    out = np.ones(index.shape)
    for j in range(n):
        xj, zj = (index >> j) & 1, (index >> (n + j)) & 1
        table = np.array([[w.get((0, 0), 0.0), w.get((0, 1), 0.0)], [w.get((1, 0), 0.0), w.get((1, 1), 0.0)]])
        out *= table[xj, zj]
    return out


def reduce_pauli_channel(code: StabilizerCode, ch: PauliChannel) -> ReducedErrorTable:
    """Sum Pauli weights over cosets.

    A single-qubit channel is applied independently to each of the code's
    qubits; otherwise ``ch.n`` must equal ``code.n``.
    """
    if ch.n == 1 and code.n > 1:
        weights = iid_weight_vector(ch, code.n)
    elif ch.n == code.n:
        weights = pauli_weight_vector(ch)
    else:
        raise ValueError(f"channel acts on {ch.n} qubits, code on {code.n}")
    ps, qs = code.coset_table
    a = np.zeros((code.num_logicals, code.num_syndromes))
    np.add.at(a, (ps, qs), weights)
    return ReducedErrorTable(code, a)


def to_kraus(ch) -> KrausChannel:
    return ch.to_kraus() if isinstance(ch, PauliChannel) else ch


def channel_from_spec(spec: Mapping) -> PauliChannel | KrausChannel:
    """Build a single-qubit channel from ``{"type": ..., params}``.

    Types: phase_damping, depolarizing, bit_flip, amplitude_damping (``p``),
    pure_states_rotation (``theta``, ``phi``), pauli_table (``I``, ``X``,
    ``Y``, ``Z`` or full Pauli strings as keys).
    """
    spec = dict(spec)
    kind = spec.pop("type")
    if kind == "phase_damping":
        return phase_damping(float(spec["p"]))
    if kind == "depolarizing":
        return depolarizing(float(spec["p"]))
    if kind == "bit_flip":
        return bit_flip(float(spec["p"]))
    if kind == "amplitude_damping":
        return amplitude_damping(float(spec["p"]))
    if kind == "pure_states_rotation":
        return pure_states_rotation(_angle(spec["theta"]), _angle(spec["phi"]))
    if kind == "pauli_table":
        weights = {PauliOperator.from_string(k): float(v) for k, v in spec.items()}
        n = {g.n for g in weights}
        if len(n) != 1:
            raise ValueError("pauli_table keys must all act on the same number of qubits")
        return PauliChannel(n.pop(), weights)
    raise ValueError(f"unknown channel type {kind!r}")


def _angle(value) -> float:
    """Accept floats or expressions like ``5pi/12``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).replace(" ", "").lower()
    if "pi" not in text:
        return float(text)
    num, _, den = text.partition("/")
    coeff = num.replace("*", "").replace("pi", "") or "1"
    coeff = -1.0 if coeff == "-" else float(coeff)
    return coeff * math.pi / (float(den) if den else 1.0)


def format_kraus(ch: KrausChannel) -> str:
    """Text form: header ``kraus m dim_out dim_in``, then each operator row-major
    with ``re,im`` entries, operators separated by blank lines."""
    lines = [f"kraus {len(ch)} {ch.dim_out} {ch.dim_in}"]
    for op in ch.ops:
        lines.append("")
        for row in op:
            lines.append(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row))
    return "\n".join(lines) + "\n"


def parse_kraus(text: str, check: bool = True) -> KrausChannel:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    header = rows[0]
    if header[0] != "kraus" or len(header) != 4:
        raise ValueError("missing 'kraus m dim_out dim_in' header")
    m, dout, din = map(int, header[1:])
    body = rows[1:]
    if len(body) != m * dout or any(len(r) != din for r in body):
        raise ValueError("Kraus body does not match the header dimensions")
    values = [complex(*map(float, tok.split(","))) for r in body for tok in r]
    return KrausChannel(np.array(values).reshape(m, dout, din), check=check)
