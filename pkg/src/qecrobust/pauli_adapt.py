"""Channel-adapted recovery for Pauli channels and robustness along mixing rays.

A recovery from the coset family is a choice of one logical correction
``p_q`` per syndrome ``q``; its fidelity on a reduced table is
``sum_q a[p_q, q]``.  Mixing two tables is affine in gamma, so every fixed
plan gives an affine fidelity and the optimal fidelity is their upper
envelope.  All breakpoint quantities below are computed exactly from the
pairwise intersections of those lines.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channels import KrausChannel, ReducedErrorTable
from .pauli import PauliOperator, enumerate_paulis
from .stabilizer import StabilizerCode

TIE_RTOL = 1e-12
BREAKPOINT_MERGE = 1e-12


@dataclass(frozen=True, eq=False)
class RecoveryPlan:
    code: StabilizerCode
    choice: tuple[int, ...]
    ties: tuple[int, ...] = ()

    def __post_init__(self):
        choice = tuple(int(p) for p in self.choice)
        if len(choice) != self.code.num_syndromes:
            raise ValueError(f"plan needs {self.code.num_syndromes} entries, got {len(choice)}")
        if any(not 0 <= p < self.code.num_logicals for p in choice):
            raise ValueError("logical index out of range in plan")
        object.__setattr__(self, "choice", choice)

    def __eq__(self, other):
        return isinstance(other, RecoveryPlan) and self.code is other.code and self.choice == other.choice

    def __hash__(self):
        return hash(self.choice)

    @property
    def is_tied(self) -> bool:
        return bool(self.ties)


def _tied(column: np.ndarray) -> np.ndarray:
    top = column.max()
    return np.flatnonzero(column >= top - TIE_RTOL * max(abs(top), 1e-300))


def optimal_plan(table: ReducedErrorTable) -> tuple[RecoveryPlan, float]:
    """Correct the most likely coset in each syndrome.

    Ties go to the smallest logical index; the tied syndromes are listed in
    ``plan.ties``.
    """
    a = table.a
    choice = np.argmax(a, axis=0)
    ties = tuple(q for q in range(a.shape[1]) if len(_tied(a[:, q])) > 1)
    plan = RecoveryPlan(table.code, tuple(choice), ties)
    return plan, float(a.max(axis=0).sum())


def plan_fidelity(table: ReducedErrorTable, plan: RecoveryPlan) -> float:
    return float(table.a[list(plan.choice), np.arange(table.a.shape[1])].sum())


def standard_plan(code: StabilizerCode, errors: Iterable[PauliOperator] | None = None) -> RecoveryPlan:
    """Correct the identity and the given low-weight errors (default: weight <= 1).

    Raises if two of the errors land in the same syndrome with different
    logical content.
    """
    if errors is None:
        errors = enumerate_paulis(code.n, 1)
    choice: dict[int, tuple[int, PauliOperator]] = {0: (0, PauliOperator.identity(code.n))}
    for e in errors:
        idx = code.decompose(e)
        if idx.q in choice and choice[idx.q][0] != idx.p:
            raise ValueError(f"errors {choice[idx.q][1]} and {e} collide in syndrome {idx.q}")
        choice.setdefault(idx.q, (idx.p, e))
    return RecoveryPlan(code, tuple(choice.get(q, (0, None))[0] for q in range(code.num_syndromes)))


def no_correction_plan(code: StabilizerCode) -> RecoveryPlan:
    return RecoveryPlan(code, (0,) * code.num_syndromes)


def all_plans(code: StabilizerCode):
    """Every plan of the coset family (``num_logicals ** num_syndromes`` of them)."""
    for choice in itertools.product(range(code.num_logicals), repeat=code.num_syndromes):
        yield RecoveryPlan(code, choice)


def recovery_kraus(code: StabilizerCode, plan: RecoveryPlan) -> KrausChannel:
    """Kraus operators U_C^dag W_q^dag A_{p_q}^dag, one per syndrome."""
    u = code.encoder
    ops = []
    for q, p in enumerate(plan.choice):
        w = code.representative_w(q).to_matrix()
        a = code.logical(p).to_matrix()
        ops.append(u.conj().T @ w.conj().T @ a.conj().T)
    return KrausChannel(np.stack(ops))


def mix_tables(t0: ReducedErrorTable, tbar: ReducedErrorTable, gamma: float) -> ReducedErrorTable:
    if t0.code is not tbar.code:
        raise ValueError("tables refer to different codes")
    if not 0 <= gamma <= 1:
        raise ValueError(f"mixing parameter {gamma} outside [0, 1]")
    return ReducedErrorTable(t0.code, (1 - gamma) * t0.a + gamma * tbar.a)


def gamma_zero(t0: ReducedErrorTable, tbar: ReducedErrorTable, plan0: RecoveryPlan) -> float:
    """Largest gamma up to which ``plan0`` stays optimal on the mixed table."""
    a, abar = t0.a, tbar.a
    cols = np.arange(a.shape[1])
    chosen = list(plan0.choice)
    d0 = a[chosen, cols][None, :] - a  # >= 0 when plan0 is optimal
    d1 = abar[chosen, cols][None, :] - abar
    scale = max(float(a.max()), 1e-300)
    if np.any(d0 < -TIE_RTOL * scale):
        q = int(np.argwhere(d0 < -TIE_RTOL * scale)[0][1])
        raise ValueError(f"plan is not optimal for the base table (syndrome {q})")
    d0 = np.maximum(d0, 0.0)
    # (1-g) d0 + g d1 >= 0 fails beyond g = d0 / (d0 - d1) when d1 < 0
    flips = d1 < 0
    if not np.any(flips):
        return 1.0
    roots = d0[flips] / (d0[flips] - d1[flips])
    return float(min(1.0, roots.min()))


@dataclass
class RobustnessReport:
    gamma_zero: float
    gamma_delta: dict[float, float]
    samples: list[tuple[float, float, float, float, bool]] = field(default_factory=list)
    switch_points: list[float] = field(default_factory=list)
    optimality_gap: float = 0.0

    @property
    def delta_F_samples(self) -> list[tuple[float, float]]:
        return [(g, d) for g, _, _, d, _ in self.samples]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["gamma", "F_opt", "F_fixed", "delta_F", "plan_switch"])
        for g, fopt, ffix, d, switch in self.samples:
            writer.writerow([f"{g:.12g}", f"{fopt:.15g}", f"{ffix:.15g}", f"{d:.15g}", int(switch)])
        return buf.getvalue()


class MixingRay:
    """Exact piecewise-linear description of fidelities along (1-g) t0 + g tbar."""

    def __init__(self, t0: ReducedErrorTable, tbar: ReducedErrorTable):
        if t0.code is not tbar.code:
            raise ValueError("tables refer to different codes")
        self.t0, self.tbar = t0, tbar
        self.code = t0.code
        self.intercept = t0.a
        self.slope = tbar.a - t0.a
        self.breakpoints = self._breakpoints()

    def _breakpoints(self) -> np.ndarray:
        pts = {0.0, 1.0}
        b, m = self.intercept, self.slope
        for q in range(b.shape[1]):
            for p1, p2 in itertools.combinations(range(b.shape[0]), 2):
                dm = m[p1, q] - m[p2, q]
                if dm != 0:
                    g = (b[p2, q] - b[p1, q]) / dm
                    if 0 < g < 1:
                        pts.add(float(g))
        # symmetric syndromes flip at the same gamma up to rounding
        merged = []
        for g in sorted(pts):
            if not merged or g - merged[-1] > BREAKPOINT_MERGE:
                merged.append(g)
        merged[-1] = 1.0
        return np.array(merged)

    def table(self, gamma: float) -> ReducedErrorTable:
        return mix_tables(self.t0, self.tbar, gamma)

    def plan_line(self, plan: RecoveryPlan) -> tuple[float, float]:
        """(F at gamma=0, slope) of a fixed plan."""
        cols = np.arange(self.intercept.shape[1])
        chosen = list(plan.choice)
        return float(self.intercept[chosen, cols].sum()), float(self.slope[chosen, cols].sum())

    def optimal_fidelity(self, gamma: float) -> float:
        return float((self.intercept + gamma * self.slope).max(axis=0).sum())

    def argmax_plan(self, gamma: float) -> tuple[int, ...]:
        return tuple(int(p) for p in np.argmax(self.intercept + gamma * self.slope, axis=0))

    def switch_points(self) -> list[float]:
        """Breakpoints where the optimal plan on the adjacent open segments differs."""
        bp = self.breakpoints
        mids = (bp[:-1] + bp[1:]) / 2
        plans = [self.argmax_plan(g) for g in mids]
        return [float(bp[i + 1]) for i in range(len(plans) - 1) if plans[i] != plans[i + 1]]

    def gamma_delta(self, plan0: RecoveryPlan, delta: float, atol: float = 1e-14) -> float:
        """Sup of gamma with excess(g') <= delta for all g' <= gamma.

        ``excess = F_opt - F_plan0 - (gap at gamma=0)`` is convex and
        piecewise linear with kinks only at :attr:`breakpoints`.
        """
        f0, fslope = self.plan_line(plan0)
        gap = self.optimal_fidelity(0.0) - f0
        bp = self.breakpoints
        excess = np.array([self.optimal_fidelity(g) - (f0 + g * fslope) - gap for g in bp])
        for i in range(1, len(bp)):
            if excess[i] > delta + atol:
                lo, hi = bp[i - 1], bp[i]
                e_lo, e_hi = excess[i - 1], excess[i]
                return float(lo + max(delta - e_lo, 0.0) / (e_hi - e_lo) * (hi - lo))
        return 1.0


def delta_F_curve(
    t0: ReducedErrorTable,
    tbar: ReducedErrorTable,
    plan0: RecoveryPlan,
    gamma_grid: Sequence[float],
    deltas: Sequence[float] = (),
) -> RobustnessReport:
    """Optimal vs fixed-plan fidelity along the mixing ray, with gamma_0 and gamma_delta.

    ``gamma_zero`` is only defined (non-NaN) when ``plan0`` is optimal for
    ``t0``.
    """
    ray = MixingRay(t0, tbar)
    f0, fslope = ray.plan_line(plan0)
    gap = ray.optimal_fidelity(0.0) - f0
    try:
        g0 = gamma_zero(t0, tbar, plan0)
    except ValueError:
        g0 = float("nan")
    report = RobustnessReport(
        gamma_zero=g0,
        gamma_delta={float(d): ray.gamma_delta(plan0, d) for d in deltas},
        switch_points=ray.switch_points(),
        optimality_gap=gap,
    )
    prev = None
    for g in gamma_grid:
        g = float(g)
        if not 0 <= g <= 1:
            raise ValueError(f"grid point {g} outside [0, 1]")
        fopt = ray.optimal_fidelity(g)
        ffix = f0 + g * fslope
        plan = ray.argmax_plan(g)
        report.samples.append((g, fopt, ffix, fopt - ffix, prev is not None and plan != prev))
        prev = plan
    return report


def measure_switch_point(t0, tbar, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-13) -> float:
    """Bisection for the first change of the argmax plan; independent of the line algebra."""
    ref = optimal_plan(mix_tables(t0, tbar, lo))[0].choice
    if optimal_plan(mix_tables(t0, tbar, hi))[0].choice == ref:
        return hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if optimal_plan(mix_tables(t0, tbar, mid))[0].choice == ref:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def domain_boundary_witness(table: ReducedErrorTable) -> list[tuple[int, frozenset[int]]]:
    """Syndromes whose most likely coset is not unique."""
    out = []
    for q in range(table.a.shape[1]):
        tied = _tied(table.a[:, q])
        if len(tied) > 1:
            out.append((q, frozenset(int(p) for p in tied)))
    return out


def extremal_table(code: StabilizerCode, p: int, q: int) -> ReducedErrorTable:
    """Table with all mass on the coset (p, q)."""
    a = np.zeros((code.num_logicals, code.num_syndromes))
    a[p, q] = 1.0
    return ReducedErrorTable(code, a)
