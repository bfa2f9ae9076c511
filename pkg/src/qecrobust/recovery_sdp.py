"""Numerically optimal recovery via a Choi-matrix semidefinite program.

For an encoder U and noise E, the channel fidelity of R o E o U is linear in
the Choi matrix X of R:  F = Tr(X C).  We maximize it over

    X >= 0,   Tr_out X = I_in

with Anderson-accelerated ADMM, alternating a PSD projection (which also
absorbs the linear objective) and the affine projection onto the
trace-preserving set.  Choi
matrices use the output (x) input index order: X = sum_j vec(R_j) vec(R_j)^dag
with vec the row-major flattening.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .channels import KrausChannel, mix, to_kraus
from .stabilizer import StabilizerCode

log = logging.getLogger(__name__)

PSD_FLOOR = 1e-8
TRACE_TOL = 1e-8
KRAUS_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    dim_out: int
    dim_in: int
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=complex)
        size = self.dim_out * self.dim_in
        if m.shape != (size, size):
            raise ValueError(f"Choi matrix of shape {m.shape}, expected {(size, size)}")
        object.__setattr__(self, "m", m)

    def partial_trace_out(self) -> np.ndarray:
        return partial_trace_out(self.m, self.dim_out, self.dim_in)

    def trace_error(self) -> float:
        return float(np.max(np.abs(self.partial_trace_out() - np.eye(self.dim_in))))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(_herm(self.m))[0])

    def validate(self, psd_floor: float = PSD_FLOOR, trace_tol: float = TRACE_TOL) -> None:
        if np.max(np.abs(self.m - self.m.conj().T)) > trace_tol:
            raise ValueError("Choi matrix is not Hermitian")
        if self.min_eigenvalue() < -psd_floor:
            raise ValueError(f"Choi matrix has eigenvalue {self.min_eigenvalue():.3e}")
        if self.trace_error() > trace_tol:
            raise ValueError(f"partial trace deviates from identity by {self.trace_error():.3e}")


@dataclass(frozen=True, eq=False)
class SdpSolution:
    choi: ChoiMatrix
    fidelity: float
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    # scaled ADMM state for warm starts
    z: np.ndarray | None = None
    u: np.ndarray | None = None
    rho: float = 1.0


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 50_000
    rho: float | None = None  # None: scaled to the objective
    anderson_memory: int = 10
    log_every: int = 0

    def kwargs(self) -> dict:
        return dict(tol=self.tol, max_iter=self.max_iter, rho=self.rho, anderson_memory=self.anderson_memory)


def _herm(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def partial_trace_out(m: np.ndarray, dim_out: int, dim_in: int) -> np.ndarray:
    return np.einsum("aiaj->ij", m.reshape(dim_out, dim_in, dim_out, dim_in))


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    w, v = np.linalg.eigh(_herm(m))
    return (v * np.maximum(w, 0)) @ v.conj().T


def project_feasible(m: np.ndarray, dim_out: int, dim_in: int) -> np.ndarray:
    """Orthogonal projection onto {X : Tr_out X = I_in}."""
    excess = partial_trace_out(m, dim_out, dim_in) - np.eye(dim_in)
    return m - np.kron(np.eye(dim_out), excess) / dim_out


def choi_from_kraus(ch: KrausChannel) -> ChoiMatrix:
    vecs = ch.ops.reshape(len(ch), -1)
    return ChoiMatrix(ch.dim_out, ch.dim_in, vecs.T @ vecs.conj())


def kraus_from_choi(choi: ChoiMatrix, cutoff: float = KRAUS_CUTOFF) -> KrausChannel:
    choi.validate()
    w, v = np.linalg.eigh(_herm(choi.m))
    keep = w > cutoff
    ops = (v[:, keep] * np.sqrt(w[keep])).T.reshape(-1, choi.dim_out, choi.dim_in)
    return KrausChannel(ops, check=False)


def encoded_noise(code: StabilizerCode, ch) -> np.ndarray:
    """Stack of E_i U_C."""
    ch = to_kraus(ch)
    if ch.dim_in != 1 << code.n or ch.dim_out != 1 << code.n:
        raise ValueError(f"channel dims {ch.dim_out}x{ch.dim_in} do not match a {code.n}-qubit code")
    return np.einsum("kab,bc->kac", ch.ops, code.encoder)


def fidelity_observable(code: StabilizerCode, ch) -> np.ndarray:
    """C with F_ch(R o E o U_C) = Tr(X_R C) for every recovery R."""
    eu = encoded_noise(code, ch)
    d = 1 << code.k
    # row i is vec((E_i U)^T), so that Tr(R M) = vec(R) . vec(M^T)
    rows = np.transpose(eu, (0, 2, 1)).reshape(len(eu), -1)
    return rows.conj().T @ rows / d**2


def _write_diag(stream, it, obj, r, s):
    if stream is not None:
        csv.writer(stream, lineterminator="\n").writerow([it, f"{obj:.15g}", f"{r:.6e}", f"{s:.6e}"])


def default_rho(c: np.ndarray, dim_out: int, dim_in: int) -> float:
    """Penalty matched to the objective scale: ||C|| / (10 ||X_0||) with X_0 = I / dim_out."""
    norm_c = float(np.linalg.norm(c))
    if norm_c == 0:
        return 1.0
    return norm_c * math.sqrt(dim_out) / (10 * math.sqrt(dim_in))


def solve_optimal_recovery(
    c: np.ndarray,
    dims: tuple[int, int],
    tol: float = 1e-8,
    max_iter: int = 50_000,
    rho: float | None = None,
    anderson_memory: int = 10,
    warm_start: SdpSolution | None = None,
    diagnostics: TextIO | None = None,
    log_every: int = 100,
) -> SdpSolution:
    """Maximize Tr(X C) over Choi matrices of channels with ``dims = (dim_out, dim_in)``.

    Scaled ADMM in its Douglas-Rachford form: with state W, Z = P_aff(W),
    X = P_psd(2Z - W + C / rho), and W <- W + X - Z.  Anderson acceleration
    over the last ``anderson_memory`` steps is applied to that map and kept
    only when it lowers the fixed-point residual.  Converged when both the
    primal residual ||X - Z|| and the dual residual rho ||Z - Z_prev|| drop
    below ``tol``.  On hitting ``max_iter`` the iterate with the smallest
    residual is returned with ``converged=False``.  ``diagnostics`` receives
    CSV rows (iteration, objective, primal, dual).
    """
    c = np.asarray(c)
    if np.max(np.abs(c - c.conj().T)) > 1e-10 * max(1.0, float(np.max(np.abs(c)))):
        raise ValueError("objective matrix is not Hermitian")
    dim_out, dim_in = dims
    size = dim_out * dim_in
    if c.shape != (size, size):
        raise ValueError(f"objective of shape {c.shape}, expected {(size, size)}")
    real = not np.iscomplexobj(c) or np.max(np.abs(c.imag)) <= 1e-14 * max(float(np.max(np.abs(c))), 1e-300)
    c = c.real.copy() if real else c.astype(complex)
    c = (c + c.conj().T) / 2

    if warm_start is not None and warm_start.z is not None:
        w = warm_start.z + warm_start.u
        w = w.real.copy() if real else w.astype(complex)
        rho = warm_start.rho
    else:
        w = project_feasible(np.zeros((size, size), dtype=c.dtype), dim_out, dim_in)
        rho = rho or default_rho(c, dim_out, dim_in)
    c_scaled = c / rho

    def step(w):
        z = project_feasible(w, dim_out, dim_in)
        ev, v = np.linalg.eigh(_herm(2 * z - w) + c_scaled)
        x = (v * np.maximum(ev, 0)) @ v.conj().T
        return x - z, x, z

    g, x, z = step(w)
    z_prev = project_feasible(w, dim_out, dim_in) if warm_start is not None else z
    d_w, d_g = [], []
    best = None
    r = s = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        cand = w + g
        if anderson_memory and d_g:
            gm = np.stack([d.ravel() for d in d_g], axis=1)
            wm = np.stack([d.ravel() for d in d_w], axis=1)
            h = (gm.conj().T @ gm).real if real else gm.conj().T @ gm
            reg = 1e-10 * float(np.trace(h).real) + 1e-300
            coef = np.linalg.solve(h + reg * np.eye(len(h)), gm.conj().T @ g.ravel())
            cand = _herm(((w + g).ravel() - (wm + gm) @ coef).reshape(w.shape))
        accepted = False
        if np.all(np.isfinite(cand)):
            g_new, x_new, z_new = step(cand)
            accepted = not d_g or np.linalg.norm(g_new) <= np.linalg.norm(g)
        if not accepted:
            # plain step; the history no longer describes the local map
            cand = w + g
            g_new, x_new, z_new = step(cand)
            d_w.clear()
            d_g.clear()
        if anderson_memory:
            d_w.append(cand - w)
            d_g.append(g_new - g)
            if len(d_w) > anderson_memory:
                d_w.pop(0)
                d_g.pop(0)
        w, g, x, z = cand, g_new, x_new, z_new
        r = float(np.linalg.norm(g))
        s = rho * float(np.linalg.norm(z - z_prev))
        z_prev = z
        if diagnostics is not None and (it % log_every == 0 or it == 1):
            _write_diag(diagnostics, it, float(np.real(np.vdot(x, c))), r, s)
        if r < tol and s < tol:
            break
        if best is None or max(r, s) < best[0]:
            best = (max(r, s), x, w, r, s)
    converged = r < tol and s < tol
    if not converged and best is not None:
        _, x, w, r, s = best
        log.warning("SDP did not converge in %d iterations (residuals %.2e, %.2e)", max_iter, r, s)
    x = _herm(x).astype(complex)
    z = project_feasible(w, dim_out, dim_in)
    # Tr(X C) for Hermitian X, C
    fid = float(np.real(np.vdot(x, c.astype(complex))))
    return SdpSolution(
        choi=ChoiMatrix(dim_out, dim_in, x),
        fidelity=fid,
        iterations=it,
        primal_residual=r,
        dual_residual=s,
        converged=converged,
        z=z,
        u=w - z,
        rho=rho,
    )


def solve_for_channel(code: StabilizerCode, ch, **kwargs) -> SdpSolution:
    c = fidelity_observable(code, ch)
    return solve_optimal_recovery(c, (1 << code.k, 1 << code.n), **kwargs)


def choi_fidelity(choi: ChoiMatrix, c: np.ndarray) -> float:
    return float(np.real(np.trace(choi.m @ c)))


@dataclass
class MixingPath:
    gammas: np.ndarray
    solutions: list[SdpSolution]
    c0: np.ndarray
    c1: np.ndarray

    def observable(self, gamma: float) -> np.ndarray:
        return (1 - gamma) * self.c0 + gamma * self.c1

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([s.fidelity for s in self.solutions])

    def fixed_fidelities(self, index: int) -> np.ndarray:
        """Fidelity of the recovery optimal at ``gammas[index]`` along the whole path."""
        x = self.solutions[index].choi
        f0, f1 = choi_fidelity(x, self.c0), choi_fidelity(x, self.c1)
        return (1 - self.gammas) * f0 + self.gammas * f1

    def derivative_norms(self) -> np.ndarray:
        """Forward differences ||X_{i+1} - X_i|| / h_i (last point repeats the previous one)."""
        return choi_derivative_norms(self.gammas, [s.choi.m for s in self.solutions])


def choi_derivative_norms(gammas, chois) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    if len(g) < 2 or np.any(np.diff(g) <= 0):
        raise ValueError("gamma grid must be strictly increasing with at least two points")
    d = np.array([np.linalg.norm(chois[i + 1] - chois[i]) / (g[i + 1] - g[i]) for i in range(len(g) - 1)])
    return np.append(d, d[-1])


def _solve_point(args):
    c, dims, settings = args
    return solve_optimal_recovery(c, dims, **settings.kwargs())


def solve_mixing_path(
    code: StabilizerCode,
    e0,
    ebar,
    gamma_grid: Sequence[float],
    settings: SolverSettings = SolverSettings(),
    cold_start: bool = False,
    workers: int | None = None,
    diagnostics: TextIO | None = None,
) -> MixingPath:
    """Optimal recoveries along mix(e0, ebar, gamma).

    Warm-start mode solves the grid in order, initializing each point from the
    previous solution; results depend only on the inputs.  Cold-start mode
    solves points independently, in parallel when ``workers`` > 1.
    """
    gammas = np.asarray(gamma_grid, dtype=float)
    c0, c1 = fidelity_observable(code, e0), fidelity_observable(code, ebar)
    dims = (1 << code.k, 1 << code.n)
    if np.array_equal(c0, c1):
        cs = [c0] * len(gammas)
    else:
        cs = [(1 - g) * c0 + g * c1 for g in gammas]
    if cold_start:
        jobs = [(c, dims, settings) for c in cs]
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                sols = list(pool.map(_solve_point, jobs))
        else:
            sols = [_solve_point(j) for j in jobs]
    else:
        sols = []
        prev, prev_c = None, None
        for g, c in zip(gammas, cs):
            if prev is not None and np.array_equal(c, prev_c):
                sols.append(prev)
                continue
            sol = solve_optimal_recovery(
                c,
                dims,
                **settings.kwargs(),
                warm_start=prev,
                diagnostics=diagnostics,
                log_every=settings.log_every or 100,
            )
            log.debug("gamma=%.6f fidelity=%.12f iterations=%d", g, sol.fidelity, sol.iterations)
            sols.append(sol)
            prev, prev_c = sol, c
    return MixingPath(gammas, sols, c0, c1)


def choi_derivative_curve(code, e0, ebar, gamma_grid, settings: SolverSettings = SolverSettings(), **kwargs):
    """(gamma, ||dX*/dgamma|| / max) pairs along the mixing path.

    Raises ``RuntimeError`` naming the first grid point whose solve did not
    converge.
    """
    path = solve_mixing_path(code, e0, ebar, gamma_grid, settings, **kwargs)
    for g, sol in zip(path.gammas, path.solutions):
        if not sol.converged:
            raise RuntimeError(f"SDP did not converge at gamma={g}")
    d = path.derivative_norms()
    top = d.max()
    norm = d / top if top > 0 else d
    return list(zip(path.gammas.tolist(), norm.tolist()))


def mixed_observable(code, e0, ebar, gamma) -> np.ndarray:
    """Observable of the explicitly mixed Kraus channel (reference for the affine shortcut)."""
    return fidelity_observable(code, mix(to_kraus(e0), to_kraus(ebar), gamma))
