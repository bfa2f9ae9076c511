"""Config-driven experiment runners producing CSV tables and SVG plots."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .channels import (
    PauliChannel,
    channel_from_spec,
    reduce_pauli_channel,
    tensor_iid,
    to_kraus,
)
from .pauli_adapt import (
    RecoveryPlan,
    delta_F_curve,
    measure_switch_point,
    optimal_plan,
    standard_plan,
)
from .recovery_sdp import (
    SolverSettings,
    choi_derivative_norms,
    choi_fidelity,
    solve_optimal_recovery,
    solve_mixing_path,
)
from .stabilizer import get_code

log = logging.getLogger(__name__)

FIG1_CURVES = ("divincenzo_optimal", "divincenzo_standard", "laflamme_optimal", "laflamme_standard", "no_correction")


@dataclass
class GridSpec:
    start: float = 0.0
    stop: float = 1.0
    points: int = 201
    refine: bool = True
    refine_peaks: int = 2
    refine_width: float = 1e-5

    def values(self) -> np.ndarray:
        if not 0 <= self.start < self.stop <= 1:
            raise ValueError(f"grid [{self.start}, {self.stop}] not inside [0, 1]")
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class ExperimentConfig:
    kind: str
    code: str = "divincenzo5"
    channel_a: dict = field(default_factory=lambda: {"type": "phase_damping", "p": 0.3})
    channel_b: dict | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    deltas: tuple[float, ...] = ()
    plan: str = "optimal"
    solver: SolverSettings = field(default_factory=SolverSettings)
    cold_start: bool = False
    workers: int = 1
    out_dir: Path = Path("results")
    name: str = "experiment"

    def __post_init__(self):
        if self.kind not in ("figure1", "mixing", "pauli-robustness"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        get_code(self.code)
        channel_from_spec(self.channel_a)
        if self.channel_b is not None:
            channel_from_spec(self.channel_b)
        elif self.kind != "figure1":
            raise ValueError(f"{self.kind} needs a second channel (channel_b)")
        self.grid.values()


_PSR = {"type": "pure_states_rotation", "theta": "5pi/12", "phi": "5pi/36"}
_PD03 = {"type": "phase_damping", "p": 0.3}
_DEP03 = {"type": "depolarizing", "p": 0.3}
_AMP03 = {"type": "amplitude_damping", "p": 0.3}

PRESETS: dict[str, dict] = {
    "figure1": dict(kind="figure1", channel_a={"type": "phase_damping", "p": 0.0}, grid=GridSpec(0.0, 1.0, 101, False)),
    "fig2a": dict(kind="mixing", channel_a=_DEP03, channel_b=_AMP03),
    "fig2b": dict(kind="mixing", channel_a=_DEP03, channel_b=_PSR),
    "fig2c": dict(kind="mixing", channel_a=_PD03, channel_b=_AMP03),
    "fig2d": dict(kind="mixing", channel_a=_PD03, channel_b=_PSR),
    "fig3-zoom": dict(kind="mixing", channel_a=_PD03, channel_b=_AMP03, grid=GridSpec(0.995, 1.0, 101, False)),
    "fig4": dict(kind="mixing", channel_a={"type": "amplitude_damping", "p": 0.5}, channel_b=_PSR),
    # all weight of the second channel on the coset of a single Pauli
    "extremal-pd": dict(
        kind="pauli-robustness",
        channel_a=_PD03,
        channel_b={"type": "pauli_table", "XIIII": 1.0},
        deltas=(0.001, 0.01, 0.05),
    ),
    "extremal-dep": dict(
        kind="pauli-robustness",
        channel_a=_DEP03,
        channel_b={"type": "pauli_table", "ZZIII": 1.0},
        deltas=(0.001, 0.01, 0.05),
    ),
    "nonoptimal-pd": dict(
        kind="pauli-robustness",
        channel_a=_PD03,
        channel_b={"type": "pauli_table", "ZZIII": 1.0},
        plan="standard",
        deltas=(0.0005, 0.001, 0.002, 0.005, 0.01),
    ),
    "pd-dep": dict(kind="pauli-robustness", channel_a=_PD03, channel_b=_DEP03, deltas=(0.001, 0.01)),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[name])
    params["grid"] = replace(params.get("grid", GridSpec()))
    params.update(overrides)
    return ExperimentConfig(name=name, **params)


def _parse_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_config(text: str, name: str = "experiment") -> ExperimentConfig:
    """Read the INI-style config (sections experiment, channel_a, channel_b, solver)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # Pauli strings in pauli_table sections are case sensitive
    cp.read_string(text)
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    if "kind" not in exp:
        raise ValueError("config needs [experiment] kind = figure1 | mixing | pauli-robustness")
    base = PRESETS.get(exp.get("preset", ""), {})
    grid = replace(base.get("grid", GridSpec()))
    for key, conv in (("gamma_start", float), ("gamma_stop", float), ("points", int), ("refine_peaks", int)):
        if key in exp:
            setattr(grid, key.replace("gamma_", ""), conv(exp[key]))
    if "refine" in exp:
        grid.refine = cp.getboolean("experiment", "refine")
    solver = SolverSettings()
    if cp.has_section("solver"):
        sec = cp["solver"]
        solver = SolverSettings(
            tol=float(sec.get("tol", solver.tol)),
            max_iter=int(sec.get("max_iter", solver.max_iter)),
            rho=float(sec["rho"]) if "rho" in sec else None,
            anderson_memory=int(sec.get("anderson_memory", solver.anderson_memory)),
        )
    channel = lambda sec: {k: _parse_value(v) for k, v in cp[sec].items()} if cp.has_section(sec) else None
    deltas = tuple(float(d) for d in exp["deltas"].split(",")) if "deltas" in exp else base.get("deltas", ())
    return ExperimentConfig(
        kind=exp["kind"],
        code=exp.get("code", base.get("code", "divincenzo5")),
        channel_a=channel("channel_a") or base.get("channel_a", _PD03),
        channel_b=channel("channel_b") or base.get("channel_b"),
        grid=grid,
        deltas=deltas,
        plan=exp.get("plan", base.get("plan", "optimal")),
        solver=solver,
        cold_start=cp.getboolean("experiment", "cold_start", fallback=False),
        workers=int(exp.get("workers", 1)),
        out_dir=Path(exp.get("out", "results")),
        name=exp.get("name", name),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), name=path.stem)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, rows


def plot_csv(csv_path: Path, svg_path: Path, x: str, ys: Sequence[str], *, logy: bool = False, title: str = "") -> None:
    """Line chart of selected CSV columns; reads only the CSV file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "qecrobust"
    header, rows = read_csv(csv_path)
    data = np.array(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    xi = header.index(x)
    styles = ["-", "--", "-.", ":", (0, (5, 1)), (0, (1, 3))]
    for i, col in enumerate(ys):
        ax.plot(data[:, xi], data[:, header.index(col)], linestyle=styles[i % len(styles)], label=col)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def loglog_slope(ps: np.ndarray, infidelity: np.ndarray) -> float:
    slope, _ = np.polyfit(np.log(ps), np.log(infidelity), 1)
    return float(slope)


def _infidelity(table, plan: RecoveryPlan) -> float:
    # mass outside the corrected cosets; avoids cancellation in 1 - F
    mask = np.ones_like(table.a, dtype=bool)
    mask[list(plan.choice), np.arange(table.a.shape[1])] = False
    return float(table.a[mask].sum())


def figure1_rows(p_values: Sequence[float], family: str = "phase_damping") -> list[tuple]:
    """(p, fidelity per curve) rows, one per noise value."""
    inf = figure1_infidelities(p_values, family)
    return [(float(p), *(1 - inf[name][i] for name in FIG1_CURVES)) for i, p in enumerate(p_values)]


def figure1_infidelities(p_values, family: str = "phase_damping") -> dict[str, np.ndarray]:
    div, laf = get_code("divincenzo5"), get_code("laflamme5")
    out = {name: [] for name in FIG1_CURVES}
    for p in p_values:
        single = channel_from_spec({"type": family, "p": float(p)})
        for code, prefix in ((div, "divincenzo"), (laf, "laflamme")):
            table = reduce_pauli_channel(code, single)
            out[f"{prefix}_optimal"].append(_infidelity(table, optimal_plan(table)[0]))
            out[f"{prefix}_standard"].append(_infidelity(table, standard_plan(code)))
        out["no_correction"].append(1 - single.fidelity())
    return {k: np.array(v) for k, v in out.items()}


def figure1_slopes(family: str = "phase_damping", lo: float = 1e-3, hi: float = 1e-2, points: int = 21) -> dict[str, float]:
    ps = np.logspace(math.log10(lo), math.log10(hi), points)
    inf = figure1_infidelities(ps, family)
    return {name: loglog_slope(ps, inf[name]) for name in FIG1_CURVES}


@dataclass
class RunResult:
    csv_path: Path
    svg_path: Path | None = None
    summary: dict = field(default_factory=dict)
    failed: bool = False


def run_figure1(cfg: ExperimentConfig) -> RunResult:
    family = cfg.channel_a["type"]
    tail = np.logspace(-3, -2, 21)
    p_grid = np.unique(np.concatenate([np.linspace(0, 1, cfg.grid.points), tail]))
    rows = figure1_rows(p_grid, family)
    out = Path(cfg.out_dir)
    csv_path = out / f"{cfg.name}.csv"
    write_csv(csv_path, ["p", *FIG1_CURVES], rows)
    slopes = figure1_slopes(family)
    write_csv(out / f"{cfg.name}_slopes.csv", ["curve", "slope"], [(k, v) for k, v in slopes.items()])
    svg_path = out / f"{cfg.name}.svg"
    plot_csv(csv_path, svg_path, "p", FIG1_CURVES, title="channel fidelity")
    return RunResult(csv_path, svg_path, {f"slope_{k}": v for k, v in slopes.items()})


def _resolve_plan(cfg: ExperimentConfig, code, table) -> RecoveryPlan:
    if cfg.plan == "optimal":
        return optimal_plan(table)[0]
    if cfg.plan == "standard":
        return standard_plan(code)
    choice = [int(v) for v in cfg.plan.replace(",", " ").split()]
    return RecoveryPlan(code, choice)


def _pauli_table(code, spec: dict):
    ch = channel_from_spec(spec)
    if not isinstance(ch, PauliChannel):
        raise ValueError(f"pauli-robustness needs Pauli channels, got {spec['type']}")
    return reduce_pauli_channel(code, ch)


def run_pauli_robustness(cfg: ExperimentConfig) -> RunResult:
    code = get_code(cfg.code)
    t0, tbar = _pauli_table(code, cfg.channel_a), _pauli_table(code, cfg.channel_b)
    plan0 = _resolve_plan(cfg, code, t0)
    report = delta_F_curve(t0, tbar, plan0, cfg.grid.values(), cfg.deltas)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{cfg.name}.csv"
    csv_path.write_text(report.to_csv())
    summary = {
        "gamma_zero": report.gamma_zero,
        "optimality_gap": report.optimality_gap,
        "measured_switch": measure_switch_point(t0, tbar),
        "switch_points": " ".join(_fmt(g) for g in report.switch_points),
    }
    for d, g in report.gamma_delta.items():
        summary[f"gamma_delta[{d!r}]"] = g
    write_csv(out / f"{cfg.name}_summary.csv", ["quantity", "value"], list(summary.items()))
    return RunResult(csv_path, None, summary)


def _refine_peaks(code, c0, c1, gammas, sols, grid: GridSpec, settings: SolverSettings):
    """Bisect the intervals with the largest Choi derivative down to ``refine_width``."""
    gammas, sols = list(gammas), list(sols)
    dims = (1 << code.k, 1 << code.n)

    def deriv():
        return choi_derivative_norms(gammas, [s.choi.m for s in sols])[:-1]

    d = deriv()
    interior = [i for i in range(len(d)) if (i == 0 or d[i] >= d[i - 1]) and (i == len(d) - 1 or d[i] >= d[i + 1])]
    peaks = sorted(interior, key=lambda i: -d[i])[: grid.refine_peaks]
    for g_left in sorted((gammas[i] for i in peaks), reverse=True):
        i = gammas.index(g_left)
        lo, hi = i, i + 1
        while gammas[hi] - gammas[lo] > grid.refine_width:
            mid = (gammas[lo] + gammas[hi]) / 2
            c = (1 - mid) * c0 + mid * c1
            sol = solve_optimal_recovery(c, dims, **settings.kwargs(), warm_start=sols[lo])
            gammas.insert(hi, mid)
            sols.insert(hi, sol)
            left = np.linalg.norm(sols[hi].choi.m - sols[lo].choi.m) / (gammas[hi] - gammas[lo])
            right = np.linalg.norm(sols[hi + 1].choi.m - sols[hi].choi.m) / (gammas[hi + 1] - gammas[hi])
            if left < right:
                lo, hi = hi, hi + 1
    return np.array(gammas), sols


def mixing_data(cfg: ExperimentConfig, diagnostics=None) -> dict:
    """Solve the mixing path and return its columns (before any I/O)."""
    code = get_code(cfg.code)
    e0 = tensor_iid(to_kraus(channel_from_spec(cfg.channel_a)), code.n)
    e1 = tensor_iid(to_kraus(channel_from_spec(cfg.channel_b)), code.n)
    path = solve_mixing_path(
        code, e0, e1, cfg.grid.values(), cfg.solver, cfg.cold_start, cfg.workers, diagnostics
    )
    gammas, sols = path.gammas, path.solutions
    if cfg.grid.refine:
        gammas, sols = _refine_peaks(code, path.c0, path.c1, gammas, sols, cfg.grid, cfg.solver)
    dims = (1 << code.k, 1 << code.n)
    ends = {}
    for end, c in ((0.0, path.c0), (1.0, path.c1)):
        hit = np.flatnonzero(gammas == end)
        if len(hit):
            ends[end] = sols[hit[0]]
        else:
            ends[end] = solve_optimal_recovery(c, dims, **cfg.solver.kwargs())
    fixed = {}
    for end, sol in ends.items():
        f0, f1 = choi_fidelity(sol.choi, path.c0), choi_fidelity(sol.choi, path.c1)
        fixed[end] = (1 - gammas) * f0 + gammas * f1
    raw = choi_derivative_norms(gammas, [s.choi.m for s in sols])
    top = raw.max()
    converged = [s.converged for s in sols] + [s.converged for s in ends.values()]
    return {
        "gamma": gammas,
        "F_opt": np.array([s.fidelity for s in sols]),
        "F_fixed_from_0": fixed[0.0],
        "F_fixed_from_1": fixed[1.0],
        "derivative_norm": raw / top if top > 0 else raw,
        "derivative_raw": raw,
        "converged": np.array([s.converged for s in sols]),
        "all_converged": all(converged),
        "iterations": np.array([s.iterations for s in sols]),
        "endpoints": ends,
        "observables": (path.c0, path.c1),
    }


MIXING_COLUMNS = ("gamma", "F_opt", "F_fixed_from_0", "F_fixed_from_1", "derivative_norm", "converged")


def run_mixing(cfg: ExperimentConfig, diagnostics=None) -> RunResult:
    data = mixing_data(cfg, diagnostics)
    out = Path(cfg.out_dir)
    csv_path = out / f"{cfg.name}.csv"
    rows = zip(*(data[c] if c != "converged" else data[c].astype(int) for c in MIXING_COLUMNS))
    write_csv(csv_path, MIXING_COLUMNS, ([float(v) for v in row[:-1]] + [int(row[-1])] for row in rows))
    svg_path = out / f"{cfg.name}.svg"
    plot_csv(csv_path, svg_path, "gamma", MIXING_COLUMNS[1:5], title=cfg.name)
    peak = int(np.argmax(data["derivative_norm"][:-1]))
    summary = {"peak_gamma": float(data["gamma"][peak]), "points": len(data["gamma"])}
    return RunResult(csv_path, svg_path, summary, failed=not data["all_converged"])


RUNNERS = {"figure1": run_figure1, "mixing": run_mixing, "pauli-robustness": run_pauli_robustness}


def run(cfg: ExperimentConfig, **kwargs) -> RunResult:
    return RUNNERS[cfg.kind](cfg, **kwargs)
