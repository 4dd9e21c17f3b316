"""Experiment runners, one per config kind, and the report orchestration.

Each runner returns an :class:`ExperimentResult` holding the primary series
(written as CSV), a figure description and the kind's threshold checks.
"""

from __future__ import annotations

import logging
import math
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .cache import EigenCache
from .commutators import closed_form_commutator, interior_mismatch, matrix_commutator
from .config import ExperimentConfig, format_potential
from .diagnostics import (
    GROWTH_RATIO,
    STABILIZATION_TOL,
    TAU_FRACTION,
    compactness_profile,
    conjugate_square,
    cutoff_weight_operator,
    mourre_constant,
    mourre_scan,
    regularity_probe,
    scalar_mourre_oracle,
    weyl_sequence_test,
)
from .dynamics import (
    EstimateSeries,
    cesaro_gram,
    cesaro_plateau,
    cesaro_quadrature,
    heisenberg_expectation,
    kato_series,
    pointwise_estimate_series,
    pre_reflection_horizon,
    rage_average,
    rajchman_transform,
    top_state,
)
from .kernels import hs_norm_continuous, hs_norm_discrete_1d, level_curves
from .lattice import LatticeBox, PotentialSpec, build_conjugate, build_hamiltonian, build_laplacian
from .linalg import EigenSystem, hs_norm, max_abs, op_norm
from .report import Check, Line, PlotSpec, render_figure, summary_text, write_csv
from .spectral import (
    Interval,
    classify_bound_states,
    functional_calculus,
    spectral_columns,
    spectral_projector,
    weight_from_square,
)

__all__ = ["RunContext", "ExperimentResult", "RUNNERS", "run_experiment", "run_all", "write_reports"]

log = logging.getLogger(__name__)

# frozen acceptance thresholds
COMMUTATOR_RTOL = 1e-12
MOURRE_RTOL = 0.02
MOURRE_ATOL = 1e-3
THRESHOLD_DIP = 0.2
DECAY_FACTOR = 0.3
GRAM_QUAD_RTOL = 0.02
KATO_PLATEAU = 0.10
RAJCHMAN_DIP = 0.2
BALLISTIC_SLACK = 0.05
WEYL_FLOOR = 0.9
WEYL_SPREAD = 1.3
HS_RTOL = 0.05


@dataclass
class RunContext:
    cache: EigenCache = field(default_factory=lambda: EigenCache(enabled=False))

    def eig(self, op: np.ndarray) -> EigenSystem:
        return self.cache.eigensystem(op)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: EstimateSeries | None
    checks: list[Check]
    plot: PlotSpec | None = None
    notes: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# shared helpers


def _box(cfg: ExperimentConfig) -> LatticeBox:
    return LatticeBox(cfg.d, cfg["L"])


def _base_meta(cfg: ExperimentConfig, box: LatticeBox | None = None, **extra) -> dict:
    meta = {"name": cfg.name}
    if box is not None:
        meta["box"] = f"d={box.d},L={box.L}"
    if "potential" in cfg.params:
        meta["potential"] = format_potential(cfg["potential"])
    meta.update(extra)
    return meta


def _localized_delta(eig: EigenSystem, box: LatticeBox, interval: Interval) -> np.ndarray:
    """Normalized ``E_I delta_0``."""
    cols = spectral_columns(eig, interval)
    psi = cols @ (cols.conj().T @ box.delta())
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError(f"E_I delta_0 vanishes for I = {interval}")
    return psi / norm


def _weight(ctx: RunContext, box: LatticeBox, s: float) -> np.ndarray:
    return weight_from_square(ctx.eig(conjugate_square(box)), s)


def _continuous(eig: EigenSystem, box: LatticeBox, spec: PotentialSpec):
    cls = classify_bound_states(eig, box, spec)
    return cls.continuous_projector(eig), cls


def _time_grid(t_end: float, step: float) -> np.ndarray:
    n = max(1, int(math.ceil(t_end / step - 1e-9)))
    return np.linspace(0.0, t_end, n + 1)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# runners


def run_commutator(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    A = build_conjugate(box)
    mism, bound, whole = [], [], []
    checks = []
    for spec in cfg["potentials"]:
        H = build_hamiltonian(box, spec)
        closed = closed_form_commutator(box, spec)
        mat = matrix_commutator(H, A)
        m = interior_mismatch(closed, mat, box, cfg["margin"])
        tol = COMMUTATOR_RTOL * max_abs(H)
        mism.append(m)
        bound.append(tol)
        whole.append(float(np.max(np.abs(closed - mat))))
        checks.append(Check(f"interior identity {format_potential(spec)}", m <= tol, f"mismatch {m:.3e} <= {tol:.3e}"))
    idx = np.arange(len(mism), dtype=float)
    meta = _base_meta(cfg, box, margin=cfg["margin"], potentials="; ".join(format_potential(p) for p in cfg["potentials"]))
    series = EstimateSeries(
        "potential_index",
        idx,
        np.array(mism),
        kind="commutator",
        value_name="interior_mismatch",
        columns={"tolerance": np.array(bound), "full_mismatch": np.array(whole)},
        metadata=meta,
    )
    floor = 1e-18
    plot = PlotSpec(
        [
            Line(idx, np.maximum(mism, floor), "interior", "o"),
            Line(idx, np.maximum(whole, floor), "whole box (boundary rows)", "s"),
            Line(idx, bound, "tolerance", "_"),
        ],
        xlabel="potential index",
        ylabel="max |closed form - matrix commutator|",
        yscale="log",
        title=f"commutator identity, d={box.d}, L={box.L}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_mourre_scan(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec = cfg["potential"]
    H = build_hamiltonian(box, spec)
    eig = ctx.eig(H)
    if cfg["commutator"] == "matrix":
        C = matrix_commutator(H, build_conjugate(box))
    else:
        C = closed_form_commutator(box, spec)
    step, delta = cfg["step"], cfg["delta"]
    grid = cfg["lambda"]
    if grid is None:
        count = int(round(4 * box.d / step))
        grid = [round(i * step, 12) for i in range(1, count)]
    series = mourre_scan(eig, C, grid, delta, **_base_meta(cfg, box, commutator=cfg["commutator"]))
    checks = []
    lines = [Line(series.grid, series.values, "c(lambda)", "o-")]
    if not len(series.grid):
        checks.append(Check("non-empty scan", False, "every window was empty"))
    if box.d == 1 and spec.family == "zero" and len(series.grid):
        oracle = np.array([scalar_mourre_oracle(lam, delta) for lam in series.grid])
        err = np.abs(series.values - oracle)
        allowed = MOURRE_RTOL * oracle + MOURRE_ATOL
        worst = int(np.argmax(err - allowed))
        checks.append(
            Check(
                "scalar oracle",
                bool(np.all(err <= allowed)),
                f"worst at lambda={float(series.grid[worst])!r}: |c - oracle| = {err[worst]:.3e}, allowed {allowed[worst]:.3e}",
            )
        )
        series.columns["oracle"] = oracle
        lines.append(Line(series.grid, oracle, "min x(4-x) on window", "-"))
    if box.d >= 2:
        at = {round(float(x), 9): v for x, v in zip(series.grid, series.values)}
        if 2.0 in at and 4.0 in at:
            ratio = at[4.0] / at[2.0]
            checks.append(Check("threshold dip", ratio < THRESHOLD_DIP, f"c(4)/c(2) = {_fmt(ratio)} < {THRESHOLD_DIP}"))
    if not checks:
        checks.append(Check("non-empty scan", True, f"{len(series.grid)} windows"))
    plot = PlotSpec(
        lines,
        xlabel="lambda",
        ylabel="c",
        title=f"Mourre constant, d={box.d}, L={box.L}, delta={delta!r}",
        vlines=[(4.0 * k, None) for k in range(1, box.d)],
    )
    return ExperimentResult(cfg, series, checks, plot)


def _quarter_means(t: np.ndarray, v: np.ndarray, t_max: float) -> list[float]:
    edges = np.linspace(0.0, t_max, 5)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (t >= lo) & (t <= hi)
        out.append(float(np.mean(v[m])) if np.any(m) else math.nan)
    return out


def run_propagation(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec, interval, s = cfg["potential"], cfg["interval"], cfg["s"]
    eig = ctx.eig(build_hamiltonian(box, spec))
    psi = _localized_delta(eig, box, interval)
    P_c, cls = _continuous(eig, box, spec)
    B = _weight(ctx, box, s) @ P_c @ spectral_projector(eig, interval)
    t_max = pre_reflection_horizon(box)
    times = _time_grid(cfg.get("t_end", t_max), cfg["t_step"])
    series = pointwise_estimate_series(eig, B, psi, times, box)
    series.kind = "propagation"
    series.metadata = {
        **_base_meta(cfg, box, interval=str(interval), s=s),
        "t_max": t_max,
        "bound_states": int(cls.bound.sum()),
    }
    v0 = float(series.values[0])
    vt = float(np.interp(t_max, series.grid, series.values))
    quarters = _quarter_means(series.grid, series.values, t_max)
    checks = [
        Check("decay by t_max", vt <= DECAY_FACTOR * v0, f"value(t_max) = {_fmt(vt)} <= {DECAY_FACTOR} * {_fmt(v0)}"),
        Check(
            "quarter-window trend",
            all(b < a for a, b in zip(quarters, quarters[1:])),
            "means " + ", ".join(_fmt(q) for q in quarters),
        ),
    ]
    plot = PlotSpec(
        [Line(series.grid, series.values, None)],
        xlabel="t",
        ylabel="||<A>^-s P_c E_I e^{-itH} psi||",
        yscale="log",
        vlines=[(t_max, "t_max")],
        title=f"pointwise decay, {format_potential(spec)}, L={box.L}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def _cesaro_setup(ctx: RunContext, box: LatticeBox, spec: PotentialSpec, interval: Interval, s: float):
    eig = ctx.eig(build_hamiltonian(box, spec))
    P_c, _ = _continuous(eig, box, spec)
    B = _weight(ctx, box, s) @ P_c @ spectral_projector(eig, interval)
    return eig, B


def run_cesaro(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec, interval, s = cfg["potential"], cfg["interval"], cfg["s"]
    eig, B = _cesaro_setup(ctx, box, spec, interval, s)
    Ts = np.array(sorted(cfg["T"]), dtype=float)
    norms, checks = [], []
    meta = _base_meta(cfg, box, interval=str(interval), s=s, quad_points=cfg["quad_points"])
    for T in Ts:
        M = cesaro_gram(eig, B, T)
        norms.append(op_norm(M))
        if T <= cfg["quad_T_max"]:
            q = cesaro_quadrature(eig, B, top_state(M), T, cfg["quad_points"])
            rel = abs(q - norms[-1]) / norms[-1]
            meta[f"quadrature_T{T:g}"] = q
            checks.append(Check(f"gram vs quadrature T={T:g}", rel <= GRAM_QUAD_RTOL, f"relative gap {rel:.3e}"))
    plateau = cesaro_plateau(eig, B)
    plateaus = {box.L: plateau}
    for L in cfg.get("plateau_sizes", []):
        if L not in plateaus:
            plateaus[L] = cesaro_plateau(*_cesaro_setup(ctx, LatticeBox(box.d, L), spec, interval, s))
    for L in sorted(plateaus):
        meta[f"plateau_L{L}"] = plateaus[L]
    checks.insert(0, Check("T-decay", norms[-1] < norms[0], f"||M_{Ts[-1]:g}|| = {_fmt(norms[-1])} < ||M_{Ts[0]:g}|| = {_fmt(norms[0])}"))
    if len(plateaus) > 1:
        lo, hi = min(plateaus), max(plateaus)
        checks.append(
            Check("plateau L-decay", plateaus[hi] < plateaus[lo], f"plateau(L={hi}) = {_fmt(plateaus[hi])} < plateau(L={lo}) = {_fmt(plateaus[lo])}")
        )
    series = EstimateSeries(
        "T", Ts, np.array(norms), kind="cesaro", value_name="norm_MT", columns={"plateau": np.full(len(Ts), plateau)}, metadata=meta
    )
    plot = PlotSpec(
        [Line(Ts, norms, "||M_T||", "o-")],
        hlines=[(plateau, "plateau")],
        xlabel="T",
        ylabel="sup Cesaro average",
        xscale="log",
        yscale="log",
        title=f"uniform Cesaro estimate, L={box.L}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_rage(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec = cfg["potential"]
    eig = ctx.eig(build_hamiltonian(box, spec))
    P_c, cls = _continuous(eig, box, spec)
    site = cfg.get("site", (0,) * box.d)
    W = np.diag(box.delta(site))
    Ts = np.array(sorted(cfg["T"]), dtype=float)
    values = np.array([rage_average(eig, W, P_c, T) for T in Ts])
    zero_w = rage_average(eig, np.zeros_like(W), P_c, Ts[0])
    zero_p = rage_average(eig, W, np.zeros_like(P_c), Ts[0])
    checks = [
        Check("decreasing in T", bool(np.all(np.diff(values) < 0)), ", ".join(_fmt(v) for v in values)),
        Check("W = 0 gives 0", zero_w == 0.0, repr(zero_w)),
        Check("P_c = 0 gives 0", zero_p == 0.0, repr(zero_p)),
    ]
    a2 = cls.bound_expectations(eig, conjugate_square(box))
    meta = _base_meta(
        cfg,
        box,
        site=",".join(map(str, site)),
        bound_states=int(cls.bound.sum()),
        bound_energies=" ".join(_fmt(e) for e in cls.bound_energies),
        bound_A2=" ".join(_fmt(v) for v in a2),
    )
    series = EstimateSeries("T", Ts, values, kind="rage", value_name="rage", metadata=meta)
    plot = PlotSpec(
        [Line(Ts, values, None, "o-")], xlabel="T", ylabel="||M_T|| with B = W P_c", xscale="log", yscale="log", title="uniform RAGE"
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_kato(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec, interval, s = cfg["potential"], cfg["interval"], cfg["s"]
    eig = ctx.eig(build_hamiltonian(box, spec))
    t_max = pre_reflection_horizon(box)
    T = cfg.get("T", t_max)
    series = kato_series(eig, _weight(ctx, box, s), interval, box.delta(), T, s=s)
    series.metadata = {**_base_meta(cfg, box), **series.metadata, "t_max": t_max}
    half = float(np.interp(t_max / 2, series.grid, series.values))
    full = float(np.interp(t_max, series.grid, series.values))
    increase = (full - half) / half if half > 0 else math.inf
    checks = [
        Check("non-decreasing", bool(np.all(np.diff(series.values) >= 0)), "running integral"),
        Check("plateau onset", increase < KATO_PLATEAU, f"increase over [t_max/2, t_max] = {increase:.3%} of value at t_max/2"),
    ]
    plot = PlotSpec(
        [Line(series.grid, series.values, "running integral"), Line(series.grid, series.columns["integrand"], "integrand", "--")],
        xlabel="t",
        vlines=[(t_max / 2, "t_max/2"), (t_max, "t_max")],
        title=f"Kato-type integral, {format_potential(spec)}, s={s!r}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_rajchman(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec = cfg["potential"]
    interval = cfg.get("interval", Interval(0.0, 4.0 * box.d))
    eig = ctx.eig(build_hamiltonian(box, spec))
    psi = box.delta()
    inside = eig.values[interval.contains(eig.values)]
    if len(inside) < 2:
        raise ValueError(f"fewer than two eigenvalues in {interval}")
    t_h = (len(inside) - 1) / (inside[-1] - inside[0])  # inverse mean level spacing
    times = _time_grid(cfg.get("t_end", 10.0 * t_h), cfg["t_step"])
    values = rajchman_transform(eig, psi, interval, times)
    v0 = abs(values[0])
    mod = np.abs(values)
    early, late = mod[times < t_h], mod[times >= t_h]
    checks = [
        Check("bounded by t=0", bool(np.all(mod <= v0 * (1 + 1e-12))), f"max |value| = {_fmt(mod.max())}, value(0) = {_fmt(v0)}"),
        Check("dip inside Heisenberg window", early.min() < RAJCHMAN_DIP * v0, f"min |value| for t < {_fmt(t_h)} is {_fmt(early.min())}"),
        Check(
            "revival after Heisenberg time",
            len(late) > 0 and late.max() > RAJCHMAN_DIP * v0,
            f"max |value| for t >= {_fmt(t_h)} is {_fmt(late.max()) if len(late) else 'n/a'}",
        ),
    ]
    meta = _base_meta(cfg, box, interval=str(interval), state="delta_0", heisenberg_time=t_h, t_max=pre_reflection_horizon(box))
    series = EstimateSeries("t", times, values, kind="rajchman", value_name="value", columns={"modulus": mod}, metadata=meta)
    plot = PlotSpec(
        [Line(times, np.maximum(mod, 1e-16), None)],
        xlabel="t",
        ylabel="|Fourier transform of spectral measure|",
        yscale="log",
        vlines=[(t_h, "Heisenberg time")],
        title=f"Rajchman transform, L={box.L}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_heisenberg(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    spec, interval = cfg["potential"], cfg["interval"]
    eig = ctx.eig(build_hamiltonian(box, spec))
    A = build_conjugate(box)
    psi = _localized_delta(eig, box, interval)
    C = closed_form_commutator(box, spec)
    res = mourre_constant(eig, C, interval)
    cols = spectral_columns(eig, interval)
    k = op_norm(cols.conj().T @ C @ cols)
    t_max = pre_reflection_horizon(box)
    times = _time_grid(cfg.get("t_end", t_max), cfg["t_step"])
    a_t = heisenberg_expectation(eig, A, psi, times)
    slope = np.empty_like(a_t)
    slope[0] = float(np.real(np.vdot(psi, C @ psi)))
    slope[1:] = (a_t[1:] - a_t[0]) / times[1:]
    window = (times >= 1.0) & (times <= t_max + 1e-9)
    lo, hi = res.c - BALLISTIC_SLACK, k + BALLISTIC_SLACK
    ok = bool(np.all((slope[window] >= lo) & (slope[window] <= hi)))
    checks = [
        Check(
            "ballistic sandwich",
            ok,
            f"slope in [{_fmt(slope[window].min())}, {_fmt(slope[window].max())}] vs bounds [{_fmt(lo)}, {_fmt(hi)}]",
        )
    ]
    meta = _base_meta(cfg, box, interval=str(interval), c=res.c, k=k, t_max=t_max)
    series = EstimateSeries("t", times, a_t, kind="heisenberg", value_name="A_f", columns={"slope": slope}, metadata=meta)
    plot = PlotSpec(
        [Line(times[1:], slope[1:], "(A_f(t) - A_f(0))/t")],
        hlines=[(res.c, "c"), (k, "k")],
        vlines=[(t_max, "t_max")],
        xlabel="t",
        ylabel="average velocity",
        title=f"ballistic transport, L={box.L}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_compactness(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    d, sizes, s, cutoff = cfg.d, sorted(cfg["sizes"]), cfg["s"], cfg["cutoff"]
    k = min(cfg["k"], LatticeBox(d, sizes[0]).n_sites)
    # full profiles feed the counts; only the leading k go to the CSV
    prof = compactness_profile(lambda L: cutoff_weight_operator(LatticeBox(d, L), s, cutoff, solver=ctx.eig), sizes)
    j = np.arange(1, k + 1, dtype=float)
    tau = TAU_FRACTION * prof.first(1)[sizes[0]]
    counts = prof.count_above(tau)
    checks = []
    if d == 1:
        rel = prof.relative_change(1)
        ratio = prof.decay_ratio(10) if k >= 10 else math.nan
        checks.append(Check("sigma_1 stabilizes", rel < STABILIZATION_TOL, f"relative change {rel:.3e}"))
        checks.append(Check("sigma_10/sigma_1", ratio < 0.1, f"{_fmt(ratio)} at L={sizes[-1]}"))
    else:
        g = prof.growth(tau)
        checks.append(Check("above-threshold count grows", g >= GROWTH_RATIO, f"counts {counts}, ratio {_fmt(g)}"))
    meta = {
        "name": cfg.name,
        "d": d,
        "s": s,
        "cutoff": f"{cutoff.a!r},{cutoff.b!r},{cutoff.w!r}",
        "tau": tau,
        **{f"count_L{L}": c for L, c in counts.items()},
    }
    cols = {f"sigma_L{L}": prof.sigma[L][:k] for L in sizes[:-1]}
    series = EstimateSeries("j", j, prof.sigma[sizes[-1]][:k], kind="compactness", value_name=f"sigma_L{sizes[-1]}", columns=cols, metadata=meta)
    plot = PlotSpec(
        [Line(j, np.maximum(prof.sigma[L][:k], 1e-18), f"L={L}", ".-") for L in sizes],
        hlines=[(tau, "tau")],
        xlabel="j",
        ylabel="sigma_j(<A>^-s chi(H0))",
        yscale="log",
        title=f"singular values, d={d}",
    )
    return ExperimentResult(cfg, series, checks, plot)


def run_weyl(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    box = _box(cfg)
    report = weyl_sequence_test(box, cfg["cutoff"], cfg["nu"], cfg["n"])
    ser = report.series
    chi, a = ser.values, ser.columns["a_norm"]
    spread = float(a.max() / a.min())
    checks = [
        Check("chi(H0) keeps the mass", bool(np.all(chi >= WEYL_FLOOR * report.m)), f"min {_fmt(chi.min())} >= {WEYL_FLOOR} * {_fmt(report.m)}"),
        Check("(A+i)^nu bounded in n", spread <= WEYL_SPREAD, f"max/min = {_fmt(spread)}"),
    ]
    ser.metadata = {"name": cfg.name, **ser.metadata}
    plot = PlotSpec(
        [
            Line(ser.grid, chi, "||chi(H0) Psi_n||", "o-"),
            Line(ser.grid, ser.columns["overlap_first"], "|<Psi_n0, Psi_n>|", "s--"),
            Line(ser.grid, a / a[0], "||(A+i)^nu Psi_n|| (relative)", "^-"),
        ],
        hlines=[(WEYL_FLOOR * report.m, "0.9 m")],
        xlabel="n",
        xscale="log",
        title=f"Weyl sequence, d=2, L={box.L}",
    )
    return ExperimentResult(cfg, ser, checks, plot)


def _slug(spec: PotentialSpec) -> str:
    return format_potential(spec).replace(":", "_").replace(",", "_").replace("|", "_").replace("=", "_")


def run_regularity(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    sizes = sorted(cfg["sizes"])
    k = min(cfg["k"], LatticeBox(cfg.d, sizes[0]).n_sites)
    rep = regularity_probe(cfg.d, cfg["potentials"], sizes, solver=ctx.eig)
    checks, cols, lines = [], {}, []
    j = np.arange(1, k + 1, dtype=float)
    for spec, prof, cls, pred in rep.rows():
        checks.append(
            Check(
                f"classify {format_potential(spec)}",
                cls == pred,
                f"{cls} (expected {pred}); sigma_1 change {prof.relative_change(1):.3e}, count ratio {_fmt(prof.growth())}",
            )
        )
        for L in sizes:
            cols[f"sigma_{_slug(spec)}_L{L}"] = prof.sigma[L][:k]
            lines.append(Line(j, np.maximum(prof.sigma[L][:k], 1e-18), f"{format_potential(spec)} L={L}", ".-"))
    first = next(iter(cols))
    values = cols.pop(first)
    meta = {"name": cfg.name, "d": cfg.d, "sizes": ",".join(map(str, sizes)), **rep.thresholds}
    series = EstimateSeries("j", j, values, kind="regularity", value_name=first, columns=cols, metadata=meta)
    plot = PlotSpec(lines, xlabel="j", ylabel="sigma_j", yscale="log", title="regularity probe")
    return ExperimentResult(cfg, series, checks, plot)


def run_hs_kernel(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    cutoff = cfg["cutoff"]
    q = hs_norm_discrete_1d(cutoff, cfg["resolution"])
    L_top = cfg["L"]
    sizes = sorted({max(1, L_top // 4), max(1, L_top // 2), L_top})
    values = []
    for L in sizes:
        box = LatticeBox(1, L)
        chi = functional_calculus(ctx.eig(build_laplacian(box)), cutoff)
        R = functional_calculus(ctx.eig(build_conjugate(box)), lambda a: 1.0 / (a + 1j))
        values.append(hs_norm(chi @ R) ** 2)
    rel = abs(values[-1] - q) / values[-1]
    checks = [Check("quadrature vs matrix", rel < HS_RTOL, f"quadrature {_fmt(q)}, matrix {_fmt(values[-1])} at L={L_top}, gap {rel:.3e}")]
    meta = {"name": cfg.name, "cutoff": f"{cutoff.a!r},{cutoff.b!r},{cutoff.w!r}", "quadrature": q, "quantity": "squared HS norm"}
    cc = cfg["continuum_cutoff"]
    try:
        meta["continuum"] = hs_norm_continuous(cc)
        meta["continuum_cutoff"] = f"{cc.a!r},{cc.b!r},{cc.w!r}"
    except ValueError as exc:
        meta["continuum"] = f"skipped ({exc})"
    series = EstimateSeries(
        "L", np.array(sizes, dtype=float), np.array(values), kind="hs-kernel", value_name="hs2_matrix",
        columns={"hs2_quadrature": np.full(len(sizes), q)}, metadata=meta,
    )
    plot = PlotSpec(
        [Line(series.grid, values, "matrix", "o-")],
        hlines=[(q, "quadrature")],
        xlabel="L",
        ylabel="||chi(H0)(A+i)^-1||_HS^2",
        title="Hilbert-Schmidt norm, d=1",
    )
    return ExperimentResult(cfg, series, checks, plot)


def _polyline_length(p: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))


def run_level_curves(cfg: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    res = cfg["resolution"]
    h = 2 * math.pi / (res - 1)
    tol = 2 * h
    energies = np.array(sorted(cfg["energies"]), dtype=float)
    lengths, counts, lines, sym_gap = [], [], [], 0.0
    curves = {}
    for E in energies:
        polys = level_curves(E, res)
        curves[E] = polys
        lengths.append(sum(_polyline_length(p) for p in polys))
        counts.append(len(polys))
        for p in polys:
            lines.append(Line(p[:, 0], p[:, 1], None, "-", "tab:red"))
        if polys:
            pts = np.concatenate(polys)
            tree = cKDTree(pts)
            for image in (pts * [-1, 1], pts * [1, -1], pts[:, ::-1]):
                sym_gap = max(sym_gap, float(tree.query(image)[0].max()))
    checks = [Check("symmetries", sym_gap <= tol, f"max distance of reflected vertices {sym_gap:.3e} <= {tol:.3e}")]
    if 4.0 in curves:
        pts = np.concatenate(curves[4.0]) if curves[4.0] else np.empty((0, 2))
        targets = [(math.pi / 2, math.pi / 2), (0.0, math.pi), (math.pi, 0.0)]
        dist = [float(np.min(np.hypot(*(pts - t).T))) if len(pts) else math.inf for t in targets]
        checks.append(Check("E=4 passes the marked points", max(dist) <= tol, ", ".join(f"{x:.2e}" for x in dist)))
    meta = {"name": cfg.name, "resolution": res, "grid_step": h}
    series = EstimateSeries("E", energies, np.array(lengths), kind="level-curves", value_name="curve_length",
                            columns={"polylines": np.array(counts, dtype=float)}, metadata=meta)
    ticks = ([-math.pi, -math.pi / 2, 0.0, math.pi / 2, math.pi], ["-pi", "-pi/2", "0", "pi/2", "pi"])
    plot = PlotSpec(
        lines,
        xlabel="theta_1",
        ylabel="theta_2",
        square=True,
        xlim=(-math.pi, math.pi),
        ylim=(-math.pi, math.pi),
        ticks=ticks,
        title="level curves of 4 - 2cos(theta_1) - 2cos(theta_2)",
    )
    return ExperimentResult(cfg, series, checks, plot)


RUNNERS = {
    "commutator": run_commutator,
    "mourre-scan": run_mourre_scan,
    "propagation": run_propagation,
    "cesaro": run_cesaro,
    "rage": run_rage,
    "kato": run_kato,
    "rajchman": run_rajchman,
    "heisenberg": run_heisenberg,
    "compactness": run_compactness,
    "weyl": run_weyl,
    "regularity": run_regularity,
    "hs-kernel": run_hs_kernel,
    "level-curves": run_level_curves,
}


# ---------------------------------------------------------------------------
# orchestration


def run_experiment(cfg: ExperimentConfig, ctx: RunContext | None = None) -> ExperimentResult:
    """Run one experiment; errors are captured in the result rather than raised."""
    ctx = ctx or RunContext()
    try:
        return RUNNERS[cfg.kind](cfg, ctx)
    except Exception as exc:  # noqa: BLE001 - reported per experiment
        log.debug("experiment %s failed:\n%s", cfg.name, traceback.format_exc())
        return ExperimentResult(cfg, None, [], error=f"{type(exc).__name__}: {exc}")


def write_reports(result: ExperimentResult, out_dir: Path) -> list[Path]:
    name = result.config.name
    paths = []
    if result.series is not None:
        paths.append(write_csv(result.series, out_dir / f"{name}.csv"))
    if result.plot is not None:
        paths.append(render_figure(result.plot, out_dir / f"{name}.svg"))
    notes = {"error": result.error} if result.error else None
    summary = out_dir / f"{name}.summary.txt"
    summary.write_text(summary_text(name, result.config.kind, result.checks, notes), encoding="utf-8")
    paths.append(summary)
    return paths


def run_all(configs: list[ExperimentConfig], out_dir: str | Path, cache: EigenCache | None = None, jobs: int = 1) -> list[ExperimentResult]:
    """Run every experiment, write its reports and an overall ``summary.txt``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cache or EigenCache(enabled=False))

    def job(cfg):
        result = run_experiment(cfg, ctx)
        write_reports(result, out_dir)
        return result

    if jobs > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(job, configs))
    else:
        results = [job(cfg) for cfg in configs]
    lines = []
    for r in results:
        status = "ERROR" if r.error else ("PASS" if r.passed else "FAIL")
        lines.append(f"{status} {r.config.name} [{r.config.kind}]" + (f": {r.error}" if r.error else ""))
        lines.extend("  " + c.line() for c in r.checks)
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return results
