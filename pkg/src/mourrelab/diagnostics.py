"""Mourre-estimate checks and finite-size compactness probes.

The compactness classifiers compare two or more box sizes. Their thresholds
(1% stabilization, 1.5x growth of the above-threshold count) are calibration
choices for desk-scale boxes, not asymptotic statements; every report carries
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .commutators import closed_form_v_commutator
from .dynamics import EstimateSeries
from .lattice import (
    DirichletSpectrum,
    LatticeBox,
    PotentialSpec,
    apply_conjugate,
    build_conjugate,
    build_laplacian,
)
from .linalg import EigenSystem, eig_hermitian, singular_values
from .spectral import Interval, SmoothCutoff, functional_calculus, spectral_columns, weight_from_square

__all__ = [
    "STABILIZATION_TOL",
    "GROWTH_RATIO",
    "TAU_FRACTION",
    "MourreResult",
    "mourre_constant",
    "mourre_scan",
    "scalar_mourre_oracle",
    "CompactnessProfile",
    "compactness_profile",
    "cutoff_weight_operator",
    "conjugate_square",
    "WeylReport",
    "weyl_sequence_test",
    "RegularityReport",
    "regularity_probe",
    "classify_profile",
    "form_weight",
]

STABILIZATION_TOL = 0.01
GROWTH_RATIO = 1.5
TAU_FRACTION = 0.5
LOW_BAND = 0.1


@dataclass
class MourreResult:
    c: float
    rank: int
    n_low: int
    lowest: np.ndarray
    interval: Interval

    @property
    def empty(self) -> bool:
        return self.rank == 0


def mourre_constant(eig_h: EigenSystem, C: np.ndarray, interval: Interval) -> MourreResult:
    """Smallest eigenvalue of ``E_I C E_I`` on the range of ``E_I``.

    ``n_low`` counts compression eigenvalues below ``c + 0.1``: a handful of
    isolated low values is the finite-rank shadow of the compact remainder.
    """
    cols = spectral_columns(eig_h, interval)
    if cols.shape[1] == 0:
        return MourreResult(math.nan, 0, 0, np.empty(0), interval)
    K = cols.conj().T @ C @ cols
    ev = np.linalg.eigvalsh(0.5 * (K + K.conj().T))
    c = float(ev[0])
    return MourreResult(c, cols.shape[1], int(np.sum(ev < c + LOW_BAND)), ev[:8].copy(), interval)


def mourre_scan(eig_h: EigenSystem, C: np.ndarray, grid, delta: float = 0.1, **metadata) -> EstimateSeries:
    """``c(lambda)`` on windows ``(lambda - delta, lambda + delta)``; empty windows are skipped."""
    grid = np.asarray(grid, dtype=float)
    # rotate once; each window is then a principal sub-block
    Ce = eig_h.vectors.conj().T @ C @ eig_h.vectors
    Ce = 0.5 * (Ce + Ce.conj().T)
    kept, values, ranks, lows, skipped = [], [], [], [], []
    for lam in grid:
        inside = np.flatnonzero(Interval(lam - delta, lam + delta).contains(eig_h.values))
        if len(inside) == 0:
            skipped.append(float(lam))
            continue
        ev = np.linalg.eigvalsh(Ce[np.ix_(inside, inside)])
        kept.append(lam)
        values.append(float(ev[0]))
        ranks.append(len(inside))
        lows.append(int(np.sum(ev < ev[0] + LOW_BAND)))
    meta = {"delta": delta, **metadata}
    if skipped:
        meta["skipped_empty"] = ",".join(repr(x) for x in skipped)
    return EstimateSeries(
        "lambda",
        np.array(kept),
        np.array(values),
        kind="mourre-scan",
        value_name="c",
        columns={"rank": np.array(ranks, dtype=float), "n_low": np.array(lows, dtype=float)},
        metadata=meta,
    )


def scalar_mourre_oracle(lam: float, delta: float) -> float:
    """Infimum of ``x(4 - x)`` over ``(lam - delta, lam + delta) cap [0, 4]``."""
    lo, hi = max(lam - delta, 0.0), min(lam + delta, 4.0)
    return min(lo * (4.0 - lo), hi * (4.0 - hi))


# ---------------------------------------------------------------------------
# compactness


@dataclass
class CompactnessProfile:
    sizes: list[int]
    sigma: dict[int, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def first(self, j: int = 1) -> dict[int, float]:
        return {L: float(s[j - 1]) if len(s) >= j else 0.0 for L, s in self.sigma.items()}

    def relative_change(self, j: int = 1) -> float:
        """Relative change of ``sigma_j`` over the last two sizes."""
        a, b = (self.first(j)[L] for L in self.sizes[-2:])
        if a == b:
            return 0.0
        return abs(b - a) / max(abs(a), abs(b))

    def decay_ratio(self, j: int, size: int | None = None) -> float:
        s = self.sigma[size if size is not None else self.sizes[-1]]
        if len(s) < j or s[0] == 0:
            return 0.0
        return float(s[j - 1] / s[0])

    def count_above(self, tau: float) -> dict[int, int]:
        return {L: int(np.sum(s > tau)) for L, s in self.sigma.items()}

    def growth(self, tau: float | None = None) -> float:
        """Ratio of above-threshold counts between the last and first sizes.

        The default threshold is half of the first size's largest singular value.
        """
        if tau is None:
            tau = TAU_FRACTION * self.first(1)[self.sizes[0]]
        counts = self.count_above(tau)
        first, last = counts[self.sizes[0]], counts[self.sizes[-1]]
        if first == 0:
            return math.inf if last > 0 else 1.0
        return last / first


def compactness_profile(builder: Callable[[int], np.ndarray], sizes: Sequence[int], k: int | None = None) -> CompactnessProfile:
    """Leading singular values of ``builder(L)`` for each size."""
    sigma = {}
    for L in sizes:
        op = builder(L)
        kk = min(op.shape) if k is None else min(k, min(op.shape))
        sigma[L] = singular_values(op, kk)
    return CompactnessProfile(list(sizes), sigma)


def conjugate_square(box: LatticeBox) -> np.ndarray:
    """``A^2`` as a real symmetric matrix."""
    A = build_conjugate(box)
    a2 = np.real(A @ A)
    return 0.5 * (a2 + a2.T)


def cutoff_weight_operator(
    box: LatticeBox, s: float, cutoff: SmoothCutoff, solver: Callable[[np.ndarray], EigenSystem] | None = None
) -> np.ndarray:
    """``<A>^-s chi(H0)`` as a dense real matrix.

    Both factors are real: ``A^2`` is real symmetric and ``H0`` is real.
    ``solver`` defaults to :func:`eig_hermitian` (pass a cache lookup to reuse results).
    """
    solver = solver or (lambda op: eig_hermitian(op, check=False))
    weight = weight_from_square(solver(conjugate_square(box)), s)
    chi = functional_calculus(solver(build_laplacian(box)), cutoff)
    return weight @ chi


# ---------------------------------------------------------------------------
# Weyl sequence (d = 2)


def _bump(x):
    out = np.zeros_like(x, dtype=float)
    m = np.abs(x) < 1
    out[m] = np.exp(-1.0 / (1.0 - x[m] ** 2))
    return out


def _l2_norm_on(f, a: float, b: float) -> float:
    x = np.linspace(a, b, 200001)
    return math.sqrt(np.trapezoid(f(x) ** 2, x))


@dataclass
class WeylReport:
    series: EstimateSeries
    m: float
    window: tuple[float, float]
    overlaps: np.ndarray
    n_list: list[int]

    def column(self, name: str) -> np.ndarray:
        return self.series.columns[name] if name != "chi_norm" else self.series.values


def _required_half_width(width: float, points: int = 4) -> int:
    # the theta-grid must put `points` samples on a support of length `width`
    return int(math.ceil((points * 2 * math.pi / width - 1) / 2))


def weyl_sequence_test(
    box: LatticeBox,
    cutoff: SmoothCutoff,
    nu: int,
    n_list: Sequence[int],
    center: float = 0.0,
) -> WeylReport:
    """Lattice counterpart of ``Psi_n(th1, th2) = sqrt(n) psi1((th1 - T) n) psi2(th2)``.

    ``psi1`` is the standard bump on [-1, 1]; ``psi2`` is a bump on a
    ``th2``-window chosen so that the support of every ``Psi_n`` stays in the
    plateau region of the cutoff. Vectors are built from samples on the DFT
    grid of the box, so ``||u|| = (sum |Psi|^2 dth^2)^(1/2)`` exactly.
    Operators act matrix-free.
    """
    if box.d != 2:
        raise ValueError("the Weyl sequence probe is implemented for d = 2")
    n_list = sorted(int(n) for n in n_list)
    if not n_list or n_list[0] < 1:
        raise ValueError("n_list must contain positive integers")
    N = box.side
    needed = _required_half_width(2.0 / n_list[-1])

    # th2-window: energies 2 - 2cos(th1) + 2 - 2cos(th2) stay inside the plateau
    p0, p1 = cutoff.plateau()
    extra = 2.0 - 2.0 * math.cos(min(1.0 / n_list[0], math.pi))
    lo_e, hi_e = max(p0, 0.0), min(p1 - extra, 4.0)
    if not lo_e < hi_e:
        raise ValueError(f"cutoff plateau [{p0}, {p1}] too narrow for n = {n_list[0]}")
    a2, b2 = math.acos(1.0 - lo_e / 2.0), math.acos(1.0 - hi_e / 2.0)
    needed = max(needed, _required_half_width(b2 - a2))
    if box.L < needed:
        raise ValueError(f"box half-width {box.L} too small to resolve n = {n_list[-1]}; need L >= {needed}")

    psi2 = lambda x: _bump((2.0 * x - (a2 + b2)) / (b2 - a2))  # noqa: E731
    c1 = _l2_norm_on(_bump, -1.0, 1.0)
    c2 = _l2_norm_on(psi2, a2, b2)

    k = np.arange(-box.L, box.L + 1)
    theta = 2.0 * np.pi * k / N
    dth = 2.0 * np.pi / N
    # wrap th1 - T onto [-pi, pi) so centers at +-pi work too
    rel = (theta - center + np.pi) % (2.0 * np.pi) - np.pi
    F = np.exp(-1j * np.outer(k, theta)) / math.sqrt(2.0 * np.pi)  # one (2pi)^-1/2 per axis

    spec = DirichletSpectrum(box)
    vecs, norms, chi_norms, a_norms = [], [], [], []
    for n in n_list:
        P = math.sqrt(n) * np.outer(_bump(rel * n) / c1, psi2(theta) / c2)
        u = F @ P @ F.T * dth * dth
        vecs.append(u.ravel())
        norms.append(np.linalg.norm(u))
        chi_norms.append(np.linalg.norm(spec.apply(cutoff, u)))
        v = u.astype(complex)
        for _ in range(nu):
            v = apply_conjugate(box, v) + 1j * v
        a_norms.append(np.linalg.norm(v))
    V = np.array(vecs)
    gram = np.abs(V.conj() @ V.T)
    # weak convergence: overlap with a fixed member of the sequence dies out
    overlap = gram[0] / math.sqrt(gram[0, 0])

    e_lo = 2.0 - 2.0 * math.cos(a2)
    e_hi = 2.0 - 2.0 * math.cos(b2) + extra
    m = float(np.min(np.abs(cutoff(np.linspace(e_lo, e_hi, 2001)))))
    series = EstimateSeries(
        "n",
        np.array(n_list, dtype=float),
        np.array(chi_norms),
        kind="weyl",
        value_name="chi_norm",
        columns={"norm": np.array(norms), "a_norm": np.array(a_norms), "overlap_first": overlap},
        metadata={"box": f"d=2,L={box.L}", "nu": nu, "m": m, "theta2_window": f"{a2!r},{b2!r}", "center": center},
    )
    return WeylReport(series, m, (a2, b2), gram, n_list)


# ---------------------------------------------------------------------------
# regularity


def form_weight(eig_h0: EigenSystem) -> np.ndarray:
    """``(H0 + 1)^(-1/2)``; ``H0 >= 0`` under the Dirichlet rule."""
    return functional_calculus(eig_h0, lambda x: (1.0 + x) ** -0.5)


@dataclass
class RegularityReport:
    specs: list[PotentialSpec]
    profiles: list[CompactnessProfile]
    classes: list[str]
    predicted: list[str]
    thresholds: dict

    def rows(self):
        for spec, prof, cls, pred in zip(self.specs, self.profiles, self.classes, self.predicted):
            yield spec, prof, cls, pred


def classify_profile(profile: CompactnessProfile) -> str:
    if profile.first(1)[profile.sizes[0]] == 0.0:
        return "compact-like"
    if profile.growth() >= GROWTH_RATIO:
        return "non-compact-like"
    if profile.relative_change(1) < STABILIZATION_TOL:
        return "compact-like"
    return "inconclusive"


def regularity_probe(
    d: int,
    specs: Sequence[PotentialSpec],
    sizes: Sequence[int] = (100, 200),
    k: int | None = None,
    solver: Callable[[np.ndarray], EigenSystem] | None = None,
) -> RegularityReport:
    """Singular-value profiles of ``(H0+1)^-1/2 [V, iA] (H0+1)^-1/2`` per potential.

    A decaying first moment ``|n| (V - tau V)(n) -> 0`` should give a
    compact-like profile; a bounded but non-vanishing one a plateau.
    """
    profiles, classes, predicted = [], [], []
    weights = {}
    for L in sizes:
        box = LatticeBox(d, L)
        weights[L] = form_weight((solver or eig_hermitian)(build_laplacian(box)))
    for spec in specs:
        prof = compactness_profile(
            lambda L: weights[L] @ closed_form_v_commutator(LatticeBox(d, L), spec) @ weights[L], sizes, k
        )
        prof.metadata["potential"] = spec.describe()
        profiles.append(prof)
        classes.append(classify_profile(prof))
        predicted.append("compact-like" if spec.decays_faster_than_first_moment() else "non-compact-like")
    thresholds = {"stabilization_tol": STABILIZATION_TOL, "growth_ratio": GROWTH_RATIO, "tau_fraction": TAU_FRACTION}
    return RegularityReport(list(specs), profiles, classes, predicted, thresholds)
