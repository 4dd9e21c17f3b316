"""Exact time evolution in the eigenbasis and the dynamical estimates built on it.

All propagators are ``V exp(-it Lambda) V*``. Cesaro averages are evaluated in
closed form: for ``M_T = (1/T) int_0^T e^{itH} B*B e^{-itH} dt`` the eigenbasis
entries are ``(B*B)_jk phi_T(lambda_j - lambda_k)``, so the supremum of the
time-averaged ``||B e^{-itH} psi||^2`` over unit ``psi`` is exactly
``||M_T||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeBox
from .linalg import EigenSystem, op_norm
from .spectral import Interval

__all__ = [
    "EstimateSeries",
    "pre_reflection_horizon",
    "evolve",
    "evolve_many",
    "pointwise_estimate_series",
    "cesaro_phase",
    "cesaro_gram",
    "uniform_cesaro",
    "top_state",
    "cesaro_quadrature",
    "cesaro_plateau",
    "rage_average",
    "kato_integral",
    "kato_series",
    "rajchman_transform",
    "heisenberg_expectation",
]

QUAD_STEP = 0.1
_TAYLOR_CUTOFF = 1e-6
_DEGENERACY_TOL = 1e-12


@dataclass
class EstimateSeries:
    """A measured quantity on a strictly increasing parameter grid."""

    param: str
    grid: np.ndarray
    values: np.ndarray
    kind: str = ""
    value_name: str = "value"
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.ndim != 1 or self.values.shape != self.grid.shape:
            raise ValueError(f"grid {self.grid.shape} and values {self.values.shape} must be matching 1d arrays")
        if len(self.grid) > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("parameter grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")
        for name, col in self.columns.items():
            if np.shape(col) != self.grid.shape:
                raise ValueError(f"column {name!r} does not match the grid")

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def at(self, x: float):
        return self.values[int(np.argmin(np.abs(self.grid - x)))]


def pre_reflection_horizon(box: LatticeBox) -> float:
    """``0.8 L / v_max`` with ``v_max = 2d`` the largest group speed of the Laplacian."""
    return 0.8 * box.L / (2.0 * box.d)


def evolve(eig: EigenSystem, psi: np.ndarray, t: float) -> np.ndarray:
    """``exp(-itH) psi``."""
    c = eig.coefficients(psi)
    return eig.vectors @ (np.exp(-1j * t * eig.values) * c)


def evolve_many(eig: EigenSystem, psi: np.ndarray, times) -> np.ndarray:
    """Columns are ``exp(-i t_j H) psi``."""
    times = np.asarray(times, dtype=float)
    c = eig.coefficients(psi)
    return eig.vectors @ (np.exp(-1j * np.outer(eig.values, times)) * c[:, None])


def _batched_norms(B: np.ndarray, eig: EigenSystem, psi: np.ndarray, times, batch: int = 256) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    out = np.empty(len(times))
    # B V once, then only phases change
    BV = B @ eig.vectors
    c = eig.coefficients(psi)
    for start in range(0, len(times), batch):
        ts = times[start : start + batch]
        states = BV @ (np.exp(-1j * np.outer(eig.values, ts)) * c[:, None])
        out[start : start + batch] = np.linalg.norm(states, axis=0)
    return out


def pointwise_estimate_series(
    eig: EigenSystem, B: np.ndarray, psi: np.ndarray, times, box: LatticeBox | None = None, **metadata
) -> EstimateSeries:
    """``t -> ||B exp(-itH) psi||`` for a caller-composed observable ``B``."""
    values = _batched_norms(B, eig, psi, times)
    meta = dict(metadata)
    if box is not None:
        meta.setdefault("box", f"d={box.d},L={box.L}")
        meta["t_max"] = pre_reflection_horizon(box)
    return EstimateSeries("t", times, values, kind="pointwise", metadata=meta)


def cesaro_phase(omega, T: float) -> np.ndarray:
    """``(e^{i omega T} - 1)/(i omega T)``, Taylor branch for ``|omega T| < 1e-6``."""
    x = np.asarray(omega, dtype=float) * T
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < _TAYLOR_CUTOFF
    xb = x[~small]
    out[~small] = np.expm1(1j * xb) / (1j * xb)
    xs = x[small]
    out[small] = 1.0 + 0.5j * xs - xs * xs / 6.0
    return out


def _gram_eigenbasis(eig: EigenSystem, B: np.ndarray) -> np.ndarray:
    BV = B @ eig.vectors
    return BV.conj().T @ BV


def cesaro_gram(eig: EigenSystem, B: np.ndarray, T: float) -> np.ndarray:
    """``M_T`` in the original basis (Hermitian, positive semidefinite)."""
    if not T > 0:
        raise ValueError(f"averaging time must be positive, got {T}")
    X = _gram_eigenbasis(eig, B)
    G = X * cesaro_phase(eig.values[:, None] - eig.values[None, :], T)
    M = eig.vectors @ G @ eig.vectors.conj().T
    return 0.5 * (M + M.conj().T)


def uniform_cesaro(eig: EigenSystem, B: np.ndarray, T: float) -> float:
    """``sup_{||psi||=1} (1/T) int_0^T ||B e^{-itH} psi||^2 dt``."""
    return op_norm(cesaro_gram(eig, B, T))


def top_state(M: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(M)
    return v[:, -1]


def cesaro_quadrature(eig: EigenSystem, B: np.ndarray, psi: np.ndarray, T: float, points: int = 64) -> float:
    """Trapezoid estimate of ``(1/T) int_0^T ||B e^{-itH} psi||^2 dt`` on ``points`` nodes."""
    ts = np.linspace(0.0, T, points)
    f = _batched_norms(B, eig, psi, ts) ** 2
    return float(np.trapezoid(f, ts) / T)


def cesaro_plateau(eig: EigenSystem, B: np.ndarray) -> float:
    """``T -> infinity`` limit: norm of ``sum_j P_j B*B P_j`` over eigenvalue clusters."""
    X = _gram_eigenbasis(eig, B)
    vals = eig.values
    # clusters of (numerically) degenerate eigenvalues form joint blocks
    breaks = np.flatnonzero(np.diff(vals) > _DEGENERACY_TOL) + 1
    best = 0.0
    for block in np.split(np.arange(len(vals)), breaks):
        if len(block) == 1:
            best = max(best, float(abs(X[block[0], block[0]])))
        else:
            sub = X[np.ix_(block, block)]
            best = max(best, float(np.max(np.linalg.eigvalsh(0.5 * (sub + sub.conj().T)))))
    return best


def rage_average(eig: EigenSystem, W: np.ndarray, P_c: np.ndarray, T: float) -> float:
    """Uniform RAGE quantity: ``||M_T||`` with ``B = W P_c``."""
    return uniform_cesaro(eig, W @ P_c, T)


def kato_series(eig: EigenSystem, weight: np.ndarray, interval: Interval, psi: np.ndarray, T: float, s: float | None = None):
    """Running trapezoid integral of ``||<A>^-s e^{-itH} E_J psi||^2`` on ``[0, T]``."""
    if not T > 0:
        raise ValueError(f"integration time must be positive, got {T}")
    steps = max(1, int(np.ceil(T / QUAD_STEP - 1e-9)))
    ts = np.linspace(0.0, T, steps + 1)
    inside = interval.contains(eig.values)
    c = eig.coefficients(psi) * inside
    localized = eig.vectors @ c
    f = _batched_norms(weight, eig, localized, ts) ** 2
    running = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(ts))])
    meta = {"interval": str(interval), "step": float(ts[1] - ts[0]) if len(ts) > 1 else 0.0}
    if s is not None:
        meta["s"] = s
        meta["s_above_half"] = s > 0.5
    return EstimateSeries("t", ts, running, kind="kato", value_name="integral", columns={"integrand": f}, metadata=meta)


def kato_integral(eig: EigenSystem, weight: np.ndarray, interval: Interval, psi: np.ndarray, T: float) -> float:
    return float(kato_series(eig, weight, interval, psi, T).values[-1])


def rajchman_transform(eig: EigenSystem, psi: np.ndarray, interval: Interval, t) -> np.ndarray | complex:
    """Fourier transform of the spectral measure of ``psi`` restricted to ``interval``."""
    weights = np.abs(eig.coefficients(psi)) ** 2 * interval.contains(eig.values)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.exp(-1j * np.outer(t_arr, eig.values)) @ weights
    return out if np.ndim(t) else complex(out[0])


def heisenberg_expectation(eig: EigenSystem, A: np.ndarray, psi: np.ndarray, t) -> np.ndarray | float:
    """``<psi_t, A psi_t>`` with ``psi_t = e^{-itH} psi``."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    X = eig.vectors.conj().T @ A @ eig.vectors
    c = eig.coefficients(psi)
    out = np.empty(len(t_arr))
    for i, ti in enumerate(t_arr):
        ct = np.exp(-1j * ti * eig.values) * c
        out[i] = np.real(np.vdot(ct, X @ ct))
    return out if np.ndim(t) else float(out[0])
