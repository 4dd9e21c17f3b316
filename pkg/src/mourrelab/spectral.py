"""Spectral projectors, functional calculus and the continuous-subspace surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import LatticeBox, PotentialSpec, build_hamiltonian
from .linalg import EigenSystem, eig_hermitian

__all__ = [
    "Interval",
    "SmoothCutoff",
    "StateClassification",
    "spectral_projector",
    "spectral_columns",
    "functional_calculus",
    "weight_operator",
    "weight_from_square",
    "classify_bound_states",
]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    open_lo: bool = True
    open_hi: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval: lo={self.lo} >= hi={self.hi}")

    def contains(self, x):
        x = np.asarray(x)
        left = x > self.lo if self.open_lo else x >= self.lo
        right = x < self.hi if self.open_hi else x <= self.hi
        return left & right

    def disjoint(self, other: "Interval") -> bool:
        return self.hi <= other.lo or other.hi <= self.lo

    def __str__(self):
        return f"{'(' if self.open_lo else '['}{self.lo!r},{self.hi!r}{')' if self.open_hi else ']'}"


@dataclass(frozen=True)
class SmoothCutoff:
    """Plateau bump: 0 outside [a, b], 1 on [a+w, b-w], quintic smoothstep ramps (C^2)."""

    a: float
    b: float
    w: float
    height: float = 1.0

    def __post_init__(self):
        if not (self.w > 0 and self.a + 2 * self.w <= self.b):
            raise ValueError(f"ramp width {self.w} does not fit in [{self.a}, {self.b}]")

    @staticmethod
    def _ramp(u):
        u = np.clip(u, 0.0, 1.0)
        return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.height * self._ramp((x - self.a) / self.w) * self._ramp((self.b - x) / self.w)

    def support(self) -> tuple[float, float]:
        return self.a, self.b

    def plateau(self) -> tuple[float, float]:
        return self.a + self.w, self.b - self.w

    def scaled(self, factor: float) -> "SmoothCutoff":
        return SmoothCutoff(self.a, self.b, self.w, self.height * factor)


def spectral_columns(eig: EigenSystem, interval: Interval) -> np.ndarray:
    """Eigenvectors spanning the range of the spectral projector on ``interval``."""
    return eig.vectors[:, interval.contains(eig.values)]


def spectral_projector(eig: EigenSystem, interval: Interval) -> np.ndarray:
    cols = spectral_columns(eig, interval)
    return cols @ cols.conj().T


def functional_calculus(eig: EigenSystem, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``V f(Lambda) V*``. Rejects ``f`` that is non-finite at an eigenvalue."""
    fx = np.asarray(f(eig.values))
    if fx.shape != eig.values.shape:
        fx = np.broadcast_to(fx, eig.values.shape)
    bad = ~np.isfinite(fx)
    if np.any(bad):
        lam = eig.values[np.argmax(bad)]
        raise ValueError(f"function is not finite at eigenvalue {lam!r}")
    out = (eig.vectors * fx) @ eig.vectors.conj().T
    if np.isrealobj(fx):
        out = 0.5 * (out + out.conj().T)
    return out


def weight_operator(eig_a: EigenSystem, s: float) -> np.ndarray:
    """``<A>^-s = (1 + A^2)^(-s/2)`` from an eigensystem of ``A``."""
    if not s > 0:
        raise ValueError(f"weight exponent must be positive, got {s}")
    return functional_calculus(eig_a, lambda a: (1.0 + a * a) ** (-s / 2))


def weight_from_square(eig_a2: EigenSystem, s: float) -> np.ndarray:
    """Same weight from an eigensystem of ``A^2``.

    ``A`` is i times a real antisymmetric matrix, so ``A^2`` is real symmetric
    and large boxes can be handled in real arithmetic.
    """
    if not s > 0:
        raise ValueError(f"weight exponent must be positive, got {s}")
    return functional_calculus(eig_a2, lambda a2: (1.0 + np.clip(a2, 0.0, None)) ** (-s / 2))


@dataclass
class StateClassification:
    bound: np.ndarray
    boundary_mass: np.ndarray
    eigenvalues: np.ndarray
    shell_fraction: float
    mass_threshold: float
    stability_tol: float
    thresholds: dict = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return ["bound" if b else "scattering-like" for b in self.bound]

    @property
    def bound_energies(self) -> np.ndarray:
        return self.eigenvalues[self.bound]

    def continuous_projector(self, eig: EigenSystem) -> np.ndarray:
        cols = eig.vectors[:, ~self.bound]
        return cols @ cols.conj().T

    def bound_expectations(self, eig: EigenSystem, op: np.ndarray) -> np.ndarray:
        """<u, op u> for each bound eigenvector (e.g. op = A^2 as a domain diagnostic)."""
        cols = eig.vectors[:, self.bound]
        return np.real(np.einsum("ij,ij->j", cols.conj(), op @ cols))


def classify_bound_states(
    eig: EigenSystem,
    box: LatticeBox,
    spec: PotentialSpec,
    shell_fraction: float = 0.2,
    mass_threshold: float = 1e-3,
    stability_tol: float = 1e-6,
    enlarge: int = 5,
) -> StateClassification:
    """Label eigenvectors as bound or scattering-like.

    A state is bound when its mass on the outer shell (sup-norm beyond
    ``(1 - shell_fraction) L``) is below ``mass_threshold`` and its eigenvalue
    reappears within ``stability_tol`` after enlarging the box by ``enlarge``.
    """
    if not 0 < shell_fraction < 1:
        raise ValueError(f"shell_fraction must lie in (0, 1), got {shell_fraction}")
    outer = box.sup_norm() > (1.0 - shell_fraction) * box.L
    mass = np.sum(np.abs(eig.vectors[outer]) ** 2, axis=0)
    candidates = mass < mass_threshold
    stable = np.zeros_like(candidates)
    if np.any(candidates):
        bigger = LatticeBox(box.d, box.L + enlarge)
        other = eig_hermitian(build_hamiltonian(bigger, spec)).values
        for j in np.flatnonzero(candidates):
            stable[j] = np.min(np.abs(other - eig.values[j])) <= stability_tol
    bound = candidates & stable
    return StateClassification(
        bound=bound,
        boundary_mass=mass,
        eigenvalues=eig.values.copy(),
        shell_fraction=shell_fraction,
        mass_threshold=mass_threshold,
        stability_tol=stability_tol,
        thresholds={"shell_fraction": shell_fraction, "mass_threshold": mass_threshold, "enlarge": enlarge},
    )
