"""Operators of the discrete Schrodinger model on finite boxes of Z^d.

A box holds the sites ``n`` with ``max_i |n_i| <= L``, enumerated
lexicographically (first coordinate slowest). Truncation is Dirichlet: the
Laplacian keeps its full diagonal ``2d`` and simply loses the hoppings that
leave the box, so ``0 <= H0 <= 4d`` holds exactly.

Dense builders return numpy arrays. For boxes too large to store densely,
:func:`apply_laplacian`, :func:`apply_conjugate` and :class:`DirichletSpectrum`
act on site arrays of shape ``(2L+1,)*d`` directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "LatticeBox",
    "PotentialSpec",
    "FAMILIES",
    "bracket",
    "potential_values",
    "build_laplacian",
    "build_shift",
    "build_position",
    "build_conjugate",
    "build_potential",
    "build_hamiltonian",
    "apply_laplacian",
    "apply_conjugate",
    "DirichletSpectrum",
]


@dataclass(frozen=True)
class LatticeBox:
    d: int
    L: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.L < 0:
            raise ValueError(f"half-width must be >= 0, got {self.L}")

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def n_sites(self) -> int:
        return self.side**self.d

    @cached_property
    def sites(self) -> np.ndarray:
        """Integer coordinates, one row per basis index."""
        r = np.arange(-self.L, self.L + 1)
        grids = np.meshgrid(*([r] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def index(self, site) -> int:
        site = tuple(int(x) for x in np.atleast_1d(site))
        if len(site) != self.d or any(abs(x) > self.L for x in site):
            raise ValueError(f"site {site} is not in the box d={self.d}, L={self.L}")
        return int(np.ravel_multi_index(tuple(x + self.L for x in site), self.shape))

    def site(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.sites[index])

    def origin(self) -> int:
        return self.index((0,) * self.d)

    def delta(self, site=None) -> np.ndarray:
        """Unit vector at ``site`` (default: origin)."""
        v = np.zeros(self.n_sites)
        v[self.origin() if site is None else self.index(site)] = 1.0
        return v

    def sup_norm(self) -> np.ndarray:
        return np.max(np.abs(self.sites), axis=1)

    def interior(self, margin: int) -> np.ndarray:
        """Mask of sites at l-infinity distance >= ``margin`` from the boundary."""
        if margin >= self.L:
            raise ValueError(f"margin {margin} leaves no interior in a box of half-width {self.L}")
        return self.sup_norm() <= self.L - margin


def bracket(x):
    """Japanese bracket sqrt(1 + x^2)."""
    return np.sqrt(1.0 + np.square(x))


# ---------------------------------------------------------------------------
# potentials

FAMILIES = ("zero", "point", "short_range", "oscillating", "custom")


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative potential family.

    ``short_range``  V(n) = <n>^-alpha
    ``oscillating``  V(n) = sin(omega * sum(n)) / <n>^alpha
    ``point``        strength at a single site
    ``custom``       explicit table {site: value}, zero elsewhere

    ``<n> = sqrt(1 + |n|^2)`` with ``|n|`` the l1 norm.
    """

    family: str = "zero"
    alpha: float = 1.0
    omega: float = 1.0
    strength: float = 0.0
    site: tuple[int, ...] | None = None
    table: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}; expected one of {FAMILIES}")
        if self.family in ("short_range", "oscillating") and not self.alpha > 0:
            raise ValueError(f"decay exponent must be positive, got {self.alpha}")
        if not math.isfinite(self.strength):
            raise ValueError("strength must be a finite real number")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def point(cls, site, strength: float):
        return cls("point", site=tuple(int(x) for x in np.atleast_1d(site)), strength=float(strength))

    @classmethod
    def short_range(cls, alpha: float):
        return cls("short_range", alpha=float(alpha))

    @classmethod
    def oscillating(cls, omega: float, alpha: float):
        return cls("oscillating", omega=float(omega), alpha=float(alpha))

    @classmethod
    def custom(cls, table: Mapping):
        return cls("custom", table={tuple(int(x) for x in np.atleast_1d(k)): float(v) for k, v in table.items()})

    @property
    def has_closed_form(self) -> bool:
        return self.family != "custom"

    def describe(self) -> str:
        if self.family == "zero":
            return "zero"
        if self.family == "point":
            return f"point(site={','.join(map(str, self.site or ()))}, strength={self.strength!r})"
        if self.family == "short_range":
            return f"short_range(alpha={self.alpha!r})"
        if self.family == "oscillating":
            return f"oscillating(omega={self.omega!r}, alpha={self.alpha!r})"
        return f"custom({len(self.table)} sites)"

    def decays_faster_than_first_moment(self) -> bool:
        """Whether ``|n| (V - tau V)(n) -> 0`` for this family."""
        if self.family == "oscillating":
            if math.isclose(math.sin(self.omega / 2), 0.0, abs_tol=1e-12):
                return True
            return self.alpha > 1
        return True


def potential_values(spec: PotentialSpec, sites: np.ndarray) -> np.ndarray:
    """Evaluate V on an array of integer sites (shape ``(m, d)``).

    Sites may lie outside any box; closed-form families are evaluated exactly,
    custom tables return zero off the table.
    """
    sites = np.atleast_2d(sites)
    fam = spec.family
    if fam == "zero":
        return np.zeros(len(sites))
    if fam == "point":
        target = np.asarray(spec.site if spec.site is not None else (0,) * sites.shape[1])
        if target.shape[0] != sites.shape[1]:
            raise ValueError(f"point site {tuple(target)} has the wrong dimension for d={sites.shape[1]}")
        return np.where(np.all(sites == target, axis=1), spec.strength, 0.0)
    l1 = np.sum(np.abs(sites), axis=1).astype(float)
    if fam == "short_range":
        return bracket(l1) ** (-spec.alpha)
    if fam == "oscillating":
        return np.sin(spec.omega * np.sum(sites, axis=1)) * bracket(l1) ** (-spec.alpha)
    return np.array([spec.table.get(tuple(int(x) for x in s), 0.0) for s in sites])


# ---------------------------------------------------------------------------
# dense builders


def _neighbor_indices(box: LatticeBox, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (src, dst) with dst = src + e_axis, both inside the box."""
    if not 0 <= axis < box.d:
        raise ValueError(f"axis {axis} out of range for d={box.d}")
    src = np.flatnonzero(box.sites[:, axis] < box.L)
    # lexicographic order: stepping axis i moves by side**(d-1-i)
    stride = box.side ** (box.d - 1 - axis)
    return src, src + stride


def build_shift(box: LatticeBox, axis: int) -> np.ndarray:
    """Truncated shift ``(S psi)(n) = psi(n - e_axis)``; axis counts from 0."""
    S = np.zeros((box.n_sites, box.n_sites))
    src, dst = _neighbor_indices(box, axis)
    S[dst, src] = 1.0
    return S


def build_position(box: LatticeBox, axis: int) -> np.ndarray:
    if not 0 <= axis < box.d:
        raise ValueError(f"axis {axis} out of range for d={box.d}")
    return np.diag(box.sites[:, axis].astype(float))


def build_laplacian(box: LatticeBox) -> np.ndarray:
    H = np.diag(np.full(box.n_sites, 2.0 * box.d))
    for axis in range(box.d):
        src, dst = _neighbor_indices(box, axis)
        H[dst, src] = -1.0
        H[src, dst] = -1.0
    return H


def build_conjugate(box: LatticeBox) -> np.ndarray:
    """Generator of dilations ``(i/2) sum_i (S_i - S_i*) N_i + N_i (S_i - S_i*)``.

    Between ``n`` and ``n + e_i`` the entries are ``+-(i/2)(2 n_i + 1)``.
    """
    A = np.zeros((box.n_sites, box.n_sites), dtype=complex)
    for axis in range(box.d):
        src, dst = _neighbor_indices(box, axis)
        w = 0.5 * (2.0 * box.sites[src, axis] + 1.0)
        A[dst, src] = 1j * w
        A[src, dst] = -1j * w
    return A


def build_potential(box: LatticeBox, spec: PotentialSpec) -> np.ndarray:
    return np.diag(potential_values(spec, box.sites))


def build_hamiltonian(box: LatticeBox, spec: PotentialSpec) -> np.ndarray:
    H = build_laplacian(box)
    H[np.diag_indices_from(H)] += potential_values(spec, box.sites)
    return H


# ---------------------------------------------------------------------------
# matrix-free action on site arrays of shape box.shape


def _shift_array(u: np.ndarray, axis: int, step: int) -> np.ndarray:
    out = np.zeros_like(u)
    src = [slice(None)] * u.ndim
    dst = [slice(None)] * u.ndim
    if step > 0:
        src[axis], dst[axis] = slice(None, -step), slice(step, None)
    else:
        src[axis], dst[axis] = slice(-step, None), slice(None, step)
    out[tuple(dst)] = u[tuple(src)]
    return out


def apply_laplacian(box: LatticeBox, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u).reshape(box.shape)
    out = 2.0 * box.d * u
    for axis in range(box.d):
        out = out - _shift_array(u, axis, 1) - _shift_array(u, axis, -1)
    return out


def apply_conjugate(box: LatticeBox, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex).reshape(box.shape)
    pos = np.arange(-box.L, box.L + 1, dtype=float)
    out = np.zeros_like(u)
    for axis in range(box.d):
        shape = [1] * box.d
        shape[axis] = box.side
        n = pos.reshape(shape)
        diff = lambda v: _shift_array(v, axis, 1) - _shift_array(v, axis, -1)  # noqa: E731
        out += 0.5j * (diff(n * u) + n * diff(u))
    return out


class DirichletSpectrum:
    """Separable spectral calculus of the truncated Laplacian.

    The truncated ``H0`` is the Kronecker sum of ``d`` copies of the 1d
    Dirichlet matrix with eigenpairs ``2 - 2cos(k pi/(N+1))`` and sine vectors,
    so ``f(H0)`` can be applied without forming any ``N^d x N^d`` matrix.
    """

    def __init__(self, box: LatticeBox):
        self.box = box
        N = box.side
        k = np.arange(1, N + 1)
        self.mu = 2.0 - 2.0 * np.cos(k * np.pi / (N + 1))
        j = np.arange(1, N + 1)
        self.U = np.sqrt(2.0 / (N + 1)) * np.sin(np.outer(j, k) * np.pi / (N + 1))

    def energies(self) -> np.ndarray:
        grids = np.meshgrid(*([self.mu] * self.box.d), indexing="ij")
        return sum(grids)

    def apply(self, f: Callable[[np.ndarray], np.ndarray], u: np.ndarray) -> np.ndarray:
        c = np.asarray(u).reshape(self.box.shape)
        for axis in range(self.box.d):
            c = np.moveaxis(np.tensordot(self.U.T, c, axes=(1, axis)), 0, axis)
        c = c * f(self.energies())
        for axis in range(self.box.d):
            c = np.moveaxis(np.tensordot(self.U, c, axes=(1, axis)), 0, axis)
        return c


def enumerate_sites(d: int, L: int):
    """Lexicographic site iterator (reference for the index map)."""
    return itertools.product(range(-L, L + 1), repeat=d)
