"""Hilbert-Schmidt kernels of ``(A + i)^-1 chi(H0)`` and constant-energy curves.

Both kernel functions return the *squared* Hilbert-Schmidt norm, evaluated by
iterated trapezoid quadrature and refined by doubling until two successive
levels agree to 0.5%.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.integrate import cumulative_trapezoid
from skimage import measure

from .spectral import SmoothCutoff

__all__ = [
    "QuadratureNotConverged",
    "hs_norm_continuous",
    "hs_norm_discrete_1d",
    "discrete_kernel",
    "level_curves",
    "band_energy",
]

REFINE_TOL = 5e-3
MAX_LEVELS = 14


class QuadratureNotConverged(RuntimeError):
    pass


def _refine(evaluate, resolution: int) -> float:
    prev = evaluate(resolution)
    n = resolution
    for _ in range(MAX_LEVELS):
        n *= 2
        cur = evaluate(n)
        if cur == prev or abs(cur - prev) <= REFINE_TOL * abs(cur):
            return cur
        prev = cur
    raise QuadratureNotConverged(f"no 0.5% agreement after {MAX_LEVELS} doublings (last value {cur!r})")


def hs_norm_continuous(cutoff: SmoothCutoff, resolution: int = 256) -> float:
    """``||(A - i/2)^-1 chi(H0)||_HS^2`` for the one-dimensional continuum Laplacian.

    In momentum space the operator is ``phi -> (i/xi) int_0^xi chi(t^2) phi(t) dt``;
    the squared norm is ``int int 1[t between 0 and xi] xi^-2 |chi(t^2)|^2``.
    Beyond ``sqrt(b)`` the inner integral is constant and the ``xi`` tail is
    added exactly.
    """
    a, b = cutoff.support()
    if a <= 0:
        raise ValueError(f"cutoff support [{a}, {b}] touches zero; the kernel is not square integrable")
    if cutoff.height == 0:
        return 0.0
    lo, hi = math.sqrt(a), math.sqrt(b)

    def evaluate(n):
        xi = np.linspace(lo, hi, n + 1)
        inner = cumulative_trapezoid(cutoff(xi * xi) ** 2, xi, initial=0.0)
        half = np.trapezoid(inner / xi**2, xi) + inner[-1] / hi
        return 2.0 * half  # xi < 0 contributes the same by parity of chi(t^2)

    return _refine(evaluate, resolution)


def band_energy(theta):
    return 2.0 - 2.0 * np.cos(theta)


def discrete_kernel(theta, t, cutoff: SmoothCutoff):
    """Kernel of ``(A + i)^-1 chi(H0)`` on ``L^2([-pi, pi])`` for ``d = 1``.

    ``K(theta, t) = 1[t between 0 and theta] sin(t/2) chi(2 - 2cos t) / (2i sin(theta/2) sin t)``.
    """
    theta, t = np.broadcast_arrays(np.asarray(theta, float), np.asarray(t, float))
    between = ((t > 0) & (t < theta)) | ((t < 0) & (t > theta))
    chi = cutoff(band_energy(t))
    out = np.zeros(theta.shape, dtype=complex)
    m = between & (chi != 0)
    out[m] = np.sin(t[m] / 2) * chi[m] / (2j * np.sin(theta[m] / 2) * np.sin(t[m]))
    if t.ndim:
        return out
    return complex(out)


def _check_discrete_support(cutoff: SmoothCutoff) -> None:
    a, b = cutoff.support()
    if a <= 0 or b >= 4:
        raise ValueError(f"cutoff support [{a}, {b}] must stay away from the band edges 0 and 4")


def hs_norm_discrete_1d(cutoff: SmoothCutoff, resolution: int = 256) -> float:
    """``||(A + i)^-1 chi(H0)||_HS^2`` on l^2(Z) from the Fourier-space kernel."""
    _check_discrete_support(cutoff)
    if cutoff.height == 0:
        return 0.0

    def evaluate(n):
        # half-line [0, pi]; the integrand is even in theta
        th = np.linspace(0.0, math.pi, n + 1)
        chi = cutoff(band_energy(th))
        g = np.zeros_like(th)
        m = chi != 0
        g[m] = (np.sin(th[m] / 2) / np.sin(th[m])) ** 2 * chi[m] ** 2
        inner = cumulative_trapezoid(g, th, initial=0.0)
        f = np.zeros_like(th)
        f[1:] = inner[1:] / (4.0 * np.sin(th[1:] / 2) ** 2)
        return 2.0 * np.trapezoid(f, th)

    return _refine(evaluate, resolution)


def level_curves(energy: float, resolution: int = 512) -> list[np.ndarray]:
    """Polylines of ``2 - 2cos th1 + 2 - 2cos th2 = E`` in ``[-pi, pi]^2``.

    Marching squares with linear edge interpolation; each polyline is an
    ``(m, 2)`` array of ``(th1, th2)`` vertices.
    """
    if not 0 < energy < 8:
        warnings.warn(f"energy {energy} outside (0, 8): no level curves", stacklevel=2)
        return []
    th = np.linspace(-math.pi, math.pi, resolution)
    f = band_energy(th)[:, None] + band_energy(th)[None, :]
    h = th[1] - th[0]
    return [-math.pi + c * h for c in measure.find_contours(f, energy)]
