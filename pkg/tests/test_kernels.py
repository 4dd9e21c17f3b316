import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from mourrelab.kernels import (
    band_energy,
    discrete_kernel,
    hs_norm_continuous,
    hs_norm_discrete_1d,
    level_curves,
)
from mourrelab.spectral import SmoothCutoff

CHI = SmoothCutoff(1.0, 3.0, 0.25)


def test_zero_cutoff_gives_zero():
    assert hs_norm_continuous(SmoothCutoff(1.0, 4.0, 0.25, height=0.0)) == 0.0
    assert hs_norm_discrete_1d(CHI.scaled(0.0)) == 0.0


def test_continuous_matches_direct_double_integral():
    chi = SmoothCutoff(1.0, 4.0, 0.25)
    lo, hi = 1.0, 2.0
    # |xi| > 0 half: int_{lo}^{inf} xi^-2 int_{lo}^{min(xi, hi)} chi(t^2)^2 dt dxi
    inner = lambda xi: integrate.quad(lambda t: chi(t * t) ** 2, lo, min(xi, hi), limit=200)[0]  # noqa: E731
    body = integrate.quad(lambda xi: inner(xi) / xi**2, lo, hi, limit=200)[0]
    tail = inner(hi) / hi
    assert hs_norm_continuous(chi) == pytest.approx(2 * (body + tail), rel=5e-3)


def test_continuous_scaling_and_support():
    chi = SmoothCutoff(1.0, 4.0, 0.25)
    v = hs_norm_continuous(chi)
    assert 0 < v < math.inf
    assert hs_norm_continuous(chi.scaled(2.0)) == pytest.approx(4 * v, rel=1e-12)
    with pytest.raises(ValueError):
        hs_norm_continuous(SmoothCutoff(0.0, 2.0, 0.25))


def test_discrete_matches_direct_double_integral():
    f = lambda t, th: abs(discrete_kernel(th, t, CHI)) ** 2  # noqa: E731
    half = integrate.dblquad(f, 0.0, math.pi, 0.0, lambda th: th, epsabs=1e-10)[0]
    assert hs_norm_discrete_1d(CHI) == pytest.approx(2 * half, rel=5e-3)


def test_discrete_support_rejection():
    with pytest.raises(ValueError):
        hs_norm_discrete_1d(SmoothCutoff(0.0, 2.0, 0.25))
    with pytest.raises(ValueError):
        hs_norm_discrete_1d(SmoothCutoff(2.0, 4.0, 0.25))


def test_kernel_parity():
    th = np.linspace(-math.pi, math.pi, 129)
    T, S = np.meshgrid(th, th, indexing="ij")
    K = discrete_kernel(T, S, CHI)
    np.testing.assert_allclose(np.abs(K), np.abs(K[::-1, ::-1]), atol=1e-13)
    assert discrete_kernel(1.0, 2.0, CHI) == 0


def test_level_curve_accuracy_and_marked_points():
    res = 512
    h = 2 * math.pi / (res - 1)
    polys = level_curves(4.0, res)
    pts = np.concatenate(polys)
    f = band_energy(pts[:, 0]) + band_energy(pts[:, 1])
    assert np.max(np.abs(f - 4.0)) < 4 * h
    for target in [(math.pi / 2, math.pi / 2), (0.0, math.pi), (math.pi, 0.0)]:
        assert np.min(np.hypot(*(pts - target).T)) <= 2 * h


def test_level_curves_shrink_near_zero():
    pts = np.concatenate(level_curves(0.1, 512))
    assert np.max(np.hypot(pts[:, 0], pts[:, 1])) < 0.5
    # small-energy expansion: theta^2 ~ E near the origin
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert np.mean(r) == pytest.approx(math.sqrt(0.1), rel=0.05)


@pytest.mark.parametrize("E", [0.0, 8.0, -1.0, 9.0])
def test_level_curves_out_of_range(E):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert level_curves(E) == []
    assert caught
