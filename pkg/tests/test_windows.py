"""Window, partition, and weight kernel tests.

Scalar reference values were derived independently of the implementation
(closed-form binomial identities and high-order quadrature) and are
frozen here as literals.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msl import windows as W

RNG = np.random.default_rng(20260816)


# ---------------------------------------------------------------- window
def test_phi1_support():
    x = np.array([-0.3, -0.2500001, 0.2500001, 0.4, 1.0])
    assert np.all(W.phi1(x) == 0.0)
    x = np.linspace(-0.25, 0.25, 101)
    assert np.all(W.phi1(x) >= 0.0)
    assert W.phi1(0.0) == pytest.approx(W.AXIS_SCALE, rel=1e-15)


def test_phi1_hat_closed_form_vs_quadrature():
    # independent check of the sinc-sum FT against direct quadrature
    from scipy.integrate import quad
    for x in [0.0, 0.37, 1.0, 2.5, 7.1]:
        ref, _ = quad(lambda xi: W.phi1(xi) * np.cos(2 * np.pi * xi * x),
                      -0.25, 0.25, limit=200, epsabs=1e-14)
        assert W.phi1_hat(x) == pytest.approx(ref, abs=1e-12)


def test_phi1_hat_frozen_values():
    # unscaled phi1_hat(0) = C(4,2)/2^5 = 0.1875; min on [0,1] at x = 1
    assert W.phi1_hat(0.0) == pytest.approx(W.AXIS_SCALE * 0.1875, rel=1e-14)
    assert W.phi1_hat(1.0) == pytest.approx(W.AXIS_SCALE * 0.169765272631355,
                                            rel=1e-12)


def test_axis_scale_normalization():
    # scale is chosen so the tensor product's minimum over the unit ball
    # is exactly 1; the minimizer is the sphere pole (1, 0, 0)
    pole = W.phi1_hat(1.0) * W.phi1_hat(0.0) ** 2
    assert pole == pytest.approx(1.0, rel=1e-12)
    from msl.geometry import fibonacci_sphere
    pts = fibonacci_sphere(4096)
    vals = (W.phi1_hat(pts[:, 0]) * W.phi1_hat(pts[:, 1])
            * W.phi1_hat(pts[:, 2]))
    assert vals.min() >= 1.0 - 1e-9


def test_int_phi1_sq_binomial_identity():
    from scipy.integrate import quad
    ref, _ = quad(lambda xi: W.phi1(xi) ** 2, -0.25, 0.25,
                  limit=200, epsabs=1e-13)
    assert W.INT_PHI1_SQ == pytest.approx(ref, rel=1e-12)
    assert W.INT_PHI1_SQ == pytest.approx(W.AXIS_SCALE**2 * 70.0 / 512.0,
                                          rel=1e-15)


def test_tail_bound():
    x = np.linspace(8.0, 400.0, 200001)
    assert np.max(np.abs(W.phi1_hat(x)) * x**5) <= W.AXIS_SCALE * W.TAIL_C5


# ------------------------------------------------------------- partition
def test_partition_sums_to_one():
    u = np.concatenate([np.linspace(0.0, 1.0, 41),
                        RNG.uniform(-3.0, 3.0, 64)])
    j = np.arange(-44, 45)
    s = W.Psi(u[:, None] - j[None, :]).sum(axis=1)
    assert np.abs(s - 1.0).max() <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0,
                 allow_nan=False, allow_infinity=False))
def test_partition_sum_property(u):
    j = np.arange(-44, 45)
    assert abs(float(W.Psi(u - j).sum()) - 1.0) <= 1e-9


def test_psi_nonnegative():
    u = np.linspace(-40.0, 40.0, 4001)
    assert np.all(W.Psi(u) >= 0.0)


def test_psi_center_value():
    assert W.psi_cell_peak() == pytest.approx(0.252969504401232, abs=1e-9)


def test_cumulative_monotone_and_total():
    u = np.linspace(-36.0, 36.0, 2001)
    c = W.cumulative_phi1_hat_sq(u)
    assert np.all(np.diff(c) >= -1e-15)
    assert c[0] == 0.0
    assert c[-1] == pytest.approx(W.INT_PHI1_SQ, rel=1e-12)


def test_psi_sqrt_sum_localization_constant():
    v = W.psi_sqrt_sum_1d()
    assert 2.74 <= v <= 2.76


# -------------------------------------------------------- autocorrelation
def test_rho1_support_and_center():
    eta = np.array([-0.75, -0.5000001, 0.5000001, 3.0])
    assert np.all(W.rho1(eta) == 0.0)
    assert W.rho1(np.array([0.0]))[0] == pytest.approx(W.INT_PHI1_SQ,
                                                       rel=1e-13)


def test_rho1_symmetry():
    eta = RNG.uniform(0.0, 0.5, 32)
    assert np.allclose(W.rho1(eta), W.rho1(-eta), rtol=0, atol=1e-14)


def test_rho1_fourier_inversion():
    # |phi1_hat(x)|^2 = int rho1(eta) e^{2 pi i eta x} d eta
    from scipy.special import roots_legendre
    gx, gw = roots_legendre(96)
    eta = 0.5 * gx
    wq = 0.5 * gw
    for x in [0.0, 0.3, 1.7, 5.2]:
        val = np.sum(W.rho1(eta) * np.cos(2 * np.pi * eta * x) * wq)
        assert val == pytest.approx(W.phi1_hat_sq(x), abs=1e-10)


# ------------------------------------------------------------------ weight
def test_ball_ft_center_is_volume():
    for radius in (1.0, 2.0, 0.5):
        assert W.ball_ft(radius, 0.0) == pytest.approx(
            4.0 * np.pi * radius**3 / 3.0, rel=1e-12)
    # series/exact continuity across the small-argument switch
    r = np.array([1e-7, 1.0000001e-6, 9.999999e-7, 1e-5])
    v = W.ball_ft(1.0, r)
    assert np.all(np.isfinite(v))
    assert np.abs(np.diff(v)).max() < 1e-6


def test_shell_hat_center():
    assert W.shell_hat(0.0) == pytest.approx(W.SHELL_VOLUME, rel=1e-12)
    assert W.SHELL_VOLUME == pytest.approx(28.0 * np.pi / 3.0, rel=1e-15)


def test_w_hat_compact_support():
    pts = np.array([[0.51, 0.0, 0.0], [0.2, -0.6, 0.1], [0.0, 0.0, 0.55],
                    [0.7, 0.7, 0.7]])
    assert np.all(W.w_hat(pts) == 0.0)


def test_w_hat_center_equals_mass():
    assert W.w_hat(np.zeros(3)) == pytest.approx(W.w_mass(), rel=1e-12)


def test_w_mass_frozen():
    assert W.W_MASS_FACTOR == pytest.approx(30.3215314335047, abs=1e-10)
    assert W.w_mass() == pytest.approx(2175.367172850994, rel=1e-10)


def test_dropped_shell_mass_bound():
    # geometric continuation over shells k >= 1 has relative mass
    # sum_{k>=1} 2^{-100 k} * vol(shell_k)/vol(shell_0) <= 8 * 2^-100
    bound = 8.0 * W.SHELL_VOLUME * 2.0**-100
    assert bound <= 2e-28


def test_shell_conv_matches_direct_quadrature():
    def direct(xp, n=56):
        ax = np.linspace(-2 + 2.0 / n, 2 - 2.0 / n, n)
        X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
        r2 = X**2 + Y**2 + Z**2
        m = (r2 >= 1.0) & (r2 <= 4.0)
        h = ax[1] - ax[0]
        v = (W.phi1_hat_sq(xp[0] - X[m]) * W.phi1_hat_sq(xp[1] - Y[m])
             * W.phi1_hat_sq(xp[2] - Z[m]))
        return v.sum() * h**3

    for p in [np.zeros(3), np.array([1.0, 0.5, -0.3]),
              np.array([-2.0, 1.5, 0.25])]:
        ref = direct(p)
        assert W.shell_conv_eval(p) == pytest.approx(ref, rel=0.02)


def test_w_eval_positive():
    pts = RNG.uniform(-13.0, 13.0, size=(512, 3))
    assert np.all(W.w_eval(pts) > 0.0)
    # w(0) = phi1_hat(0)^6 + shell term
    w0 = W.w_eval(np.zeros(3))
    assert w0 > W.phi1_hat(0.0) ** 6


# ------------------------------------------------------------- transitions
def test_smoothstep_profile():
    assert W.smoothstep_c2(0.0) == 0.0
    assert W.smoothstep_c2(1.0) == 1.0
    assert W.smoothstep_c2(0.5) == pytest.approx(0.5, rel=1e-14)
    h = 1e-5
    assert abs(W.smoothstep_c2(h) - W.smoothstep_c2(0.0)) < 1e-9
    assert abs(W.smoothstep_c2(1.0) - W.smoothstep_c2(1.0 - h)) < 1e-9
    t = np.linspace(0, 1, 101)
    assert np.all(np.diff(W.smoothstep_c2(t)) >= 0.0)


def test_plateau_and_lowpass():
    assert W.plateau(0.3, 0.5, 1.0) == 1.0
    assert W.plateau(-1.2, 0.5, 1.0) == 0.0
    assert 0.0 < W.plateau(0.75, 0.5, 1.0) < 1.0
    r = np.array([0.0, 0.49, 0.5, 0.75, 1.0, 2.0])
    v = W.radial_lowpass(r, 1.0)
    assert v[0] == 1.0 and v[1] == 1.0 and v[2] == 1.0
    assert 0.0 < v[3] < 1.0
    assert v[4] == 0.0 and v[5] == 0.0
