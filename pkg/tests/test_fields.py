"""Field engine tests: packet algebra, dense bridge, projections, weights.

The packet representation is exact (closed-form Gaussians), so most
tolerances here are near machine precision; the Monte Carlo checks get
statistical tolerances instead.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msl.fields import (DenseField, PacketField, PacketGroup, WeightSpec,
                        bush_field, convolve_weight, high_low_split,
                        stratified_mc, torus_stratified_mc)
from msl.geometry import MomentBlock, Parallelepiped, moment_blocks
from msl.windows import w_eval, w_mass

RNG = np.random.default_rng(20240817)


@pytest.fixture(scope="module")
def bush8():
    return bush_field(8)


@pytest.fixture(scope="module")
def dense8(bush8):
    return bush8.to_dense(box_half=8.0, n_grid=64)


# ----------------------------------------------------------------- groups
def test_bush_field_structure():
    f = bush_field(8)
    assert len(f.groups) == 2 and f.n_packets == 2
    f64 = bush_field(64)
    assert len(f64.groups) == 4
    with pytest.raises(ValueError):
        bush_field(10)


def test_packet_group_validation():
    blk = MomentBlock(2, 0)
    with pytest.raises(ValueError):
        PacketGroup(blk, np.zeros((2, 3)), np.ones(3))
    with pytest.raises(TypeError):
        PacketGroup(object(), np.zeros((1, 3)), np.ones(1))


def test_packet_peak_and_decay():
    g = PacketGroup(MomentBlock(2, 1), np.zeros((1, 3)), np.array([2.0 + 0j]))
    assert g.eval(np.zeros((1, 3)))[0] == pytest.approx(2.0)
    for box in g.envelope(5.0):
        vals = g.eval(box.vertices())
        # vertices sit at 5 Gaussian widths on all three axes at once,
        # so the envelope exponent there is exactly 3 * 25 / 2
        assert np.abs(vals).max() <= 2.0 * math.exp(-0.5 * 3 * 25.0) * (1 + 1e-9)


def test_eval_amp_linearity():
    blk = MomentBlock(2, 0)
    x0 = np.array([[0.0, 1.0, -2.0]])
    pts = RNG.normal(scale=3.0, size=(40, 3))
    a = PacketGroup(blk, x0, np.array([1.0 + 0.5j]))
    b = PacketGroup(blk, x0, np.array([3.0 - 1.0j]))
    ratio = b.eval(pts) / a.eval(pts)
    np.testing.assert_allclose(ratio, (3.0 - 1.0j) / (1.0 + 0.5j), rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-4.0, 4.0), st.floats(-4.0, 4.0), st.floats(-4.0, 4.0))
def test_eval_translation_covariance(d1, d2, d3):
    # moving centres and points together only rotates the global phase
    blk = MomentBlock(2, 1)
    delta = np.array([d1, d2, d3])
    pts = np.array([[0.3, -1.0, 2.0], [4.0, 0.0, -0.5]])
    g0 = PacketGroup(blk, np.zeros((1, 3)), np.ones(1, dtype=complex))
    g1 = PacketGroup(blk, delta[None, :], np.ones(1, dtype=complex))
    v0 = g0.eval(pts)
    v1 = g1.eval(pts + delta)
    np.testing.assert_allclose(np.abs(v0), np.abs(v1), atol=1e-13)


def test_spatial_spread_values(bush8):
    sp = bush8.groups[0].spatial_spread()
    np.testing.assert_allclose(sp, [4.456, 9.964, 9.661], rtol=2e-3)


# ---------------------------------------------------------------- L2 mass
def test_l2_mass_single_packet():
    g = PacketGroup(MomentBlock(2, 0), np.zeros((1, 3)),
                    np.array([2.0 - 1.0j]))
    expect = g.detM / (8.0 * math.pi**1.5) * 5.0
    assert g.l2_mass() == pytest.approx(expect, rel=1e-14)


def test_l2_mass_pair_formula():
    blk = MomentBlock(2, 0)
    d = np.array([1.5, -2.0, 0.5])
    amps = np.array([1.0 + 0j, 0.5 - 0.25j])
    g = PacketGroup(blk, np.stack([np.zeros(3), d]), amps)
    base = g.detM / (8.0 * math.pi**1.5)
    u = d @ g.Minv
    cross = (np.conj(amps[0]) * amps[1]
             * math.exp(-math.pi**2 * float(u @ u))
             * np.exp(-2j * np.pi * float(d @ g.xi_c)))
    expect = base * (np.abs(amps) ** 2).sum() + 2.0 * base * float(cross.real)
    assert g.l2_mass() == pytest.approx(expect, rel=1e-12)


def test_l2_mass_against_dense(bush8):
    # big box so wrap-around is negligible; cross-block frequency overlap
    # is e^{-49}-small, so int |f|^2 equals the square-function mass
    d = bush8.to_dense(box_half=32.0, n_grid=256)
    assert d.l2_spectral() == pytest.approx(bush8.l2_mass(), rel=1e-9)


# ----------------------------------------------------------- dense bridge
def test_to_dense_offset_on_lattice(dense8):
    L = 2.0 * dense8.box_half
    np.testing.assert_allclose(np.round(dense8.freq_offset * L),
                               dense8.freq_offset * L, atol=1e-12)


def test_eval_periodic_matches_dense(bush8, dense8):
    idx = RNG.integers(0, dense8.n_grid, size=(200, 3))
    pts = dense8.grid_points(idx)
    dv = dense8.values[idx[:, 0], idx[:, 1], idx[:, 2]]
    dv = dv * np.exp(2j * np.pi * pts @ dense8.freq_offset)
    pv = bush8.eval_periodic(pts, dense8.box_half)
    assert np.abs(pv - dv).max() <= 1e-12 * np.abs(dv).max()


def test_periodic_shifts_contain_origin(bush8):
    for g in bush8.groups:
        s = g.periodic_shifts(8.0)
        assert (np.abs(s).sum(axis=1) == 0.0).any()
        # unique shifts
        assert len(np.unique(s, axis=0)) == len(s)


def test_periodic_tolerance_consistency(bush8):
    pts = RNG.uniform(-8.0, 8.0, size=(20, 3))
    v_tight = bush8.eval_periodic(pts, 8.0, tol=1e-15)
    v_loose = bush8.eval_periodic(pts, 8.0, tol=1e-9)
    assert np.abs(v_tight - v_loose).max() <= 1e-6


def test_square_function_points_vs_groups(bush8):
    pts = RNG.uniform(-8.0, 8.0, size=(30, 3))
    sq = bush8.square_function(pts, box_half=8.0)
    manual = sum(np.abs(g.eval(pts, shifts=g.periodic_shifts(8.0))) ** 2
                 for g in bush8.groups)
    np.testing.assert_allclose(sq, manual, rtol=1e-12)


def test_riemann_integral_resolution_stable(bush8):
    i7 = [bush8.to_dense(box_half=8.0, n_grid=n).lp_integral(7)
          for n in (32, 64)]
    assert i7[0] == pytest.approx(i7[1], rel=1e-6)
    assert i7[1] == pytest.approx(80493.058, rel=1e-5)


# ------------------------------------------------------- lattice identities
def test_parseval(dense8):
    assert dense8.l2_spectral() == pytest.approx(dense8.lp_integral(2),
                                                 rel=1e-12)


def test_sharp_partition_identity(bush8, dense8):
    # the residual is the packet tail mass outside its own block, where
    # the exact q3 constraint curves away from the packet frame at ~6
    # Gaussian widths: amplitude e^{-18}, so ~1e-8 relative
    blocks = moment_blocks(2)
    recon = sum(dense8.project_block(b, "sharp").values for b in blocks)
    err = np.abs(recon - dense8.values).max()
    assert err <= 1e-7 * np.abs(dense8.values).max()


def test_sharp_projector_idempotent(dense8):
    blk = MomentBlock(2, 0)
    p1 = dense8.project_block(blk, "sharp")
    p2 = p1.project_block(blk, "sharp")
    assert np.abs(p2.values - p1.values).max() <= \
        1e-13 * np.abs(p1.values).max()


def test_sharp_projectors_disjoint(dense8):
    p01 = dense8.project_block(MomentBlock(2, 0), "sharp") \
                .project_block(MomentBlock(2, 1), "sharp")
    assert np.abs(p01.values).max() <= 1e-13 * np.abs(dense8.values).max()


def test_smooth_projection_identity_on_block(bush8, dense8):
    # a single-block field is untouched: its spectrum sits on the plateau
    single = PacketField([bush8.groups[0]]).to_dense(
        box_half=8.0, n_grid=64, offset=dense8.freq_offset)
    proj = single.project_block(MomentBlock(2, 0), "smooth")
    err = np.abs(proj.values - single.values).max()
    assert err <= 1e-10 * np.abs(single.values).max()


def test_smooth_projector_support(dense8):
    # the plateau vanishes identically outside the 2-dilate, so the
    # projected field carries no spectral mass there (idempotence does
    # not hold on multi-block fields: a neighbour's mass sits in the
    # transition ring at this scale, and that is by construction)
    blk = MomentBlock(2, 1)
    p1 = dense8.project_block(blk, "smooth")
    outside = p1.spectral_mass_outside(
        lambda pts: blk.contains_dilated(pts, 2.0 + 1e-9))
    assert outside <= 1e-25


def test_square_function_dense_vs_packets(bush8, dense8):
    sq = dense8.square_function(moment_blocks(2), "sharp")
    idx = RNG.integers(0, dense8.n_grid, size=(50, 3))
    pts = dense8.grid_points(idx)
    ref = bush8.square_function(pts, box_half=8.0)
    got = sq[idx[:, 0], idx[:, 1], idx[:, 2]]
    np.testing.assert_allclose(got, ref, rtol=1e-6, atol=1e-7 * ref.max())


def test_spectral_mass_outside_blocks(dense8):
    blocks = moment_blocks(2)

    def keep(pts):
        inside = np.zeros(pts.shape[:-1], dtype=bool)
        for b in blocks:
            inside |= b.contains(pts)
        return inside

    # power fraction of packet tails escaping the exact block union
    assert dense8.spectral_mass_outside(keep) <= 1e-12
    assert dense8.spectral_mass_outside(
        np.ones((64, 64, 64), dtype=bool)) == 0.0


def test_from_modes_and_spectrum_roundtrip():
    bh, n = 4.0, 32
    L = 2.0 * bh
    freqs = np.array([[0.25, -0.5, 0.125], [0.375, 0.0, -0.25]])
    coefs = np.array([1.0 + 1.0j, -0.5 + 0.25j])
    d = DenseField.from_modes(freqs, coefs, bh, n, offset=np.zeros(3))
    # lattice Parseval picks the two coefficients exactly
    assert d.lp_integral(2) == pytest.approx(
        L**3 * (np.abs(coefs) ** 2).sum(), rel=1e-12)
    rt = DenseField.from_spectrum(d.spectrum(), bh, d.freq_offset)
    assert np.abs(rt.values - d.values).max() <= 1e-12


# ----------------------------------------------------------------- weights
def test_weight_identity_map_matches_base():
    par = Parallelepiped(np.zeros(3), np.eye(3), np.full(3, 0.5))
    spec = WeightSpec.for_parallelepiped(par)
    pts = RNG.uniform(-4.0, 4.0, size=(50, 3))
    np.testing.assert_allclose(spec.eval(pts), w_eval(pts), rtol=1e-12)
    assert spec.mass() == pytest.approx(w_mass())


def test_weight_mass_invariance():
    blk = MomentBlock(2, 1)
    s1 = WeightSpec.for_block(blk, 8.0)
    s2 = WeightSpec.for_block(MomentBlock(4, 0), 64.0)
    assert s1.mass() == s2.mass() == pytest.approx(w_mass())
    assert complex(s1.hat(np.zeros((1, 3)))[0]).real == \
        pytest.approx(w_mass(), rel=1e-12)


def test_weight_hat_support():
    blk = MomentBlock(2, 1)
    spec = WeightSpec.for_block(blk, 8.0)
    box = spec.support_box()
    outside = box.center + 1.05 * (box.vertices() - box.center)
    assert np.abs(spec.hat(outside)).max() == 0.0
    inside = box.center + 0.45 * (box.vertices() - box.center)
    assert np.abs(spec.hat(inside)).min() > 0.0


def test_convolve_weight_dc_and_positivity():
    bh, n = 8.0, 32
    rng = np.random.default_rng(5)
    arr = rng.uniform(0.0, 1.0, size=(n, n, n))
    spec = WeightSpec.for_parallelepiped(
        Parallelepiped(np.zeros(3), np.eye(3), np.full(3, 2.0)))
    conv = convolve_weight(arr, bh, spec)
    assert conv.sum() == pytest.approx(arr.sum() * spec.mass(), rel=1e-12)
    assert conv.min() >= -1e-10 * conv.max()


def test_high_low_split_exact():
    bh, n = 8.0, 32
    rng = np.random.default_rng(6)
    arr = rng.normal(size=(n, n, n))
    low, high = high_low_split(arr, bh, cutoff=0.5)
    np.testing.assert_allclose(low + high, arr, atol=1e-12)
    const = np.ones((n, n, n))
    lc, hc = high_low_split(const, bh, cutoff=0.5)
    np.testing.assert_allclose(lc, const, atol=1e-12)
    assert np.abs(hc).max() <= 1e-12


# ------------------------------------------------------------- Monte Carlo
def test_stratified_mc_union_volume():
    b1 = Parallelepiped(np.zeros(3), np.eye(3), np.full(3, 1.0))
    b2 = Parallelepiped(np.full(3, 1.0), np.eye(3), np.full(3, 1.0))
    exact = 16.0 - 1.0  # two 8-volumes minus the unit overlap
    rng = np.random.default_rng(11)
    val, err = stratified_mc(lambda p: np.ones(len(p)), [b1, b2], 20000, rng)
    assert abs(val - exact) <= 4.0 * err
    assert err < 0.1


def test_stratified_mc_gaussian():
    box = Parallelepiped(np.zeros(3), np.eye(3), np.full(3, 6.0))
    rng = np.random.default_rng(12)
    val, err = stratified_mc(
        lambda p: np.exp(-0.5 * (p * p).sum(axis=1)), [box], 40000, rng)
    assert abs(val - (2.0 * math.pi) ** 1.5) <= 4.0 * err


def test_torus_mc_vs_lattice(bush8, dense8):
    rng = np.random.default_rng(13)

    def a7(pts):
        return np.abs(bush8.eval_periodic(pts, 8.0)) ** 7

    val, err = torus_stratified_mc(a7, 8.0, rng, n_cells=4,
                                   n_pilot=4000, n_main=24000)
    ref = dense8.lp_integral(7)
    assert abs(val - ref) <= 5.0 * err
    assert abs(val - ref) / ref <= 0.05
