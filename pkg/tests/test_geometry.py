"""Blocks, frames, planks, and rescaling tests.

Frozen vectors and matrices were derived by hand (cross products,
polynomial algebra) and checked independently before implementation.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import msl
from msl import (AffineMap, ConePlank, CurveSpec, DerivOracle, MomentBlock,
                 Parallelepiped, SampledSet)

RNG = np.random.default_rng(1618)


# ------------------------------------------------------------------ frame
def test_frame_frozen_values():
    fr = msl.frenet_frame(1.0)
    assert np.allclose(fr.T, [1.0, 2.0, 3.0], atol=0)
    assert np.allclose(fr.N, [-11.0, -8.0, 9.0], atol=0)
    assert np.allclose(fr.B, [3.0, -3.0, 1.0], atol=0)
    assert np.allclose(msl.frenet_frame(0.5).B, [0.75, -1.5, 1.0], atol=0)
    fr0 = msl.frenet_frame(0.0)
    assert np.allclose(fr0.matrix(), np.eye(3), atol=0)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_frame_orthogonality(t):
    fr = msl.frenet_frame(t)
    m = fr.matrix()
    g = m @ m.T
    off = g - np.diag(np.diag(g))
    assert np.abs(off).max() <= 1e-12 * max(1.0, np.abs(g).max())
    # N is exactly B x T, and |N| >= 1 throughout
    assert np.allclose(fr.N, np.cross(fr.B, fr.T), rtol=0, atol=1e-12)
    assert np.linalg.norm(fr.N) >= 1.0 - 1e-12


def test_frame_dual_matrix():
    fr = msl.frenet_frame(0.73)
    prod = fr.matrix() @ fr.dual_matrix().T
    assert np.allclose(prod, np.eye(3), atol=1e-12)


def test_frame_domain():
    with pytest.raises(ValueError):
        msl.frenet_frame(1.5)
    with pytest.raises(ValueError):
        msl.frenet_frame(-0.1)


# ------------------------------------------------------------------ blocks
def test_block_ranges():
    b = MomentBlock(4, 2)
    assert b.xi1_range() == (0.5, 0.75)
    assert b.center_t() == 0.625
    assert np.allclose(b.center_point(), [0.625, 0.625**2, 0.625**3], atol=0)


def test_block_membership_edges():
    b = MomentBlock(4, 2)
    t = 0.6
    inside = b.point_from_coords(t, 1 / 16 - 1e-12, 0.0)
    outside = b.point_from_coords(t, 1 / 16 + 1e-12, 0.0)
    assert bool(b.contains(inside))
    assert not bool(b.contains(outside))
    out3 = b.point_from_coords(t, 0.0, 1 / 64 + 1e-12)
    assert not bool(b.contains(out3))
    assert bool(b.contains(msl.moment_point(0.6)))


def test_block_validation():
    with pytest.raises(ValueError):
        MomentBlock(3, 0)
    with pytest.raises(ValueError):
        MomentBlock(4, 4)
    with pytest.raises(ValueError):
        msl.moment_blocks(12)


def test_block_q_functionals_match_polynomials():
    b = MomentBlock(8, 3)
    xi = RNG.uniform(-1.0, 1.0, size=(100, 3))
    xi[:, 0] = RNG.uniform(0.0, 1.0, 100)
    q2 = xi[:, 1] - xi[:, 0] ** 2
    q3 = xi[:, 2] - 3 * xi[:, 0] * xi[:, 1] + 2 * xi[:, 0] ** 3
    assert np.allclose(b.b2(xi), q2, atol=1e-13)
    assert np.allclose(b.b3(xi), q3, atol=1e-12)


def test_block_sampling_stays_inside():
    for S in (2, 8, 32):
        for l in (0, S // 2, S - 1):
            b = MomentBlock(S, l)
            pts = b.sample(RNG, 500)
            assert np.all(b.contains(pts))


def test_locate_block_examples():
    assert msl.locate_block((0.0, 0.0, 0.0), 4) == 0
    assert msl.locate_block(msl.moment_point(0.6), 4) == 2
    assert msl.locate_block((0.6, 0.9, 0.0), 4) is None
    assert msl.locate_block((-0.1, 0.0, 0.0), 8) is None
    assert msl.locate_block((1.2, 1.44, 1.728), 8) is None


def test_locate_block_agrees_with_membership():
    # sample every block at a few scales; locate must return that index
    for S in (4, 16):
        for b in msl.moment_blocks(S):
            pts = b.sample(RNG, 40)
            for p in pts:
                assert msl.locate_block(p, S) == b.index_l


def test_partition_disjointness():
    # a located point is in exactly one block: exhaustive check over blocks
    S = 8
    blocks = msl.moment_blocks(S)
    pts = np.concatenate([b.sample(RNG, 50) for b in blocks])
    counts = np.zeros(len(pts), dtype=int)
    for b in blocks:
        counts += b.contains(pts).astype(int)
    assert np.all(counts == 1)


def test_block_nesting():
    for S in (4, 8):
        for b in msl.moment_blocks(S):
            for child in b.children():
                pts = child.sample(RNG, 60)
                assert np.all(b.contains(pts))


def test_normalizing_linear_determinant():
    b = MomentBlock(8, 5)
    lam = b.normalizing_linear()
    assert np.linalg.det(lam) == pytest.approx(8.0**6, rel=1e-12)
    # rows orthogonal to the tangent direction where they should be:
    # row 2 is grad of the parabola deviation, orthogonal to T
    fr = msl.frenet_frame(b.center_t())
    assert abs(lam[1] @ fr.T) <= 1e-10 * np.linalg.norm(lam[1])
    assert abs(lam[2] @ fr.T) <= 1e-10 * np.linalg.norm(lam[2])
    assert abs(lam[2] @ fr.N) <= 1e-10 * np.linalg.norm(lam[2])


# --------------------------------------------------------------- envelopes
def test_wave_envelope_frozen_examples():
    env = msl.wave_envelope(MomentBlock(4, 0), 64.0)
    assert np.allclose(env.half_widths, [4.0, 16.0, 64.0], atol=0)
    env = msl.wave_envelope(MomentBlock(2, 1), 64.0)
    assert np.allclose(env.half_widths, [16.0, 32.0, 64.0], atol=0)
    env = msl.wave_envelope(MomentBlock(1, 0), 8.0)
    assert np.allclose(env.half_widths, [8.0, 8.0, 8.0], atol=0)


def test_wave_envelope_axes_at_left_endpoint():
    b = MomentBlock(8, 3)
    env = msl.wave_envelope(b, 4096.0)
    fr = msl.frenet_frame(3.0 / 8.0)
    assert np.allclose(env.axes, fr.matrix(), atol=0)


def test_wave_envelope_precondition():
    with pytest.raises(ValueError):
        msl.wave_envelope(MomentBlock(4, 0), 32.0)


def test_dual_plank_is_critical_envelope():
    b = MomentBlock(4, 1)
    dp = b.dual_plank()
    assert np.allclose(dp.half_widths, [4.0, 16.0, 64.0], atol=0)


# ------------------------------------------------------------ cone planks
def test_cone_shear_examples():
    assert np.allclose(msl.cone_shear([6.0, 6.0, 6.0]), [6.0, 3.0, 1.0],
                       atol=0)
    assert np.allclose(
        msl.cone_shear([1.0, 1.0, 1.0], mode="inverse_transpose"),
        [1.0, 2.0, 6.0], atol=0)
    with pytest.raises(ValueError):
        msl.cone_shear([1.0, 0.0, 0.0], mode="sideways")


def test_cone_shear_duality():
    # <T x, (T^t)^{-1} y> = <x, y>
    x = RNG.uniform(-1, 1, size=(20, 3))
    y = RNG.uniform(-1, 1, size=(20, 3))
    lhs = np.sum(msl.cone_shear(x) * msl.cone_shear(y, "inverse_transpose"),
                 axis=-1)
    assert np.allclose(lhs, np.sum(x * y, axis=-1), atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_cone_frame_orthogonality(omega):
    c, b, t = msl.cone_frame(omega)
    m = np.stack([c, b, t])
    g = m @ m.T
    off = g - np.diag(np.diag(g))
    assert np.abs(off).max() <= 1e-12 * max(1.0, np.abs(g).max())


def test_cone_plank_layout():
    planks = msl.cone_planks(4)
    assert [p.omega for p in planks] == [0.0, 0.25, 0.5, 0.75]
    p = planks[2]
    assert np.allclose(p.half_widths, [1.0, 0.25, 1.0 / 16.0], atol=0)
    box = p.box()
    c, _, _ = msl.cone_frame(0.5)
    assert np.allclose(box.center, 0.75 * c, atol=0)
    assert np.allclose(box.half_widths, [0.25, 0.25, 1.0 / 16.0], atol=0)
    # radial coefficient of members lies in [1/2, 1]
    pts = box.sample(RNG, 200)
    radial = (pts @ np.linalg.inv(p.frame_matrix()))[:, 0]
    assert np.all(radial >= 0.5 - 1e-12) and np.all(radial <= 1.0 + 1e-12)
    sym = p.symmetric_box()
    assert np.allclose(sym.center, 0.0, atol=0)
    assert np.allclose(sym.half_widths, [1.0, 0.25, 1.0 / 16.0], atol=0)


def test_cone_wave_envelope_example():
    env = msl.cone_wave_envelope(ConePlank(4, 0), 64.0)
    assert np.allclose(env.half_widths, [1.0, 4.0, 16.0], atol=1e-12)
    with pytest.raises(ValueError):
        msl.cone_wave_envelope(ConePlank(4, 0), 32.0)


# ------------------------------------------------------------- rescalings
def test_moment_rescaling_frozen_matrix():
    rm = msl.moment_rescaling(1.0, 64.0, 2)  # width u = 1/4, offset a = 1/2
    expected = np.array([[4.0, 0.0, 0.0],
                         [-16.0, 16.0, 0.0],
                         [48.0, -96.0, 64.0]])
    assert np.allclose(rm.linear, expected, atol=0)
    assert np.allclose(rm.offset, [-2.0, 4.0, -8.0], atol=0)


def test_moment_rescaling_maps_curve_to_curve():
    rm = msl.moment_rescaling(1.0, 64.0, 2)
    u, a = 0.25, 0.5
    s = np.linspace(0.0, 1.0, 17)
    img = rm.apply(msl.moment_point(a + u * s))
    assert np.allclose(img, msl.moment_point(s), atol=1e-12)


def test_moment_rescaling_maps_subblocks_to_blocks():
    rm = msl.moment_rescaling(1.0, 64.0, 2)
    for j in range(4):
        sub = MomentBlock(16, 8 + j)
        img = rm.apply(sub.sample(RNG, 200))
        found = {msl.locate_block(p, 4) for p in img}
        assert found == {j}


def test_moment_rescaling_round_trip():
    rm = msl.moment_rescaling(2.0, 512.0, 5)
    pts = RNG.uniform(-1, 1, size=(50, 3))
    back = rm.inverse().apply(rm.apply(pts))
    assert np.allclose(back, pts, atol=1e-10)


def test_moment_rescaling_validation():
    with pytest.raises(ValueError):
        msl.moment_rescaling(0.1, 8.0, 0)  # u > 1
    with pytest.raises(ValueError):
        msl.moment_rescaling(1.0, 64.0, 4)  # index out of range
    with pytest.raises(ValueError):
        msl.moment_rescaling(-1.0, 64.0, 0)


# ------------------------------------------------------------- curve class
def test_model_curve_is_member():
    rep = msl.curve_class_check(msl.model_curve())
    assert rep["member"]
    assert rep["min_gamma2_pp"] == pytest.approx(1.0, rel=1e-12)
    assert rep["min_gamma3_ppp"] == pytest.approx(1.0, rel=1e-12)


def test_moment_curve_fails_only_c4():
    rep = msl.curve_class_check(msl.moment_curve())
    assert not rep["member"]
    assert len(rep["violations"]) == 1
    assert "C^4" in rep["violations"][0]


def test_concave_curve_fails_convexity():
    bad = CurveSpec(DerivOracle.from_poly([0, 0, -0.5]),
                    DerivOracle.from_poly([0, 0, 0, 1.0 / 6.0]))
    rep = msl.curve_class_check(bad)
    assert any("convexity" in v for v in rep["violations"])


def test_flat_third_component_fails_torsion():
    bad = CurveSpec(DerivOracle.from_poly([0, 0, 0.5]),
                    DerivOracle.from_poly([0.0]))
    rep = msl.curve_class_check(bad)
    assert any("torsion" in v for v in rep["violations"])
    assert any("determinant" in v for v in rep["violations"])


def test_curve_spec_validation():
    with pytest.raises(ValueError):
        CurveSpec(DerivOracle.from_poly([0, 0, 0.5]),
                  DerivOracle.from_poly([0, 0, 0, 1 / 6]), a=0.7)
    with pytest.raises(ValueError):
        CurveSpec(DerivOracle.from_poly([0, 0, 0.5]),
                  DerivOracle.from_poly([0, 0, 0, 1 / 6]), a=0.5, nu=0.2)


def test_general_rescaling_normalizations():
    amap, resc = msl.general_rescaling(msl.model_curve(), 2, 64.0)
    assert float(resc.gamma3(0.0, 3)) == pytest.approx(0.5, rel=1e-12)
    _, resc_u = msl.general_rescaling(msl.model_curve(), 2, 64.0,
                                      "unit_torsion")
    assert float(resc_u.gamma3(0.0, 3)) == pytest.approx(1.0, rel=1e-12)
    # straightening: gamma2''(0) preserved, gamma3''(0) killed
    assert float(resc.gamma2(0.0, 2)) == pytest.approx(1.0, rel=1e-12)
    assert abs(float(resc.gamma3(0.0, 2))) <= 1e-12
    with pytest.raises(ValueError):
        msl.general_rescaling(msl.model_curve(), 0, 4.0)
    with pytest.raises(ValueError):
        msl.general_rescaling(msl.model_curve(), 4, 64.0)


def test_general_rescaling_curve_consistency():
    # the affine map and the rescaled oracles describe the same curve
    curve = msl.model_curve()
    amap, resc = msl.general_rescaling(curve, 1, 64.0)
    s = np.linspace(0.0, 1.0, 9)
    t = 0.25 + 0.25 * s
    img = amap.apply(curve.point(t))
    assert np.allclose(img, resc.point(s), atol=1e-10)


def test_general_rescaling_membership():
    amap, resc = msl.general_rescaling(msl.model_curve(), 2, 64.0)
    assert msl.curve_class_check(resc)["member"]
    assert resc.a == pytest.approx(0.25)


def test_general_rescaling_block_images():
    curve = msl.model_curve()
    amap, resc = msl.general_rescaling(curve, 2, 64.0)
    src = MomentBlock(4, 2, curve)
    img = amap.apply(src.sample(RNG, 400))
    unit = MomentBlock(1, 0, resc)
    assert np.abs(unit.b2(img)).max() <= 1.0 + 1e-9
    assert np.abs(unit.b3(img)).max() <= 1.0 + 1e-9
    assert img[:, 0].min() >= -1e-9 and img[:, 0].max() <= 1.0 + 1e-9


# ------------------------------------------------- parallelepipeds, affine
def test_parallelepiped_gauge_and_volume():
    p = Parallelepiped(np.zeros(3), np.eye(3), np.ones(3))
    assert p.volume() == pytest.approx(8.0)
    assert p.dilate(2.0).volume() == pytest.approx(64.0)
    v = p.vertices()
    assert np.allclose(p.gauge(v), 1.0, atol=1e-12)
    pts = p.sample(RNG, 200)
    assert np.all(p.contains(pts))
    # gauge about a centered body is positively homogeneous
    assert np.allclose(p.gauge(pts * 3.0), 3.0 * p.gauge(pts), rtol=1e-12)


def test_parallelepiped_halton_inside():
    p = Parallelepiped([1.0, -2.0, 0.5],
                       [[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]],
                       [1.0, 0.5, 2.0])
    pts = p.halton_samples(100)
    assert np.all(p.contains(pts, tol=1e-12))


def test_parallelepiped_validation():
    with pytest.raises(ValueError):
        Parallelepiped(np.zeros(3), np.array([[1.0, 0, 0], [2.0, 0, 0],
                                              [0, 0, 1.0]]), np.ones(3))
    with pytest.raises(ValueError):
        Parallelepiped(np.zeros(3), np.eye(3), [1.0, -1.0, 1.0])


def test_affine_algebra():
    a = AffineMap(RNG.uniform(-1, 1, (3, 3)) + 3 * np.eye(3),
                  RNG.uniform(-1, 1, 3))
    b = AffineMap(RNG.uniform(-1, 1, (3, 3)) + 2 * np.eye(3),
                  RNG.uniform(-1, 1, 3))
    x = RNG.uniform(-1, 1, (10, 3))
    assert np.allclose(a.compose(b).apply(x), a.apply(b.apply(x)), atol=1e-12)
    assert np.allclose(a.inverse().apply(a.apply(x)), x, atol=1e-12)
    ident = AffineMap.identity()
    assert np.allclose(ident.apply(x), x, atol=0)


# ----------------------------------------------------------- comparability
def test_comparability_identical():
    p = Parallelepiped(np.zeros(3), np.eye(3), np.ones(3))
    assert msl.comparability_constant(p, p) == pytest.approx(1.0, abs=1e-12)


def test_comparability_dilate():
    p = Parallelepiped(np.zeros(3), np.eye(3), np.ones(3))
    assert msl.comparability_constant(p, p.dilate(2.0)) == pytest.approx(
        2.0, abs=1e-12)


def test_comparability_rotated_cube():
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    a = Parallelepiped(np.zeros(3), np.eye(3), np.ones(3))
    b = Parallelepiped(np.zeros(3), rot, np.ones(3))
    assert msl.comparability_constant(a, b) == pytest.approx(np.sqrt(2.0),
                                                             abs=1e-9)


def test_comparability_sampled_sphere():
    pts = msl.fibonacci_sphere(4096)
    cube = Parallelepiped(np.zeros(3), np.eye(3), np.ones(3))
    c = msl.comparability_constant(cube, SampledSet(pts))
    assert c == pytest.approx(np.sqrt(3.0), abs=0.02)
