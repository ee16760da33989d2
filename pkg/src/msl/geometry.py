"""Geometry of the moment curve: blocks, frames, planks, and rescalings.

The central objects are the canonical frequency blocks of the curve
(t, t^2, t^3) at dyadic scales, the orthogonal frame (T, N, B) attached
to each parameter, the dual "plank" parallelepipeds spanned by that
frame, the matching plank family on the shear image of the light cone,
and the exact affine rescalings (parabolic rescaling of a block onto the
full curve neighborhood, and its analogue for a general curve class with
uniformly convex second and third components).

Conventions.  A block at scale S (S a power of two) is

    l/S <= xi_1 < (l+1)/S,   |q2(xi)| <= S^-2,   |q3(xi)| <= S^-3,

with q2 = xi_2 - xi_1^2 and q3 = xi_3 - 3 xi_1 xi_2 + 2 xi_1^3; the S
blocks tile the S^-2/S^-3 neighborhood of the curve over xi_1 in [0,1).
The frame at parameter t is

    T = (1, 2t, 3t^2),  N = (-2t-9t^3, 1-9t^4, 3t+6t^3),  B = (3t^2, -3t, 1),

mutually orthogonal identically in t (N = B x T, B = (T x gamma'')/2), so
dual bases are the frame vectors divided by their squared lengths.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc


def _require_pow2(S, name="scale_S"):
    if not (isinstance(S, (int, np.integer)) and S >= 1 and (S & (S - 1)) == 0):
        raise ValueError(f"{name} must be a positive power of two, got {S!r}")
    return int(S)


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("points must have trailing dimension 3")
    return x


# ----------------------------------------------------------------------
# Frame
# ----------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class FrameTriple:
    """Orthogonal (non-unit) frame of the moment curve at parameter t."""
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray
    t: float

    def matrix(self):
        """Rows T, N, B."""
        return np.stack([self.T, self.N, self.B])

    def unit_matrix(self):
        m = self.matrix()
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    def dual_matrix(self):
        """Rows of the dual basis: frame vectors over squared lengths."""
        m = self.matrix()
        return m / (m * m).sum(axis=1, keepdims=True)


def frenet_frame(t: float) -> FrameTriple:
    """Tangent/normal/binormal triple at gamma(t) = (t, t^2, t^3), t in [0,1]."""
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"parameter t must lie in [0, 1], got {t}")
    T = np.array([1.0, 2.0 * t, 3.0 * t * t])
    N = np.array([-2.0 * t - 9.0 * t**3, 1.0 - 9.0 * t**4, 3.0 * t + 6.0 * t**3])
    B = np.array([3.0 * t * t, -3.0 * t, 1.0])
    return FrameTriple(T=T, N=N, B=B, t=t)


def moment_point(t):
    t = np.asarray(t, dtype=float)
    return np.stack([t, t * t, t**3], axis=-1)


# ----------------------------------------------------------------------
# Curve class
# ----------------------------------------------------------------------
class DerivOracle:
    """Scalar function with derivatives up to order 4."""

    def __init__(self, funcs: Sequence[Callable]):
        if len(funcs) != 5:
            raise ValueError("need callables for orders 0..4")
        self._funcs = tuple(funcs)

    def __call__(self, t, order: int = 0):
        if not (0 <= order <= 4):
            raise ValueError("derivative order must be in 0..4")
        return np.asarray(self._funcs[order](np.asarray(t, dtype=float)), dtype=float)

    @classmethod
    def from_poly(cls, coeffs):
        polys = [np.polynomial.Polynomial(coeffs)]
        for _ in range(4):
            polys.append(polys[-1].deriv())
        return cls([(lambda p: (lambda t: p(t)))(p) for p in polys])


@dataclasses.dataclass(frozen=True)
class CurveSpec:
    """Graph curve (t, gamma2(t), gamma3(t)) with convexity/torsion floors.

    a is the uniform floor for gamma2'' and gamma3''', nu the floor for
    the Wronskian-type determinant gamma2'' gamma3''' - gamma3'' gamma2'''.
    """
    gamma2: DerivOracle
    gamma3: DerivOracle
    a: float = 0.5
    nu: float = 0.125
    name: str = "curve"

    def __post_init__(self):
        if not (0.0 < self.a <= 0.5):
            raise ValueError(f"a must lie in (0, 1/2], got {self.a}")
        if not (0.0 < self.nu <= self.a / 4.0):
            raise ValueError(f"nu must lie in (0, a/4], got {self.nu}")

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([t, self.gamma2(t), self.gamma3(t)], axis=-1)

    def det4(self, t):
        """gamma2'' gamma3''' - gamma3'' gamma2''' (the torsion determinant)."""
        return (self.gamma2(t, 2) * self.gamma3(t, 3)
                - self.gamma3(t, 2) * self.gamma2(t, 3))


def moment_curve() -> CurveSpec:
    """The curve (t, t^2, t^3). Not a member of the normalized class
    (its C^4 norms exceed 1); it is the default block geometry."""
    return CurveSpec(DerivOracle.from_poly([0, 0, 1.0]),
                     DerivOracle.from_poly([0, 0, 0, 1.0]),
                     a=0.5, nu=0.125, name="moment")


def model_curve() -> CurveSpec:
    """The normalized representative (t, t^2/2, t^3/6)."""
    return CurveSpec(DerivOracle.from_poly([0, 0, 0.5]),
                     DerivOracle.from_poly([0, 0, 0, 1.0 / 6.0]),
                     a=0.5, nu=0.125, name="model")


_MOMENT = None


def _moment_curve_cached():
    global _MOMENT
    if _MOMENT is None:
        _MOMENT = moment_curve()
    return _MOMENT


# ----------------------------------------------------------------------
# Parallelepiped and affine maps
# ----------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class Parallelepiped:
    """Center, three spanning axis vectors (rows), coefficient half-widths.

    Membership is exact: x belongs iff the coefficients of x - center in
    the axis basis are bounded by the half-widths.
    """
    center: np.ndarray
    axes: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "axes", np.asarray(self.axes, dtype=float))
        object.__setattr__(self, "half_widths",
                           np.asarray(self.half_widths, dtype=float))
        if self.axes.shape != (3, 3):
            raise ValueError("axes must be a 3x3 matrix of row vectors")
        det = np.linalg.det(self.axes)
        if abs(det) < 1e-12 * np.abs(self.axes).max() ** 3:
            raise ValueError("axes must be linearly independent")
        if np.any(self.half_widths <= 0):
            raise ValueError("half-widths must be positive")
        object.__setattr__(self, "_axes_inv", np.linalg.inv(self.axes))

    def coefficients(self, x):
        x = _as_points(x)
        return (x - self.center) @ self._axes_inv

    def gauge(self, x):
        """max_i |coef_i| / h_i; membership iff gauge <= 1."""
        c = np.abs(self.coefficients(x)) / self.half_widths
        return c.max(axis=-1)

    def contains(self, x, tol: float = 0.0):
        return self.gauge(x) <= 1.0 + tol

    def volume(self):
        return float(8.0 * np.prod(self.half_widths)
                     * abs(np.linalg.det(self.axes)))

    def dilate(self, factor: float) -> "Parallelepiped":
        return Parallelepiped(self.center, self.axes,
                              self.half_widths * float(factor))

    def translate(self, v) -> "Parallelepiped":
        return Parallelepiped(self.center + np.asarray(v, dtype=float),
                              self.axes, self.half_widths)

    def vertices(self):
        signs = np.array([[sx, sy, sz] for sx in (-1, 1)
                          for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
        return self.center + (signs * self.half_widths) @ self.axes

    def sample(self, rng: np.random.Generator, n: int):
        coef = rng.uniform(-self.half_widths, self.half_widths, size=(n, 3))
        return self.center + coef @ self.axes

    def halton_samples(self, n: int, seed: int = 0):
        h = qmc.Halton(d=3, scramble=False, seed=seed)
        u = h.random(n)
        coef = (2.0 * u - 1.0) * self.half_widths
        return self.center + coef @ self.axes

    def bounding_radius(self):
        return float(np.abs(self.vertices() - self.center).max())


@dataclasses.dataclass(frozen=True)
class AffineMap:
    """x -> linear @ x + offset with exact inverse and composition."""
    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        if self.linear.shape != (3, 3) or self.offset.shape != (3,):
            raise ValueError("linear must be 3x3, offset length 3")
        if abs(np.linalg.det(self.linear)) == 0.0:
            raise ValueError("linear part must be invertible")

    def apply(self, x):
        x = _as_points(x)
        return x @ self.linear.T + self.offset

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.offset)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other: (self o other)(x) = self(other(x))."""
        return AffineMap(self.linear @ other.linear,
                         self.linear @ other.offset + self.offset)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))


# ----------------------------------------------------------------------
# Moment blocks
# ----------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class MomentBlock:
    """Canonical block of the curve neighborhood at dyadic scale S."""
    scale_S: int
    index_l: int
    curve: Optional[CurveSpec] = None

    def __post_init__(self):
        S = _require_pow2(self.scale_S)
        object.__setattr__(self, "scale_S", S)
        if not (0 <= self.index_l < S):
            raise ValueError(f"index_l must lie in [0, {S}), got {self.index_l}")

    @property
    def _curve(self) -> CurveSpec:
        return self.curve if self.curve is not None else _moment_curve_cached()

    @property
    def is_moment(self) -> bool:
        return self.curve is None or self._curve.name == "moment"

    def xi1_range(self):
        S = self.scale_S
        return (self.index_l / S, (self.index_l + 1) / S)

    def center_t(self) -> float:
        return (self.index_l + 0.5) / self.scale_S

    def center_point(self):
        return self._curve.point(self.center_t())

    def b2(self, xi):
        """Second block coordinate: xi_2 - gamma2(xi_1)."""
        xi = _as_points(xi)
        return xi[..., 1] - self._curve.gamma2(xi[..., 0])

    def b3(self, xi):
        """Third block coordinate: the gamma3 deviation with the gamma2
        deviation removed at slope gamma3''/gamma2''.  For the moment
        curve this is exactly xi_3 - 3 xi_1 xi_2 + 2 xi_1^3."""
        xi = _as_points(xi)
        t = xi[..., 0]
        cur = self._curve
        ratio = cur.gamma3(t, 2) / cur.gamma2(t, 2)
        return xi[..., 2] - cur.gamma3(t) - ratio * self.b2(xi)

    def contains(self, xi):
        xi = _as_points(xi)
        S = self.scale_S
        lo, hi = self.xi1_range()
        in_slab = (xi[..., 0] >= lo) & (xi[..., 0] < hi)
        return (in_slab
                & (np.abs(self.b2(xi)) <= S**-2)
                & (np.abs(self.b3(xi)) <= S**-3))

    def contains_dilated(self, xi, factor: float):
        """Membership in the factor-dilate: slab widened about its center,
        b2/b3 widths multiplied."""
        xi = _as_points(xi)
        S = self.scale_S
        tc = self.center_t()
        in_slab = np.abs(xi[..., 0] - tc) <= factor * 0.5 / S
        return (in_slab
                & (np.abs(self.b2(xi)) <= factor * S**-2)
                & (np.abs(self.b3(xi)) <= factor * S**-3))

    def sample(self, rng: np.random.Generator, n: int):
        """Exact uniform sampling in block coordinates."""
        S = self.scale_S
        lo, _ = self.xi1_range()
        t = lo + rng.uniform(0.0, 1.0 / S, size=n)
        v2 = rng.uniform(-S**-2.0, S**-2.0, size=n)
        v3 = rng.uniform(-S**-3.0, S**-3.0, size=n)
        return self.point_from_coords(t, v2, v3)

    def point_from_coords(self, t, v2, v3):
        cur = self._curve
        t = np.asarray(t, dtype=float)
        xi2 = cur.gamma2(t) + v2
        ratio = cur.gamma3(t, 2) / cur.gamma2(t, 2)
        xi3 = cur.gamma3(t) + ratio * v2 + v3
        return np.stack([t, xi2, xi3], axis=-1)

    def frame(self) -> FrameTriple:
        if not self.is_moment:
            raise NotImplementedError("frames are provided for the moment curve")
        return frenet_frame(self.center_t())

    def normalizing_linear(self):
        """Rows (S e1, S^2 (-2 t_c, 1, 0), S^3 B(t_c)): the Jacobian of the
        normalized block coordinates (S(xi_1 - t_c), S^2 b2, S^3 b3) at the
        block center.  Determinant S^6 exactly."""
        if not self.is_moment:
            raise NotImplementedError("normalized coordinates assume the moment curve")
        S, tc = self.scale_S, self.center_t()
        B = frenet_frame(tc).B
        return np.array([
            [float(S), 0.0, 0.0],
            [-2.0 * tc * S**2, float(S**2), 0.0],
            [S**3 * B[0], S**3 * B[1], S**3 * B[2]],
        ])

    def dual_plank(self) -> Parallelepiped:
        return wave_envelope(self, float(self.scale_S) ** 3)

    def children(self, factor: int = 2):
        """Sub-blocks at scale factor * S inside this block's slab."""
        factor = _require_pow2(factor, "factor")
        S2 = self.scale_S * factor
        base = self.index_l * factor
        return [MomentBlock(S2, base + j, self.curve) for j in range(factor)]


def moment_blocks(S: int, curve: Optional[CurveSpec] = None):
    S = _require_pow2(S)
    return [MomentBlock(S, l, curve) for l in range(S)]


def locate_block(xi, S: int) -> Optional[int]:
    """Index of the scale-S block containing xi, or None."""
    S = _require_pow2(S)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (3,):
        raise ValueError("locate_block takes a single frequency point")
    l = int(math.floor(xi[0] * S))
    if not (0 <= l < S):
        return None
    blk = MomentBlock(S, l)
    return l if bool(blk.contains(xi)) else None


def wave_envelope(block: MomentBlock, R: float) -> Parallelepiped:
    """Dual envelope of a block: frame axes at the slab's left endpoint,
    coefficient half-widths (R/S^2, R/S, R).  At R = S^3 this is the dual
    plank spanned by (S T, S^2 N, S^3 B)."""
    S = block.scale_S
    R = float(R)
    if not (1.0 <= S**3 <= R):
        raise ValueError(f"need 1 <= S^3 <= R, got S={S}, R={R}")
    fr = frenet_frame(block.index_l / S)
    hw = np.array([R / S**2, R / S, R])
    return Parallelepiped(np.zeros(3), fr.matrix(), hw)


# ----------------------------------------------------------------------
# Cone planks and the shear
# ----------------------------------------------------------------------
_SHEAR = np.diag([1.0, 0.5, 1.0 / 6.0])
_SHEAR_INV_T = np.diag([1.0, 2.0, 6.0])


def cone_shear(p, mode: str = "forward"):
    """Apply the cone-straightening shear (x, y/2, z/6), or the inverse
    transpose (x, 2y, 6z) used on the spatial side."""
    p = _as_points(p)
    if mode == "forward":
        return p @ _SHEAR.T
    if mode == "inverse_transpose":
        return p @ _SHEAR_INV_T.T
    raise ValueError("mode must be 'forward' or 'inverse_transpose'")


def cone_frame(omega: float):
    """Orthogonal frame (c, b, t) on the sheared cone at slope omega."""
    w = float(omega)
    c = np.array([1.0, w, w * w / 2.0])
    b = np.array([-w, 1.0 - w * w / 2.0, w])
    t = np.array([w * w / 2.0, -w, 1.0])
    return c, b, t


@dataclasses.dataclass(frozen=True)
class ConePlank:
    """Angular plank of the sheared cone at scale S, slopes near l/S.

    Data half-widths follow the (1, 1/S, 1/S^2) plank shape; the radial
    coefficient runs over [1/2, 1] (box() carries the exact body)."""
    scale_S: int
    index_l: int

    def __post_init__(self):
        S = _require_pow2(self.scale_S)
        object.__setattr__(self, "scale_S", S)
        if not (0 <= self.index_l < S):
            raise ValueError(f"index_l must lie in [0, {S}), got {self.index_l}")

    @property
    def omega(self) -> float:
        return self.index_l / self.scale_S

    @property
    def half_widths(self):
        S = self.scale_S
        return np.array([1.0, 1.0 / S, 1.0 / S**2])

    def frame_matrix(self):
        c, b, t = cone_frame(self.omega)
        return np.stack([c, b, t])

    def box(self) -> Parallelepiped:
        """The plank body: radial coefficient in [1/2, 1], transverse
        half-widths (1/S, 1/S^2)."""
        S = self.scale_S
        c, b, t = cone_frame(self.omega)
        return Parallelepiped(0.75 * c, np.stack([c, b, t]),
                              np.array([0.25, 1.0 / S, 1.0 / S**2]))

    def symmetric_box(self) -> Parallelepiped:
        """Origin-symmetric coefficient box (1, 1/S, 1/S^2); comparability
        targets for symmetric difference sets."""
        return Parallelepiped(np.zeros(3), self.frame_matrix(), self.half_widths)

    def contains(self, x, tol: float = 0.0):
        return self.box().contains(x, tol=tol)


def cone_planks(S: int):
    S = _require_pow2(S)
    return [ConePlank(S, l) for l in range(S)]


def cone_wave_envelope(plank: ConePlank, R: float) -> Parallelepiped:
    """Dual envelope of a cone plank with the 2/3-power length law:
    half-widths (R^{2/3}/S^2, R^{2/3}/S, R^{2/3}) on the plank frame."""
    S = plank.scale_S
    R = float(R)
    if not (1.0 <= S**3 <= R):
        raise ValueError(f"need 1 <= S^3 <= R, got S={S}, R={R}")
    r23 = R ** (2.0 / 3.0)
    hw = np.array([r23 / S**2, r23 / S, r23])
    return Parallelepiped(np.zeros(3), plank.frame_matrix(), hw)


# ----------------------------------------------------------------------
# Rescalings
# ----------------------------------------------------------------------
def moment_rescaling(sigma: float, r: float, l: int) -> AffineMap:
    """Affine map renormalizing the moment block at width u = r^{-1/3}/sigma,
    index l, onto the unit-scale curve neighborhood:

        xi_1' = (xi_1 - a)/u
        xi_2' = (xi_2 - 2 a xi_1 + a^2)/u^2
        xi_3' = (xi_3 - 3 a xi_2 + 3 a^2 xi_1 - a^3)/u^3,   a = l u.

    Maps gamma(a + u s) to gamma(s) exactly and sub-blocks at scale s to
    canonical blocks at scale s/u."""
    sigma, r = float(sigma), float(r)
    if sigma <= 0 or r <= 0:
        raise ValueError("sigma and r must be positive")
    u = r ** (-1.0 / 3.0) / sigma
    if not (0.0 < u <= 1.0):
        raise ValueError(f"block width u = r^(-1/3)/sigma must lie in (0,1], got {u}")
    if not (0 <= l <= round(1.0 / u) - 1):
        raise ValueError(f"no block with index {l} at width {u}")
    a = l * u
    linear = np.array([
        [1.0 / u, 0.0, 0.0],
        [-2.0 * a / u**2, 1.0 / u**2, 0.0],
        [3.0 * a**2 / u**3, -3.0 * a / u**3, 1.0 / u**3],
    ])
    offset = np.array([-a / u, a**2 / u**2, -(a**3) / u**3])
    return AffineMap(linear, offset)


def curve_class_check(curve: CurveSpec, n_grid: int = 4096):
    """Grid audit of the normalized curve class conditions.

    Returns a dict with 'member', 'violations' (list of strings), and the
    worst margins for convexity/torsion (floor a), C^4 norms (cap 1), and
    the determinant (floor nu)."""
    t = np.linspace(0.0, 1.0, n_grid)
    g2pp = curve.gamma2(t, 2)
    g3ppp = curve.gamma3(t, 3)
    det = curve.det4(t)
    c4 = max(float(np.abs(curve.gamma2(t, k)).max()) for k in range(5))
    c4 = max(c4, max(float(np.abs(curve.gamma3(t, k)).max()) for k in range(5)))
    report = {
        "member": True,
        "violations": [],
        "min_gamma2_pp": float(g2pp.min()),
        "min_gamma3_ppp": float(g3ppp.min()),
        "max_c4_norm": c4,
        "min_det": float(det.min()),
        "a": curve.a,
        "nu": curve.nu,
        "n_grid": n_grid,
    }
    if report["min_gamma2_pp"] < curve.a:
        report["violations"].append(
            f"convexity: min gamma2'' = {report['min_gamma2_pp']:.6g} < a = {curve.a}")
    if report["min_gamma3_ppp"] < curve.a:
        report["violations"].append(
            f"torsion: min gamma3''' = {report['min_gamma3_ppp']:.6g} < a = {curve.a}")
    if c4 > 1.0 + 1e-12:
        report["violations"].append(f"C^4 norm {c4:.6g} exceeds 1")
    if report["min_det"] < curve.nu:
        report["violations"].append(
            f"determinant: min = {report['min_det']:.6g} < nu = {curve.nu}")
    report["member"] = not report["violations"]
    return report


def _shifted_oracle(base: CurveSpec, which: int, t0: float, Sm13: float,
                    pref: float, ratio: float):
    """Oracle for the rescaled components; see general_rescaling."""
    g2, g3 = base.gamma2, base.gamma3

    def deriv(s, order=0):
        s = np.asarray(s, dtype=float)
        u = t0 + Sm13 * s
        if which == 2:
            val = g2(u, order) * Sm13**order
            if order == 0:
                val = val - g2(np.array(t0)) - g2(np.array(t0), 1) * Sm13 * s
            elif order == 1:
                val = val - g2(np.array(t0), 1) * Sm13
            return pref * val
        val = (g3(u, order) - ratio * g2(u, order)) * Sm13**order
        if order == 0:
            const = g3(np.array(t0)) - ratio * g2(np.array(t0))
            slope = g3(np.array(t0), 1) - ratio * g2(np.array(t0), 1)
            val = val - const - slope * Sm13 * s
        elif order == 1:
            val = val - (g3(np.array(t0), 1) - ratio * g2(np.array(t0), 1)) * Sm13
        return pref * val

    return DerivOracle([
        (lambda k: (lambda t: deriv(t, k)))(k) for k in range(5)
    ])


def general_rescaling(curve: CurveSpec, l: int, S: float,
                      ctau_normalization: str = "paper",
                      min_scale: float = 8.0):
    """Affine renormalization of the width-S^{-1/3} block at index l of a
    class curve, together with the rescaled curve.

    The linear part straightens the curve to third order at t0 = l S^{-1/3}
    (the second row removes the gamma2 tangent line; the third removes the
    gamma3 tangent line and the gamma3''/gamma2'' multiple of the gamma2
    deviation, so the rescaled gamma3 has vanishing second derivative at 0).
    The third row carries the normalization constant

        c_tau = gamma2''(t0) / (2 [gamma2'' gamma3''' - gamma3'' gamma2'''](t0))

    ('paper' mode; 'unit_torsion' drops the 2, making gamma3-tilde'''(0)
    twice as large).  Block-to-block mapping holds for any nonzero c_tau.
    """
    S = float(S)
    if S < min_scale:
        raise ValueError(f"need S >= {min_scale}, got {S}")
    Sm13 = S ** (-1.0 / 3.0)
    t0 = l * Sm13
    if not (0.0 <= t0 <= 1.0 - Sm13 + 1e-12):
        raise ValueError(f"block index {l} out of range at scale {S}")
    g2, g3 = curve.gamma2, curve.gamma3
    t0a = np.array(t0)
    g2p, g2pp = float(g2(t0a, 1)), float(g2(t0a, 2))
    g3p = float(g3(t0a, 1))
    det = float(curve.det4(t0a))
    if abs(g2pp) < 1e-14 or abs(det) < 1e-14:
        raise ValueError("degenerate curve data at the block corner")
    ratio = float(g3(t0a, 2)) / g2pp
    if ctau_normalization == "paper":
        ctau = g2pp / (2.0 * det)
    elif ctau_normalization == "unit_torsion":
        ctau = g2pp / det
    else:
        raise ValueError("ctau_normalization must be 'paper' or 'unit_torsion'")

    S13, S23 = S ** (1.0 / 3.0), S ** (2.0 / 3.0)
    row1 = np.array([S13, 0.0, 0.0])
    row2 = np.array([-S23 * g2p, S23, 0.0])
    row3 = ctau * S * np.array([-g3p + ratio * g2p, -ratio, 1.0])
    linear = np.stack([row1, row2, row3])
    offset = -linear @ curve.point(t0)
    amap = AffineMap(linear, offset)

    g2_new = _shifted_oracle(curve, 2, t0, Sm13, S23, 0.0)
    g3_new = _shifted_oracle(curve, 3, t0, Sm13, ctau * S, ratio)
    rescaled = CurveSpec(g2_new, g3_new, a=curve.a / 2.0,
                         nu=min(curve.nu / 2.0, curve.a / 8.0),
                         name=f"{curve.name}_rescaled")
    return amap, rescaled


# ----------------------------------------------------------------------
# Comparability of convex bodies
# ----------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class SampledSet:
    """Point-cloud stand-in for a convex body, with a declared center."""
    points: np.ndarray
    center: np.ndarray = dataclasses.field(
        default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


def fibonacci_sphere(n: int):
    i = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + math.sqrt(5.0)) * i
    return np.stack([np.sin(phi) * np.cos(theta),
                     np.sin(phi) * np.sin(theta),
                     np.cos(phi)], axis=-1)


def _body_samples(body, n_samples: int):
    if isinstance(body, Parallelepiped):
        return np.concatenate([body.vertices(), body.halton_samples(n_samples)])
    if isinstance(body, SampledSet):
        return body.points
    raise TypeError("expected Parallelepiped or SampledSet")


def _body_center(body):
    return body.center


def _gauge(body, x, n_dirs: int = 256):
    """Gauge of x w.r.t. the body, dilations about its center.

    Parallelepipeds are exact; sampled sets use the support function of
    the sample hull over a deterministic direction grid, an outer bound
    whose error shows up only as a (reported) larger constant."""
    if isinstance(body, Parallelepiped):
        return body.gauge(x)
    pts = body.points - body.center
    q = _as_points(x) - body.center
    dirs = fibonacci_sphere(n_dirs)
    qn = np.linalg.norm(q, axis=-1, keepdims=True)
    extra = np.where(qn > 0, q / np.maximum(qn, 1e-300), 0.0)
    dirs = np.concatenate([dirs, extra.reshape(-1, 3)])
    h = pts @ dirs.T
    support = h.max(axis=0)
    proj = q @ dirs.T
    good = support > 1e-14 * np.abs(pts).max()
    degenerate = np.where(proj > 0, np.inf, 0.0)
    ratios = np.where(good, proj / np.where(good, support, 1.0), degenerate)
    ratios = np.where(proj <= 0, 0.0, ratios)
    return np.clip(ratios, 0.0, None).max(axis=-1)


def comparability_constant(body_a, body_b, n_samples: int = 1000) -> float:
    """Smallest C >= 1 with (samples of A) in C.B and (samples of B) in C.A,
    dilations about the respective centers."""
    sa = _body_samples(body_a, n_samples)
    sb = _body_samples(body_b, n_samples)
    c_ab = float(_gauge(body_b, sa).max())
    c_ba = float(_gauge(body_a, sb).max())
    return max(1.0, c_ab, c_ba)
