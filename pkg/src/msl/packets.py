"""Tile partitions, amplitude pruning, and scale-recursive frequency audits.

This module supplies the combinatorial layer on top of :mod:`msl.fields`:

* partitions of unity on spatial tiles dual to a frequency block
  (:class:`PacketPartition`, :func:`build_partition`);
* amplitude pruning of packet superpositions against per-tile thresholds,
  organised as a cascade over a geometric scale schedule
  (:func:`prune_step`, :func:`prune_cascade`, :class:`PruneState`);
* smooth radial high/low frequency splits of nonnegative local-energy
  fields (:func:`high_low_split`, :class:`HighLowState`), together with a
  grid-free evaluator for weighted squares ``|f_tau|^2 * omega_tau`` built
  from closed-form Gaussian pair spectra (:class:`ConvolvedSquare`);
* level-set classification against a geometric threshold ladder
  (:func:`classify_sets`) and dyadic amplitude pigeonholing
  (:func:`amplitude_pigeonhole`).

Everything works pointwise in physical space; no dense grid is required.
Dense cross-checks live in the test suite.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import windows
from .fields import TWO_PI, PacketField, PacketGroup, WeightSpec
from .geometry import MomentBlock, Parallelepiped, moment_blocks, wave_envelope

__all__ = [
    "PARTITION_SHRINK",
    "PacketPartition",
    "build_partition",
    "measure_tile_sup",
    "partition_constant",
    "scale_schedule",
    "prune_threshold",
    "TileSelection",
    "PrunedBlockField",
    "PruneState",
    "prune_step",
    "prune_cascade",
    "PruneCascade",
    "dilate_gauge",
    "spectral_support_gauge",
    "HighLowState",
    "high_low_split",
    "ConvolvedSquare",
    "level_squares",
    "classify_sets",
    "PigeonholeReport",
    "amplitude_pigeonhole",
]


# ----------------------------------------------------------------------
# Tile partitions of unity
# ----------------------------------------------------------------------
# Shrink factors of the spectral box of one tile profile, in normalized
# block coordinates.  They are chosen so the box sits inside the exact
# (curved) membership region of the centered block:
#   |n1| <= a1 = 0.35 < 1/2,
#   |n2 - n1^2| <= a2 + a1^2 = 0.6725 < 1,
#   |n3 - 3 n1 n2 + 2 n1^3| <= a3 + 3 a1 a2 + 2 a1^3 = 0.91325 < 1,
# which makes the spectral leak of psi_T outside the centered block zero
# up to the kernel's tabulation error.
PARTITION_SHRINK = np.array([0.35, 0.55, 0.25])


@functools.lru_cache(maxsize=1)
def partition_constant() -> float:
    """(max_u sum_j Psi(u - j)^{1/2})^3, the 3-D localization constant.

    Converts a per-tile bound on psi^{1/2} |f| into a sup-norm bound on
    the kept part: |sum_good psi_T f| <= C_part * max_T ||psi_T^{1/2} f||.
    """
    return float(windows.psi_sqrt_sum_1d() ** 3)


@functools.lru_cache(maxsize=1)
def _min_partial_sum_table():
    """s1[r] = min over in-cell u of the 1-D partial sum over |j| <= r.

    Used to size enforcement boxes: flagging every tile in a radius-r box
    around the cell of x leaves mask(x) <= 1 - s1[r]^3.  The kernel is
    hard-supported in |y| <= 34.5, so s1[36] = 1 exactly.
    """
    u = np.linspace(-0.5, 0.5, 201)
    out = np.empty(38)
    for r in range(38):
        out[r] = _interval_psi_sum(u, -r, r).min()
    return out


def _enforce_radius(ratio: float) -> int:
    """Smallest r with (1 - s1[r]^3) <= ratio; 37 caps at exact zero."""
    tail = 1.0 - _min_partial_sum_table() ** 3
    hit = np.nonzero(tail <= ratio)[0]
    return int(hit[0]) if hit.size else 37


class PacketPartition:
    """Partition of unity on the tile lattice dual to one frequency block.

    Tiles are unit cells of the lattice ``y = x @ G`` with
    ``G = inv(W) @ diag(2 a)``, ``W`` the block's normalizing linear map
    and ``a`` the spectral shrink factors.  The profile of the tile at
    ``m`` is ``psi_m(x) = prod_i Psi(y_i - m_i)``; the lattice sum is 1
    exactly and each profile's spectrum sits in the box ``|n_i| <= a_i``
    of normalized frequency coordinates, inside the centered block.

    Parameters
    ----------
    block : MomentBlock
        Frequency block the partition is adapted to.
    shrink : (3,) array, optional
        Spectral box half-widths in normalized coordinates.
    """

    def __init__(self, block: MomentBlock, shrink=None):
        self.block = block
        self.shrink = PARTITION_SHRINK if shrink is None else np.asarray(shrink, float)
        if np.any(self.shrink <= 0):
            raise ValueError("shrink factors must be positive")
        self.W = block.normalizing_linear()
        self.G = np.linalg.inv(self.W) @ np.diag(2.0 * self.shrink)
        self.Ginv = np.linalg.inv(self.G)

    # --------------------------------------------------------- lattice
    def y_coords(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.G

    def x_coords(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return y @ self.Ginv

    def tile_index(self, x) -> np.ndarray:
        """Integer lattice cell containing each point (nearest tile)."""
        return np.round(self.y_coords(x)).astype(np.int64)

    def tile(self, m) -> Parallelepiped:
        """The spatial cell of lattice index m, axes parallel to the
        block's dual plank directions."""
        m = np.asarray(m, dtype=float)
        return Parallelepiped(m @ self.Ginv, self.Ginv, np.full(3, 0.5))

    def spectral_box(self) -> Parallelepiped:
        """Frequency support of each psi_m (a translate-independent box
        centered at zero frequency)."""
        return Parallelepiped(np.zeros(3), np.linalg.inv(self.W).T,
                              self.shrink.copy())

    # --------------------------------------------------------- profiles
    def psi(self, m, x) -> np.ndarray:
        """psi_m at points x (..., 3)."""
        y = self.y_coords(x) - np.asarray(m, dtype=float)
        return np.prod(windows.Psi(y), axis=-1)

    def psi_many(self, ms, x) -> np.ndarray:
        """Stack of psi_m over tiles ms (T, 3) at points x (P, 3): (T, P)."""
        y = self.y_coords(np.atleast_2d(x))
        ms = np.atleast_2d(np.asarray(ms, dtype=float))
        out = np.empty((ms.shape[0], y.shape[0]))
        chunk = max(1, int(2e6 // max(y.shape[0], 1)))
        for s in range(0, ms.shape[0], chunk):
            d = y[None, :, :] - ms[s:s + chunk, None, :]
            out[s:s + chunk] = np.prod(windows.Psi(d), axis=-1)
        return out

    def box_sum(self, x, radius: int) -> np.ndarray:
        """Sum of psi_m over the radius-box of tiles around each point.

        Separable: the box sum factors into per-axis interval sums,
        each telescoped through the kernel's cumulative.  radius >= 35
        returns exactly 1.0 (hard support of the kernel).
        """
        y = self.y_coords(np.atleast_2d(x))
        base = np.round(y)
        acc = np.ones(y.shape[0])
        for axis in range(3):
            acc = acc * _interval_psi_sum(y[:, axis], base[:, axis] - radius,
                                          base[:, axis] + radius)
        return acc


def build_partition(block: MomentBlock, shrink=None) -> PacketPartition:
    """Partition of unity on tiles dual to the given block."""
    return PacketPartition(block, shrink)


def measure_tile_sup(partition: PacketPartition, m, f_abs: Callable,
                     n_grid: int = 8, rel_tol: float = 0.01,
                     max_refine: int = 6,
                     stop_below: float = 0.0) -> float:
    """Sup over the tile of psi_m^{1/2} |f|, by refined grid sampling.

    Samples an ``n_grid^3`` lattice of cell centers, then repeatedly
    zooms a half-size window onto the argmax until the sup changes by
    less than ``rel_tol`` (windows stay clipped to the tile).  A first
    pass below ``stop_below`` skips refinement.

    Parameters
    ----------
    f_abs : callable
        Maps points (P, 3) to |f| values (P,).
    """
    m = np.asarray(m, dtype=float)
    offs = (np.arange(n_grid) + 0.5) / n_grid * 2.0 - 1.0
    grid = np.stack(np.meshgrid(offs, offs, offs, indexing="ij"),
                    axis=-1).reshape(-1, 3)
    center = m.copy()
    half = np.full(3, 0.5)
    best = -np.inf
    prev = -np.inf
    for _ in range(max_refine):
        y = center + half * grid
        y = np.clip(y, m - 0.5, m + 0.5)
        w = np.sqrt(np.clip(np.prod(windows.Psi(y - m), axis=-1), 0.0, None))
        vals = w * f_abs(partition.x_coords(y))
        i = int(np.argmax(vals))
        cur = float(vals[i])
        best = max(best, cur)
        if best < stop_below:
            break
        if prev > 0 and abs(cur - prev) < rel_tol * max(cur, 1e-300):
            break
        prev = cur
        center = y[i]
        half = half / 2.0
    return best


# ----------------------------------------------------------------------
# Scale schedule and thresholds
# ----------------------------------------------------------------------
def scale_schedule(R: float, eps: float = 0.25) -> List[float]:
    """Geometric ladder of scales: R_k = nearest power of 8 to R^{k eps},
    k = 1..N with N = ceil(1/eps), clipped to [8, R] and monotone."""
    if R < 8:
        raise ValueError("need R >= 8")
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    N = math.ceil(1.0 / eps)
    log8 = math.log2(float(R)) / 3.0
    expo = np.round(np.arange(1, N + 1) * eps * log8).astype(int)
    cap = max(1, int(round(log8)))
    expo = np.clip(expo, 1, cap)
    expo = np.maximum.accumulate(expo)
    return [float(8.0 ** e) for e in expo]


def prune_threshold(k: int, N: int, alpha: float, beta: float,
                    K: float, A: float) -> float:
    """Amplitude ceiling K^3 A^{N-k+1} beta / alpha enforced at step k."""
    if min(alpha, beta, K, A) <= 0:
        raise ValueError("alpha, beta, K, A must be positive")
    return float(K ** 3 * A ** (N - k + 1) * beta / alpha)


# ----------------------------------------------------------------------
# Pruned fields
# ----------------------------------------------------------------------
def _interval_psi_sum(y: np.ndarray, lo, hi) -> np.ndarray:
    """sum_{j=lo..hi} Psi(y - j), telescoped through the cumulative.

    A single difference of the clamped cumulative replaces the term sum,
    so full coverage of the kernel support returns exactly 1.0 (both
    ends clamp), with no accumulation noise.
    """
    C = windows.cumulative_phi1_hat_sq
    top = float(C(np.float64(windows.CUM_RANGE + 1.0)))
    return (C(y - lo + 0.5) - C(y - hi - 0.5)) / top


@dataclasses.dataclass(frozen=True)
class TileSelection:
    """Outcome of thresholding the tile sups of one block.

    ``bad`` holds the flagged lattice indices; ``zero_box`` (inclusive
    per-axis index bounds, shape (3, 2)) flags a whole product of index
    intervals at once, the enforcement mechanism's coalesced box.  Every
    other tile is good.  The mask ``1 - sum_flagged psi_T`` lies in
    [0, 1] exactly (nonnegative profiles summing to 1 over the full
    lattice), and evaluates the box part by separable interval sums.
    """
    partition: PacketPartition
    bad: FrozenSet[Tuple[int, int, int]]
    threshold: float
    sups: Mapping[Tuple[int, int, int], float]
    n_enforced: int = 0
    zero_box: Optional[np.ndarray] = None

    @property
    def nontrivial(self) -> bool:
        return bool(self.bad) or self.zero_box is not None

    def _in_box(self, m) -> np.ndarray:
        m = np.atleast_2d(np.asarray(m, dtype=np.int64))
        if self.zero_box is None:
            return np.zeros(m.shape[0], dtype=bool)
        lo, hi = self.zero_box[:, 0], self.zero_box[:, 1]
        return np.all((m >= lo) & (m <= hi), axis=1)

    def is_good(self, m) -> bool:
        key = tuple(int(v) for v in m)
        return key not in self.bad and not bool(self._in_box(key)[0])

    def bad_array(self) -> np.ndarray:
        """Flagged tiles outside the zero box (the box is separate)."""
        if not self.bad:
            return np.zeros((0, 3), dtype=np.int64)
        arr = np.array(sorted(self.bad), dtype=np.int64)
        return arr[~self._in_box(arr)]

    def mask(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.ones(x.shape[0])
        arr = self.bad_array()
        if arr.shape[0]:
            out -= self.partition.psi_many(arr, x).sum(axis=0)
        if self.zero_box is not None:
            y = self.partition.y_coords(x)
            prod = np.ones(x.shape[0])
            for axis in range(3):
                prod *= _interval_psi_sum(y[:, axis],
                                          int(self.zero_box[axis, 0]),
                                          int(self.zero_box[axis, 1]))
            out -= prod
        return out


@dataclasses.dataclass(frozen=True, eq=False)
class PrunedBlockField:
    """Recursive evaluator for one block of a pruning cascade.

    A leaf wraps the raw packets of a finest-scale block; an interior
    node sums its children (the previous cascade level) and multiplies
    by the mask of its tile selection.  The mask lies in [0, 1], so
    |eval| <= |eval_unmasked| pointwise and exactly.
    """
    block: MomentBlock
    scale_R: float
    base: Optional[PacketField] = None
    children: Tuple["PrunedBlockField", ...] = ()
    selection: Optional[TileSelection] = None

    def eval_unmasked(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.base is not None:
            return self.base.eval(x)
        out = np.zeros(x.shape[0], dtype=complex)
        for child in self.children:
            out += child.eval(x)
        return out

    def eval(self, x) -> np.ndarray:
        out = self.eval_unmasked(x)
        if self.selection is not None and self.selection.nontrivial:
            out = out * self.selection.mask(x)
        return out

    def with_selection(self, sel: TileSelection) -> "PrunedBlockField":
        return dataclasses.replace(self, selection=sel)

    def leaf_fields(self) -> List[PacketField]:
        if self.base is not None:
            return [self.base]
        out: List[PacketField] = []
        for child in self.children:
            out.extend(child.leaf_fields())
        return out

    def packet_centers(self) -> np.ndarray:
        return np.concatenate([g.x0 for f in self.leaf_fields()
                               for g in f.groups], axis=0)

    def amp_bound(self) -> float:
        """Rigorous sup bound: sum of |amplitudes| (masks only shrink)."""
        return float(sum(np.abs(g.amp).sum() for f in self.leaf_fields()
                         for g in f.groups))


@dataclasses.dataclass(frozen=True, eq=False)
class PruneState:
    """One level of a pruning cascade.

    ``fields_by_block[l]`` evaluates the pruned block field at scale
    index k; ``good_sets[l]`` records the tile selection that produced
    it (absent at the finest level, where nothing is pruned yet).
    """
    k: int
    N: int
    scale_R: float
    alpha: float
    beta: float
    K: float
    A: float
    blocks: Tuple[MomentBlock, ...]
    fields_by_block: Mapping[int, PrunedBlockField]
    good_sets: Mapping[int, TileSelection]

    @property
    def scale_S(self) -> int:
        return int(round(self.scale_R ** (1.0 / 3.0)))

    def threshold(self) -> float:
        return prune_threshold(self.k, self.N, self.alpha, self.beta,
                               self.K, self.A)

    def eval(self, x) -> np.ndarray:
        """Full field at this level: sum of the pruned block fields."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0], dtype=complex)
        for node in self.fields_by_block.values():
            out += node.eval(x)
        return out


def _child_index_map(child_S: int, parent_S: int) -> Callable[[int], int]:
    if child_S % parent_S:
        raise ValueError("child scale must be a multiple of the parent scale")
    step = child_S // parent_S
    return lambda l: l // step


def _box_offsets(radii) -> np.ndarray:
    axes = [np.arange(-int(r), int(r) + 1) for r in radii]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def _select_tiles(partition: PacketPartition, node: PrunedBlockField,
                  sel_threshold: float, probe_points: np.ndarray,
                  probe_abs: np.ndarray, n_grid: int
                  ) -> Tuple[Dict[Tuple[int, int, int], float], set]:
    """Measure tile sups where they could cross the selection threshold.

    Candidates come from boxes around packet centers (sized by the
    envelope extent in tile units) and from probe points with large |f|.
    A per-tile amplitude bound, sum over packets of |a_p| times the
    envelope at the tile's nearest point, prunes candidates that
    provably stay below threshold; survivors get the refined grid
    measurement, evaluating only packets whose envelope reaches the
    tile.  The enforcement pass after selection closes the remaining
    gap on audit samples.
    """
    groups = [g for f in node.leaf_fields() for g in f.groups]
    peak = windows.psi_cell_peak() ** 1.5
    # per-group maps to envelope units and in-tile slack
    Cs = [partition.Ginv @ g.Minv for g in groups]
    slack = [float(np.linalg.norm(C, 2)) * math.sqrt(3.0) / 2.0 for C in Cs]

    # ---------------------------------------------------- candidates
    chunks: List[np.ndarray] = []
    for g, C in zip(groups, Cs):
        cov = np.linalg.inv(C @ C.T)
        std = np.sqrt(np.clip(np.diag(cov), 0.0, None)) / TWO_PI
        if std.min() > 8.0:
            continue  # envelope floods the lattice; probes drive these
        radii = np.minimum(np.ceil(2.5 * std + 0.5), 6).astype(int)
        offs = _box_offsets(radii)
        x0 = g.x0
        if x0.shape[0] * offs.shape[0] > 600_000:
            order = np.argsort(-np.abs(g.amp))
            keep = max(32, 600_000 // offs.shape[0])
            x0 = x0[order[:keep]]
        bases = np.round(partition.y_coords(x0)).astype(np.int64)
        chunks.append((bases[:, None, :] + offs[None, :, :]).reshape(-1, 3))
    if probe_points.shape[0]:
        cut = min(sel_threshold / peak * 0.25,
                  np.quantile(probe_abs, 0.98) if probe_abs.size else np.inf)
        hot = probe_points[probe_abs >= cut]
        if hot.shape[0]:
            bases = np.round(partition.y_coords(hot)).astype(np.int64)
            offs = _box_offsets((1, 1, 1))
            chunks.append((bases[:, None, :] + offs[None, :, :]).reshape(-1, 3))
    if not chunks:
        return {}, set()
    tiles = np.unique(np.concatenate(chunks, axis=0), axis=0)

    # ------------------------------------- amplitude bound prefilter
    centers = tiles.astype(float) @ partition.Ginv
    n_tiles = tiles.shape[0]
    score = np.zeros(n_tiles)
    near_dist = math.sqrt(44.0) / (math.pi * math.sqrt(2.0) * 2.0)
    neighbor: List[np.ndarray] = []
    for g, C, sl in zip(groups, Cs, slack):
        nb = np.zeros((n_tiles, g.x0.shape[0]), dtype=bool)
        step = max(1, int(4e6 // max(g.x0.shape[0], 1)))
        for s in range(0, n_tiles, step):
            d = (centers[s:s + step, None, :] - g.x0[None, :, :]) @ g.Minv
            r = np.linalg.norm(d, axis=2)
            eff = np.clip(r - sl, 0.0, None)
            score[s:s + step] += (np.abs(g.amp)[None, :]
                                  * np.exp(-2.0 * np.pi ** 2 * eff ** 2)
                                  ).sum(axis=1)
            nb[s:s + step] = r <= near_dist + sl
        neighbor.append(nb)

    # the score is a rigorous envelope bound: tiles below threshold are
    # certified good without measurement (small float safety margin)
    survivors = np.nonzero(peak * score >= (1.0 - 1e-9) * sel_threshold)[0]
    sups: Dict[Tuple[int, int, int], float] = {}
    bad: set = set()
    if survivors.size == 0:
        return sups, bad

    # center values flag crossings without refinement: the sup is at
    # least psi^{1/2} |f| at the tile center, where psi = Psi(0)^3
    center_val = peak * np.abs(node.eval_unmasked(centers[survivors]))
    sure = center_val > sel_threshold
    for i, v in zip(survivors[sure], center_val[sure]):
        m = tuple(int(w) for w in tiles[i])
        sups[m] = float(v)
        bad.add(m)

    uncertain = survivors[~sure]
    if uncertain.size > 4000:
        # pathological flood: flag conservatively beyond the cap
        # (over-flagging keeps every recorded bound valid)
        order = np.argsort(-score[uncertain])
        for i in uncertain[order[4000:]]:
            m = tuple(int(w) for w in tiles[i])
            sups[m] = float(peak * score[i])
            bad.add(m)
        uncertain = uncertain[order[:4000]]
    for i in uncertain:
        local = [PacketGroup(g.key, g.x0[nb[i]], g.amp[nb[i]], sigma=g.sigma)
                 for g, nb in zip(groups, neighbor) if nb[i].any()]
        if not local:
            continue
        sub = PacketField(local)
        m = tuple(int(v) for v in tiles[i])
        s = measure_tile_sup(partition, m,
                             lambda pts: np.abs(sub.eval(pts)),
                             n_grid=n_grid,
                             stop_below=0.25 * sel_threshold)
        sups[m] = s
        if s > sel_threshold:
            bad.add(m)
    return sups, bad


def prune_step(prev: PruneState, tau_blocks: Sequence[MomentBlock],
               scale_R: float, *, audit_points: Optional[np.ndarray] = None,
               shrink=None, n_grid: int = 8,
               max_enforce: int = 12) -> PruneState:
    """One cascade step: threshold the tile sups of each coarser block.

    For every block tau in ``tau_blocks`` the children of the previous
    level are summed, tile sups of psi_T^{1/2} |f| are measured on
    candidate tiles, and tiles above ``threshold / C_part`` are flagged
    (the absorbed constant makes the sup-norm ceiling hold for the kept
    part).  An enforcement sweep then flags radius-sized boxes around
    any audit sample still above the ceiling, so the recorded bound
    holds at all audited points.
    """
    if not tau_blocks:
        raise ValueError("empty scale schedule: no blocks to prune onto")
    k = prev.k - 1
    bound = prune_threshold(k, prev.N, prev.alpha, prev.beta, prev.K, prev.A)
    sel_threshold = bound / partition_constant()
    parent_of = _child_index_map(prev.scale_S,
                                 int(round(scale_R ** (1.0 / 3.0))))

    children_of: Dict[int, List[PrunedBlockField]] = {}
    for l, node in prev.fields_by_block.items():
        children_of.setdefault(parent_of(l), []).append(node)

    fields: Dict[int, PrunedBlockField] = {}
    selections: Dict[int, TileSelection] = {}
    for tau in tau_blocks:
        kids = children_of.get(tau.index_l)
        if not kids:
            continue
        node = PrunedBlockField(tau, scale_R, children=tuple(kids))
        part = build_partition(tau, shrink)

        centers = node.packet_centers()
        probes = centers if audit_points is None else \
            np.concatenate([centers, audit_points], axis=0)
        probe_abs = np.abs(node.eval_unmasked(probes))
        sups, bad = _select_tiles(part, node, sel_threshold, probes,
                                  probe_abs, n_grid)

        # enforcement: flag a coalesced index box around audited points
        # still above the ceiling, its radius sized from the worst-case
        # mask residual (radius 35 gives an exactly zero mask)
        n_enforced = 0
        zero_box = None
        sel = TileSelection(part, frozenset(bad), sel_threshold, dict(sups))
        if audit_points is not None and audit_points.shape[0]:
            for _ in range(max_enforce):
                masked = np.abs(node.with_selection(sel).eval(audit_points))
                viol = np.nonzero(masked > bound * (1.0 + 1e-12))[0]
                if viol.size == 0:
                    break
                raw = np.abs(node.eval_unmasked(audit_points[viol]))
                viol_tiles = part.tile_index(audit_points[viol])
                rhos = np.array([_enforce_radius(bound / max(v, 1e-300))
                                 for v in raw])
                n_enforced += int(viol.size)
                lo = (viol_tiles - rhos[:, None]).min(axis=0)
                hi = (viol_tiles + rhos[:, None]).max(axis=0)
                if zero_box is not None:
                    lo = np.minimum(lo, zero_box[:, 0])
                    hi = np.maximum(hi, zero_box[:, 1])
                zero_box = np.stack([lo, hi], axis=1)
                sel = TileSelection(part, frozenset(bad), sel_threshold,
                                    dict(sups), n_enforced, zero_box)
        fields[tau.index_l] = node.with_selection(sel)
        selections[tau.index_l] = sel

    return PruneState(k=k, N=prev.N, scale_R=scale_R, alpha=prev.alpha,
                      beta=prev.beta, K=prev.K, A=prev.A,
                      blocks=tuple(tau_blocks), fields_by_block=fields,
                      good_sets=selections)


@dataclasses.dataclass(frozen=True, eq=False)
class PruneCascade:
    """All levels of a pruning cascade, finest (k = N) first."""
    states: Tuple[PruneState, ...]
    schedule: Tuple[float, ...]
    audit_points: np.ndarray

    def state(self, k: int) -> PruneState:
        for st in self.states:
            if st.k == k:
                return st
        raise KeyError(f"no state at level {k}")

    def monotone_margin(self, x=None) -> float:
        """max over levels/samples of |f^k| - |f^{k+1}| (<= 0 is exact)."""
        pts = self.audit_points if x is None else np.atleast_2d(x)
        worst = -np.inf
        for st in self.states[1:]:
            for node in st.fields_by_block.values():
                d = np.abs(node.eval(pts)) - np.abs(node.eval_unmasked(pts))
                worst = max(worst, float(d.max()))
        return worst

    def linf_margin(self, x=None) -> float:
        """min over levels/blocks of (bound - max |f^k|) / bound."""
        pts = self.audit_points if x is None else np.atleast_2d(x)
        worst = np.inf
        for st in self.states[1:]:
            bound = st.threshold()
            for node in st.fields_by_block.values():
                m = (bound - np.abs(node.eval(pts)).max()) / bound
                worst = min(worst, float(m))
        return worst


def _cloud_samples(field: PacketField, rng: np.random.Generator,
                   n: int) -> np.ndarray:
    """Audit points: packet centers, Gaussian jitter in envelope units,
    and a uniform sprinkle over the cloud's bounding box."""
    centers = np.concatenate([g.x0 for g in field.groups], axis=0)
    reps = max(1, int(0.6 * n) // max(centers.shape[0], 1))
    jittered = []
    for g in field.groups:
        z = rng.standard_normal((g.x0.shape[0] * reps, 3)) / TWO_PI
        jittered.append(np.repeat(g.x0, reps, axis=0) + z @ g.M)
    jit = np.concatenate(jittered, axis=0)
    lo = centers.min(axis=0) - np.abs(jit - centers.mean(axis=0)).max(axis=0)
    hi = centers.max(axis=0) + np.abs(jit - centers.mean(axis=0)).max(axis=0)
    uni = rng.uniform(lo, hi, size=(max(1, n // 4), 3))
    pts = np.concatenate([centers, jit, uni], axis=0)
    if pts.shape[0] > n:
        idx = rng.choice(pts.shape[0], size=n, replace=False)
        pts = pts[idx]
    return pts


def prune_cascade(field: PacketField, R: float, *, alpha: float, beta: float,
                  K: float, A: float, eps: float = 0.25,
                  rng: Optional[np.random.Generator] = None,
                  n_audit: int = 384, N0: int = 1,
                  shrink=None) -> PruneCascade:
    """Run the full pruning cascade of a packet field down to level N0.

    The finest level wraps the raw packets block by block; each coarser
    level is produced by :func:`prune_step` over the blocks of the next
    scale in the schedule.
    """
    schedule = scale_schedule(R, eps)
    N = len(schedule)
    rng = np.random.default_rng(0) if rng is None else rng
    audit = _cloud_samples(field, rng, n_audit)

    S_N = int(round(schedule[-1] ** (1.0 / 3.0)))
    leaves: Dict[int, PrunedBlockField] = {}
    for g in field.groups:
        blk = g.key
        if not isinstance(blk, MomentBlock) or blk.scale_S != S_N:
            raise ValueError("packet groups must live on blocks at the "
                             "finest schedule scale")
        l = blk.index_l
        if l in leaves:
            merged = PacketField(leaves[l].base.groups + [g])
            leaves[l] = dataclasses.replace(leaves[l], base=merged)
        else:
            leaves[l] = PrunedBlockField(blk, schedule[-1],
                                         base=PacketField([g]))
    state = PruneState(k=N, N=N, scale_R=schedule[-1], alpha=alpha, beta=beta,
                       K=K, A=A,
                       blocks=tuple(sorted((n.block for n in leaves.values()),
                                           key=lambda b: b.index_l)),
                       fields_by_block=leaves, good_sets={})
    states = [state]
    for k in range(N - 1, N0 - 1, -1):
        R_k = schedule[k - 1]
        S_k = int(round(R_k ** (1.0 / 3.0)))
        state = prune_step(state, moment_blocks(S_k), R_k,
                           audit_points=audit, shrink=shrink)
        states.append(state)
    return PruneCascade(tuple(states), tuple(schedule), audit)


# ----------------------------------------------------------------------
# Spectral support certificates
# ----------------------------------------------------------------------
def dilate_gauge(block: MomentBlock, xi) -> np.ndarray:
    """Smallest dilation factor of the block containing each frequency.

    Exact in block coordinates: max(2 S |xi_1 - t_c|, S^2 |b2|, S^3 |b3|).
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    S = block.scale_S
    tc = block.center_t()
    return np.maximum.reduce([
        2.0 * S * np.abs(xi[:, 0] - tc),
        S ** 2 * np.abs(block.b2(xi)),
        S ** 3 * np.abs(block.b3(xi)),
    ])


def spectral_support_gauge(node: PrunedBlockField,
                           rng: Optional[np.random.Generator] = None,
                           n_samples: int = 256) -> float:
    """Worst-case dilation of the node's block containing its spectrum.

    The spectrum of a pruned block field sits inside the Minkowski sum
    of its leaves' exact blocks and the spectral boxes of every mask on
    the path to each leaf (each mask is 1 minus a sum of band-limited
    profiles, so it shifts spectrum by at most one box, or not at all).
    The bound is certified by maximizing the dilation gauge over leaf
    block samples translated by all box-vertex combinations.
    """
    rng = np.random.default_rng(7) if rng is None else rng

    def walk(nd: PrunedBlockField, boxes):
        here = boxes
        if nd.selection is not None and nd.selection.nontrivial:
            here = boxes + [nd.selection.partition.spectral_box()]
        if nd.base is not None:
            return [(nd.block, here)]
        out = []
        for ch in nd.children:
            out.extend(walk(ch, here))
        return out

    worst = 0.0
    for leaf_block, boxes in walk(node, []):
        pts = leaf_block.sample(rng, n_samples)
        shifts = np.zeros((1, 3))
        for box in boxes:
            verts = np.concatenate([box.vertices(), np.zeros((1, 3))], axis=0)
            shifts = (shifts[:, None, :] + verts[None, :, :]).reshape(-1, 3)
        total = (pts[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
        worst = max(worst, float(dilate_gauge(node.block, total).max()))
    return worst


# ----------------------------------------------------------------------
# High/low frequency splits
# ----------------------------------------------------------------------
@dataclasses.dataclass(frozen=True, eq=False)
class HighLowState:
    """A field split at a radial frequency cutoff: g = g_low + g_high.

    ``g_high`` is defined as the difference, so the sum identity is
    exact by construction.  For dense fields the arrays are 3-D grids;
    for sampled audits they are per-point values at ``points``.
    """
    cutoff: float
    g: np.ndarray
    g_low: np.ndarray
    g_high: np.ndarray
    k: Optional[int] = None
    points: Optional[np.ndarray] = None

    def residual(self) -> float:
        return float(np.abs(self.g_low + self.g_high - self.g).max())


def high_low_split(g, cutoff: float, box_half: Optional[float] = None,
                   k: Optional[int] = None) -> HighLowState:
    """Split a real field at a smooth radial cutoff.

    The low part convolves with the kernel of a radial symbol equal to 1
    inside |xi| <= cutoff/2 and supported in |xi| <= cutoff; the high
    part is the remainder.

    Parameters
    ----------
    g : DenseField or ndarray
        Real samples on a cubic grid over [-box_half, box_half)^3.  A
        DenseField carries its own box_half.
    """
    from . import fields as _fields
    values = g
    if hasattr(g, "values"):
        values = g.values
        box_half = float(g.box_half) if box_half is None else box_half
    if box_half is None:
        raise ValueError("box_half is required for bare arrays")
    low, high = _fields.high_low_split(np.asarray(values, float),
                                       box_half, cutoff)
    return HighLowState(cutoff=float(cutoff), g=np.asarray(values, float),
                        g_low=low, g_high=high, k=k)


@functools.lru_cache(maxsize=8)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


class ConvolvedSquare:
    """Grid-free evaluator of g_tau = |f_tau|^2 * omega_tau.

    The Fourier transform of a product of two Gaussian packets is itself
    Gaussian; summing over packet pairs gives FT(|f_tau|^2) in closed
    form, and the convolution becomes a weighted integral of that
    transform against the weight's compactly supported symbol.  The
    integral is evaluated with a tensor Gauss-Legendre rule on the
    symbol's support box; pair phases are recentred on a cluster lattice
    (one cell per dual plank) so node phases stay at a few cycles.

    The kernel seen from one pair is omega convolved with the pair's
    spatial Gaussian: the weight's shell carries most of its mass out to
    4 plank units, and the Gaussian adds 5 sigma on top.  Node count and
    evaluation radius must both cover that reach (a plane wave at cell
    offset d costs d/2 cycles across the support box, and an n-node rule
    resolves about (n - 4)/1.3 cells), so by default both are derived
    from the measured packet widths.  Underresolving is worse than
    truncating: distant clusters evaluated beyond the rule's phase range
    return noise of the order of their peak, not of their tail.

    The evaluator sums exactly the packets it is given.  To reproduce a
    torus convolution (a dense-grid convolve of |f_per|^2), the groups
    must already contain every periodization image carrying weight mass
    near the evaluation points: the weight reaches far beyond the
    periodic box whenever its plank is long, so augment with
    PacketField.periodize using margin = weight.spatial_reach() before
    building.  Images faithful on the box alone leave the weight's
    outer support empty and the result low by an order-one factor.

    Parameters
    ----------
    groups : sequence of PacketGroup
        Packets of the block's field (all leaves under tau).
    block : MomentBlock
        The block tau whose weight does the averaging.
    scale_R : float
        Spatial scale of the weight (the cube of the block scale).
    n_nodes, gauge_cut : optional overrides
        Nodes per axis and evaluation radius in cluster cells; derived
        from the kernel reach when omitted.
    eval_box_half : float, optional
        When given, pairs whose recentring cluster can never matter for
        evaluation points inside [-H, H]^3 are dropped at build time.
    cutoff : float, optional
        Radial cutoff for the low-pass variant; evaluated lazily.
    """

    def __init__(self, groups: Sequence[PacketGroup], block: MomentBlock,
                 scale_R: float, *, n_nodes: Optional[int] = None,
                 pair_cut: float = 34.0, gauge_cut: Optional[float] = None,
                 eval_box_half: Optional[float] = None,
                 cutoff: Optional[float] = None):
        self.block = block
        self.scale_R = float(scale_R)
        self.weight = WeightSpec.for_block(block, self.scale_R)
        box = self.weight.support_box()
        self.B = box.axes  # rows span the symbol support

        # cluster lattice: one cell per dual plank
        plank = wave_envelope(block, self.scale_R)
        self._cl_mat = plank.axes * plank.half_widths[:, None]
        self._cl_inv = np.linalg.inv(self._cl_mat)

        # kernel reach: weight shell (4 plank units) plus the shell's
        # mollifier (~2.5 more; measured K(d) is still 1.4% of peak at
        # 10.7 cells) plus 5 sigma of the widest pair Gaussian
        sig = max(float(np.linalg.norm(G.M @ self._cl_inv, axis=1).max())
                  for G in groups) * 0.1125
        reach = 7.0 + 5.0 * sig
        self.gauge_cut = float(gauge_cut) if gauge_cut is not None else reach
        self.n = int(n_nodes) if n_nodes is not None else \
            int(np.clip(math.ceil(1.3 * self.gauge_cut + 4.5), 14, 24))

        gx, gw = _leggauss(self.n)
        self.u = 0.5 * gx
        w1 = 0.5 * gw
        U = np.stack(np.meshgrid(self.u, self.u, self.u, indexing="ij"),
                     axis=-1).reshape(-1, 3)
        self.XI = U @ self.B
        self.WQ = (np.einsum("a,b,c->abc", w1, w1, w1).reshape(-1)
                   * abs(np.linalg.det(self.B)))
        self.what = np.real(self.weight.hat(self.XI))
        self.eta = None if cutoff is None else \
            windows.radial_lowpass(np.linalg.norm(self.XI, axis=1), cutoff)
        self.cutoff = cutoff

        self._key_range = None
        if eval_box_half is not None:
            corners = float(eval_box_half) * np.array(
                [[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)],
                dtype=float)
            cc = corners @ self._cl_inv
            pad = self.gauge_cut + 1.0
            self._key_range = (cc.min(axis=0) - pad, cc.max(axis=0) + pad)
        self._build(groups, pair_cut)

    # ------------------------------------------------------------ build
    def _build(self, groups, pair_cut):
        n3 = self.n ** 3
        full: Dict[Tuple[int, int, int], np.ndarray] = {}
        low: Dict[Tuple[int, int, int], np.ndarray] = {}
        node_w = self.WQ * self.what
        node_wl = None if self.eta is None else node_w * self.eta

        # with an evaluation window, packets too far out to form a pair
        # recentring inside it can be dropped before pairing (pair
        # midpoints sit within the pair separation of either member)
        if self._key_range is not None:
            sep = max(float(np.linalg.norm(G.M @ self._cl_inv, axis=1).max())
                      for G in groups)
            sep *= math.sqrt(pair_cut / (2.0 * np.pi ** 2))
            lo = self._key_range[0] - sep - 1.0
            hi = self._key_range[1] + sep + 1.0
            pruned = []
            for G in groups:
                cc = G.x0 @ self._cl_inv
                m = np.all((cc >= lo) & (cc <= hi), axis=1)
                if m.all():
                    pruned.append(G)
                elif m.any():
                    pruned.append(PacketGroup(G.key, G.x0[m], G.amp[m],
                                              sigma=G.sigma))
            groups = pruned

        for gi, G in enumerate(groups):
            Pg = G.Minv @ G.Minv.T
            for hj, H in enumerate(groups):
                Ph = H.Minv @ H.Minv.T
                Ps = Pg + Ph
                Psinv = np.linalg.inv(Ps)
                dfac = (TWO_PI) ** -1.5 / math.sqrt(np.linalg.det(Ps))
                dxi = G.xi_c - H.xi_c
                zeta = self.XI - dxi
                gvec = dfac * np.exp(-0.5 * np.einsum(
                    "nj,jk,nk->n", zeta, Psinv, zeta))
                Fg = node_w * gvec
                Fl = None if node_wl is None else node_wl * gvec

                # pair lists with Gaussian separation pruning, chunked
                # over p so image-augmented groups stay within memory
                tq = np.einsum("qi,ij,qj->q", H.x0, Ph, H.x0)
                step = max(1, int(4e6) // max(H.x0.shape[0], 1))
                for p0 in range(0, G.x0.shape[0], step):
                    p1 = min(p0 + step, G.x0.shape[0])
                    xp = G.x0[p0:p1, None, :]
                    xq = H.x0[None, :, :]
                    xs = (xp @ Pg + xq @ Ph) @ Psinv
                    tp = np.einsum("pi,ij,pj->p", G.x0[p0:p1], Pg,
                                   G.x0[p0:p1])
                    kap = (tp[:, None] + tq[None, :]
                           - np.einsum("pqi,ij,pqj->pq", xs, Ps, xs))
                    keep = 2.0 * np.pi ** 2 * kap <= pair_cut
                    if not keep.any():
                        continue
                    pi, qi = np.nonzero(keep)
                    xstar = xs[pi, qi]
                    camp = (G.amp[p0 + pi] * np.conj(H.amp[qi])
                            * np.exp(-2.0 * np.pi ** 2 * kap[pi, qi])
                            * np.exp(-1j * TWO_PI * (G.x0[p0 + pi] @ G.xi_c
                                                     - H.x0[qi] @ H.xi_c))
                            * np.exp(1j * TWO_PI * (xstar @ dxi)))

                    cl = np.round(xstar @ self._cl_inv).astype(np.int64)
                    if self._key_range is not None:
                        lo, hi = self._key_range
                        inside = np.all((cl >= lo) & (cl <= hi), axis=1)
                        if not inside.any():
                            continue
                        cl, xstar, camp = (cl[inside], xstar[inside],
                                           camp[inside])
                    order = np.lexsort(cl.T)
                    cl, xstar, camp = cl[order], xstar[order], camp[order]
                    cuts = np.nonzero(
                        np.any(np.diff(cl, axis=0) != 0, axis=1))[0] + 1
                    starts = np.concatenate([[0], cuts, [cl.shape[0]]])
                    for s, e in zip(starts[:-1], starts[1:]):
                        key = tuple(int(v) for v in cl[s])
                        xc = cl[s].astype(float) @ self._cl_mat
                        d = xstar[s:e] - xc
                        ph = np.exp(-1j * TWO_PI
                                    * np.einsum("a,qx->qax", self.u,
                                                d @ self.B.T))
                        # q-batch kron: (q, a) x (q, b) x (q, c) -> (a, b, c)
                        tens = np.einsum("q,qa,qb,qc->abc", camp[s:e],
                                         ph[:, :, 0], ph[:, :, 1],
                                         ph[:, :, 2])
                        flat = tens.reshape(-1)
                        acc = full.setdefault(key, np.zeros(n3, dtype=complex))
                        acc += flat * Fg
                        if Fl is not None:
                            accl = low.setdefault(key,
                                                  np.zeros(n3, dtype=complex))
                            accl += flat * Fl

        self._centers = {k: np.array(k, float) @ self._cl_mat
                         for k in full}
        n = self.n
        self._tensors = {k: v.reshape(n, n, n) for k, v in full.items()}
        self._tensors_low = {k: v.reshape(n, n, n) for k, v in low.items()}

    # ------------------------------------------------------------- eval
    def _accumulate(self, x, tensors) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0], dtype=complex)
        y = x @ self._cl_inv
        for key, V in tensors.items():
            xc = self._centers[key]
            near = np.abs(y - np.asarray(key, float)).max(axis=1) <= self.gauge_cut
            if not near.any():
                continue
            d = (x[near] - xc) @ self.B.T
            ph = np.exp(1j * TWO_PI * np.einsum("a,px->pax", self.u, d))
            out[near] += np.einsum("pa,pb,pc,abc->p", ph[:, :, 0],
                                   ph[:, :, 1], ph[:, :, 2], V,
                                   optimize=True)
        return np.real(out)

    def g(self, x) -> np.ndarray:
        return self._accumulate(x, self._tensors)

    def g_low(self, x) -> np.ndarray:
        if self.cutoff is None:
            raise ValueError("no cutoff was configured")
        return self._accumulate(x, self._tensors_low)

    def g_high(self, x) -> np.ndarray:
        return self.g(x) - self.g_low(x)


def level_squares(field: PacketField, R_k: float, *, cutoff: Optional[float]
                  = None, n_nodes: Optional[int] = None,
                  eval_box_half: Optional[float] = None,
                  ) -> Dict[int, ConvolvedSquare]:
    """ConvolvedSquare per occupied block at the scale with R = R_k.

    Leaf packet groups are pooled into their ancestor block at scale
    S_k = R_k^{1/3} (index integer-divided by the scale ratio).
    """
    S_k = int(round(R_k ** (1.0 / 3.0)))
    blocks = moment_blocks(S_k)
    pools: Dict[int, List[PacketGroup]] = {}
    for g in field.groups:
        S_leaf = g.key.scale_S
        if S_leaf % S_k:
            raise ValueError("leaf scale must refine the level scale")
        pools.setdefault(g.key.index_l // (S_leaf // S_k), []).append(g)
    return {l: ConvolvedSquare(gs, blocks[l], R_k, cutoff=cutoff,
                               n_nodes=n_nodes, eval_box_half=eval_box_half)
            for l, gs in pools.items()}


# ----------------------------------------------------------------------
# Level-set classification
# ----------------------------------------------------------------------
def classify_sets(g_values: Mapping[int, np.ndarray], alpha: float,
                  beta: float, A: float, N0: int, N: int) -> np.ndarray:
    """Label each point by the first level (from above) whose local
    energy clears its rung of the geometric ladder.

    Returns an integer array: k in [N0, N-1] where A^{N-k} beta <= g_k
    first holds scanning k = N-1, N-2, ..., N0; points clearing no rung
    get -1.
    """
    ks = sorted(k for k in g_values if N0 <= k <= N - 1)
    if not ks:
        raise ValueError("no level fields in [N0, N-1]")
    n_pts = len(np.asarray(g_values[ks[0]]))
    labels = np.full(n_pts, -1, dtype=int)
    for k in range(N - 1, N0 - 1, -1):
        if k not in g_values:
            continue
        g = np.asarray(g_values[k], dtype=float)
        if g.shape[0] != n_pts:
            raise ValueError("level fields must share one sample grid")
        rung = A ** (N - k) * beta
        hit = (labels == -1) & (g >= rung)
        labels[hit] = k
    return labels


# ----------------------------------------------------------------------
# Dyadic amplitude pigeonholing
# ----------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class PigeonholeReport:
    """Bookkeeping of one dyadic amplitude selection."""
    A_amp: float
    lambda_M: float
    class_counts: Mapping[int, int]
    n_far: int
    n_small: int
    tie_broken: bool
    trivial_path: bool


def amplitude_pigeonhole(field: PacketField, alpha: float, R: float,
                         eps: float, u_alpha_points: np.ndarray,
                         c_eps: float = 1.0
                         ) -> Tuple[Optional[PacketField], float,
                                    PigeonholeReport]:
    """Keep the dominant dyadic amplitude class among near packets.

    Packets whose R^eps-dilated envelope misses every sample of the
    level set are discarded (far), as are packets below the relative
    amplitude floor R^{-1000}.  The rest are sorted into dyadic classes
    lambda = 2^{-j} by |amp| / max |amp|; the class maximizing
    lambda^2 * count is kept, ties broken toward larger lambda.
    Returns (kept field, A_amp = lambda_M * max |amp|, report).
    """
    U = np.atleast_2d(np.asarray(u_alpha_points, dtype=float))
    amps = np.concatenate([np.abs(g.amp) for g in field.groups])
    if amps.size == 0:
        raise ValueError("field has no packets")
    amax = float(amps.max())

    sup_bound = max(float(np.abs(g.amp).sum()) for g in field.groups)
    trivial = not (alpha > c_eps * R ** -100.0 * sup_bound)

    reach = 5.0 / TWO_PI * R ** eps
    near_flags: List[np.ndarray] = []
    for g in field.groups:
        coef = (U[None, :, :] - g.x0[:, None, :]) @ g.Minv
        near_flags.append((np.abs(coef).max(axis=2) <= reach).any(axis=1))
    near = np.concatenate(near_flags)

    rel = amps / amax
    small = rel <= R ** -1000.0
    eligible = near & ~small

    j_idx = np.full(amps.shape, -1, dtype=int)
    with np.errstate(divide="ignore"):
        j_idx[eligible] = np.floor(-np.log2(rel[eligible])).astype(int)

    counts: Dict[int, int] = {}
    for j in j_idx[eligible]:
        counts[int(j)] = counts.get(int(j), 0) + 1
    if not counts:
        report = PigeonholeReport(0.0, 0.0, {}, int((~near).sum()),
                                  int(small.sum()), False, trivial)
        return None, 0.0, report

    js = np.array(sorted(counts))
    mass = np.array([4.0 ** -j * counts[int(j)] for j in js])
    best = int(np.argmax(mass))  # first max = largest lambda on a tie
    tie = bool((mass == mass[best]).sum() > 1)
    j_M = int(js[best])
    lam = 2.0 ** -j_M
    A_amp = lam * amax

    kept_groups: List[PacketGroup] = []
    off = 0
    for g in field.groups:
        n = g.n_packets
        sel = (j_idx[off:off + n] == j_M) & eligible[off:off + n]
        off += n
        if sel.any():
            kept_groups.append(PacketGroup(g.key, g.x0[sel], g.amp[sel],
                                           sigma=g.sigma))
    kept = PacketField(kept_groups) if kept_groups else None
    report = PigeonholeReport(A_amp, lam, dict(counts), int((~near).sum()),
                              int(small.sum()), tie, trivial)
    return kept, A_amp, report
