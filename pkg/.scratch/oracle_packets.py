"""Pin every literal that tests/test_packets.py will freeze."""
import numpy as np
from msl import packets, windows, geometry, fields

rng = np.random.default_rng(20260816)

# 1. partition constant, independent recompute
u = np.linspace(-0.5, 0.5, 20001)
j = np.arange(-40, 41)
s = np.sqrt(np.clip(windows.Psi(u[:, None] - j[None, :]), 0, None)).sum(axis=1)
ind = float(s.max() ** 3)
print("C_PART lib  %.15f" % packets.partition_constant())
print("C_PART ind  %.15f  rel %.2e" % (ind, abs(ind / packets.partition_constant() - 1)))

# 2. box sums at a partition of a real block
blk = geometry.MomentBlock(4, 2)
part = packets.build_partition(blk)
pts = rng.uniform(-1, 1, (64, 3)) @ part.Ginv * 3.0
b35 = part.box_sum(pts, 35)
b13 = part.box_sum(pts, 13)
b2 = part.box_sum(pts, 2)
print("radius35 max|.-1| %.3e" % np.abs(b35 - 1).max())
print("radius13 max deficit %.3e" % np.abs(b13 - 1).max())
print("radius2  range %.6f .. %.6f" % (b2.min(), b2.max()))
ctr = part.x_coords(np.zeros(3))
print("radius2 at tile center %.6f" % part.box_sum(ctr, 2)[0])
edge = part.x_coords(np.array([0.5, 0.5, 0.5]))
print("radius2 at tile corner %.6f" % part.box_sum(edge, 2)[0])

# 3. decay example: center vs 3*diam
m = np.zeros(3)
c0 = part.psi(m, part.x_coords(np.zeros(3)))
diam = 2.0 * part.tile(m).bounding_radius()
dirs = rng.standard_normal((32, 3))
dirs /= np.linalg.norm(dirs, axis=1)[:, None]
far = part.psi(m, part.x_coords(np.zeros(3)) + 3 * diam * dirs)
print("psi center %.6f  max at 3diam %.3e" % (c0, far.max()))

# 4. fitted order-3 decay in y coordinates
y = rng.uniform(-30, 30, (20000, 3))
vals = np.prod(windows.Psi(y), axis=-1)
C = float((vals * (1 + (y ** 2).sum(axis=1)) ** 3).max())
y2 = rng.uniform(-34, 34, (40000, 3))
v2 = np.prod(windows.Psi(y2), axis=-1)
worst = float((v2 * (1 + (y2 ** 2).sum(axis=1)) ** 3).max())
print("decay C fit %.6f  wider-sample worst %.6f" % (C, worst))

# 5. spectral box containment in the centered block
for S in (2, 4, 8):
    worstg = 0.0
    wfun = np.zeros(3)
    for l in range(S):
        b = geometry.MomentBlock(S, l)
        p = packets.build_partition(b)
        box = p.spectral_box()
        V = np.concatenate([box.vertices(), box.halton_samples(500)], axis=0)
        xi = b.center_point()[None, :] + V
        g = packets.dilate_gauge(b, xi)
        worstg = max(worstg, float(g.max()))
        W = b.normalizing_linear()
        n = V @ W.T
        f1 = np.abs(n[:, 0]).max()
        f2 = np.abs(n[:, 1] - n[:, 0] ** 2).max()
        f3 = np.abs(n[:, 2] - 3 * n[:, 0] * n[:, 1] + 2 * n[:, 0] ** 3).max()
        wfun = np.maximum(wfun, [f1, f2, f3])
    print("S=%d worst gauge(center+box) %.6f  functionals %s" % (S, worstg, np.round(wfun, 6)))

# 6. spike prune_step oracle (threshold example K=2, A=4, N-k+1=2, b/a=1)
S_leaf, S_par = 4, 2
leaf = geometry.MomentBlock(S_leaf, 2)
par = geometry.MomentBlock(S_par, 1)
ppart = packets.build_partition(par)
# put the two packets at tile centers well separated on the parent lattice
xa = ppart.x_coords(np.array([0.0, 0.0, 0.0]))
xb = ppart.x_coords(np.array([40.0, 0.0, 0.0]))
g = fields.PacketGroup(leaf, np.stack([xa, xb]), np.array([100.0, 10.0]))
f = fields.PacketField([g])
leaf_node = packets.PrunedBlockField(leaf, float(S_leaf ** 3), base=f)
st = packets.PruneState(k=2, N=2, scale_R=float(S_leaf ** 3), alpha=1.0,
                        beta=1.0, K=2.0, A=4.0, blocks=(leaf,),
                        fields_by_block={leaf.index_l: leaf_node},
                        good_sets={})
print("threshold %.6f  sel %.6f" % (st.threshold() * 1,  # k=1 below
      packets.prune_threshold(1, 2, 1.0, 1.0, 2.0, 4.0) / packets.partition_constant()))
audit = np.concatenate([xa[None], xb[None],
                        xa + rng.standard_normal((40, 3)) * 2,
                        xb + rng.standard_normal((40, 3)) * 2], axis=0)
st1 = packets.prune_step(st, [par], float(S_par ** 3), audit_points=audit)
node = st1.fields_by_block[par.index_l]
fa0, fb0 = np.abs(f.eval(np.stack([xa, xb])))
fa1, fb1 = np.abs(node.eval(np.stack([xa, xb])))
print("at amp100: raw %.4f pruned %.6f" % (fa0, fa1))
print("at amp10 : raw %.4f pruned %.6f  ratio %.6f" % (fb0, fb1, fb1 / fb0))
print("bad tiles: %s" % sorted(node.selection.bad))
print("monotone margin %.3e  linf margin %.6f"
      % (packets.PruneCascade((st, st1), (8.0, 64.0), audit).monotone_margin(),
         st1.linf_margin(audit) if hasattr(st1, "linf_margin") else -1))

# 7. all-below identity and all-above zero
g_lo = fields.PacketGroup(leaf, np.stack([xa, xb]), np.array([0.5, 0.5]))
f_lo = fields.PacketField([g_lo])
st_lo = packets.PruneState(k=2, N=2, scale_R=64.0, alpha=1.0, beta=1.0,
                           K=2.0, A=4.0, blocks=(leaf,),
                           fields_by_block={leaf.index_l:
                               packets.PrunedBlockField(leaf, 64.0, base=f_lo)},
                           good_sets={})
st_lo1 = packets.prune_step(st_lo, [par], 8.0, audit_points=audit)
nlo = st_lo1.fields_by_block[par.index_l]
d = np.abs(nlo.eval(audit) - nlo.eval_unmasked(audit)).max()
print("all-below: nontrivial=%s  max dev %.3e"
      % (nlo.selection.nontrivial, d))

g_hi = fields.PacketGroup(leaf, np.stack([xa, xb]), np.array([1e4, 1e4]))
f_hi = fields.PacketField([g_hi])
st_hi = packets.PruneState(k=2, N=2, scale_R=64.0, alpha=1.0, beta=1.0,
                           K=2.0, A=4.0, blocks=(leaf,),
                           fields_by_block={leaf.index_l:
                               packets.PrunedBlockField(leaf, 64.0, base=f_hi)},
                           good_sets={})
st_hi1 = packets.prune_step(st_hi, [par], 8.0, audit_points=audit)
nhi = st_hi1.fields_by_block[par.index_l]
print("all-above: f^k at centers %s  (raw %.1f)"
      % (np.abs(nhi.eval(np.stack([xa, xb]))), 1e4))

# 8. pigeonhole propM sanity
U = np.stack([xa, xb])
amps = rng.uniform(0.5, 1.0, 24).astype(complex)
centers = xa[None, :] + rng.standard_normal((24, 3)) * 1.5
gg = fields.PacketGroup(leaf, centers, amps)
kept, A_amp, rep = packets.amplitude_pigeonhole(
    fields.PacketField([gg]), alpha=0.1, R=64.0, eps=0.25, u_alpha_points=U)
sup = np.abs(kept.eval(centers)).max()
print("pigeonhole: A_amp %.4f  lam %.3f  classes %s  sup %.4f  n_far %d"
      % (A_amp, rep.lambda_M, dict(rep.class_counts), sup, rep.n_far))

