import numpy as np, time
from msl import geometry, fields, packets

rng = np.random.default_rng(42)
R, S = 64.0, 4
blk = geometry.MomentBlock(S, 1)
box_half, n_grid = 64.0, 256
x0 = rng.uniform(-0.75*box_half, 0.75*box_half, size=(5, 3))
amp = rng.standard_normal(5) + 1j*rng.standard_normal(5)
g1 = fields.PacketGroup(blk, x0, amp)
f = fields.PacketField([g1])

df = f.to_dense(box_half, n_grid)
dens = np.abs(df.values)**2
spec = fields.WeightSpec.for_block(blk, R)
gd = fields.convolve_weight(dens, box_half, spec)
ax = df.x1d()
idxs = []
for c in g1.x0:
    i0 = np.round((c + box_half) / (2*box_half/n_grid)).astype(int)
    for d in ([0,0,0],[4,0,0],[0,4,0],[0,0,4],[-6,3,2]):
        idxs.append((i0 + d) % n_grid)
idxs = np.array(idxs)
gd_vals = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
xy = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)
del gd, dens, df
print("dense ref mean %.5e" % gd_vals.mean(), flush=True)

shifts = g1.periodic_shifts(box_half, tol=1e-13)
ci = (g1.x0[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
ai = np.repeat(g1.amp, len(shifts))
gi = fields.PacketGroup(blk, ci, ai)

for tag, kw in [("base", {}),
                ("gauge12", dict(gauge_cut=12.0)),
                ("gauge20", dict(gauge_cut=20.0)),
                ("pair60", dict(pair_cut=60.0)),
                ("g12p60", dict(gauge_cut=12.0, pair_cut=60.0))]:
    t0 = time.time()
    cs = packets.ConvolvedSquare([gi], blk, R, n_nodes=12, **kw)
    gc = cs.g(xy)
    rel = np.abs(gc - gd_vals) / gd_vals.max()
    print("%-8s rel max %.3e mean %.3e  (%.1fs, %d clusters)"
          % (tag, rel.max(), rel.mean(), time.time()-t0, len(cs._tensors)),
          flush=True)
