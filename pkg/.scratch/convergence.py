import numpy as np, time
from msl import geometry, fields, packets

R = 64.0
box_half, n_grid = 64.0, 256
rng = np.random.default_rng(42)
leaf = geometry.MomentBlock(4, 2)
tau = geometry.MomentBlock(2, 1)
x0 = rng.uniform(-0.7*box_half, 0.7*box_half, size=(4, 3))
amp = rng.standard_normal(4) + 1j*rng.standard_normal(4)
gB = fields.PacketGroup(leaf, x0, amp)
fB = fields.PacketField([gB])
df = fB.to_dense(box_half, n_grid)
dens = np.abs(df.values)**2
ax = df.x1d()
del df
specT = fields.WeightSpec.for_block(tau, R)
gd = fields.convolve_weight(dens, box_half, specT)
del dens
i0 = np.round((x0[0] + box_half) / (2*box_half/n_grid)).astype(int)
idxs = np.array([i0, (i0+[5,0,0])%n_grid, (i0+[0,0,6])%n_grid])
gd_vals = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
xy = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)
del gd
print("dense:", np.array2string(gd_vals, precision=6), flush=True)

shifts = gB.periodic_shifts(box_half, tol=1e-13)
ci = (x0[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
ai = np.repeat(amp, len(shifts))
giB = fields.PacketGroup(leaf, ci, ai)
for n, gau in [(16, 8.7), (20, 12.0), (24, 16.0), (24, 20.0)]:
    t0 = time.time()
    cs = packets.ConvolvedSquare([giB], tau, R, n_nodes=n, gauge_cut=gau,
                                 eval_box_half=box_half)
    gc = cs.g(xy)
    print("n=%2d gauge=%4.1f: %s  rel %.3e  (%.0fs, %d cl)"
          % (n, gau, np.array2string(gc, precision=6),
             (np.abs(gc-gd_vals)/gd_vals).max(),
             time.time()-t0, len(cs._tensors)), flush=True)
