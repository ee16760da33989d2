import numpy as np, time
from msl import geometry, fields, packets

rng = np.random.default_rng(11)
R, S = 8.0, 2
blk = geometry.MomentBlock(S, 1)
box_half, n_grid = 8.0, 64
x0 = rng.uniform(-0.75*box_half, 0.75*box_half, size=(4, 3))
amp = rng.standard_normal(4) + 1j*rng.standard_normal(4)
g1 = fields.PacketGroup(blk, x0, amp)
f = fields.PacketField([g1])
print("M rows:", np.round(g1.M, 2).tolist(), flush=True)

df = f.to_dense(box_half, n_grid)
dens = np.abs(df.values)**2
spec = fields.WeightSpec.for_block(blk, R)
gd = fields.convolve_weight(dens, box_half, spec)
ax = df.x1d()

idxs = []
for c in g1.x0[:2]:
    i0 = np.round((c + box_half) / (2*box_half/n_grid)).astype(int)
    for d in ([0,0,0],[3,0,0],[0,0,5]):
        idxs.append((i0 + d) % n_grid)
idxs = np.array(idxs)
gd_vals = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
xy = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)

shifts = g1.periodic_shifts(box_half, tol=1e-13)
print("images:", len(shifts), flush=True)
ci = (g1.x0[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
ai = np.repeat(g1.amp, len(shifts))
gi = fields.PacketGroup(blk, ci, ai)
t0 = time.time()
cs = packets.ConvolvedSquare([gi], blk, R, n_nodes=12)
print("cs build %.1fs, clusters %d" % (time.time()-t0, len(cs._tensors)), flush=True)
gc_vals = cs.g(xy)

env = geometry.wave_envelope(blk, R)
gxq, gwq = np.polynomial.legendre.leggauss(40)
half = 4.0 * env.half_widths
n1 = [h * gxq for h in half]
w1 = [h * gwq for h in half]
U = np.stack(np.meshgrid(*n1, indexing="ij"), axis=-1).reshape(-1, 3) @ env.axes
WU = np.einsum("a,b,c->abc", *w1).reshape(-1) * abs(np.linalg.det(env.axes))
om = spec.eval(U)
live = om != 0.0
U, WU, om = U[live], WU[live], om[live]
print("quad nodes live:", len(U), flush=True)
t0 = time.time()
gq_vals = []
for x in xy:
    fa = gi.eval(x[None, :] - U)
    gq_vals.append(np.sum(WU * np.abs(fa)**2 * om))
    print(".", end="", flush=True)
gq_vals = np.array(gq_vals)
print("\nquad time %.1fs" % (time.time() - t0), flush=True)
print("dense     :", np.array2string(gd_vals, precision=4))
print("gridfree  :", np.array2string(gc_vals, precision=4))
print("directquad:", np.array2string(gq_vals, precision=4))
print("gc vs gd rel: %.3e" % (np.abs(gc_vals - gd_vals)/np.abs(gd_vals)).max())
print("gq vs gd rel: %.3e" % (np.abs(gq_vals - gd_vals)/np.abs(gd_vals)).max())
