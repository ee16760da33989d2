import numpy as np, time, math
from msl import geometry, fields, packets

rng = np.random.default_rng(42)
R, S = 64.0, 4
blk = geometry.MomentBlock(S, 1)
box_half, n_grid = 64.0, 256
x0 = np.array([[3.7, -11.2, 8.9]])
amp = np.array([1.3 - 0.4j])
g1 = fields.PacketGroup(blk, x0, amp)
f = fields.PacketField([g1])

df = f.to_dense(box_half, n_grid)
dens = np.abs(df.values)**2
spec = fields.WeightSpec.for_block(blk, R)
gd = fields.convolve_weight(dens, box_half, spec)
ax = df.x1d()
i0 = np.round((x0[0] + box_half) / (2*box_half/n_grid)).astype(int)
idxs = np.array([i0, (i0+[5,0,0])%n_grid, (i0+[0,6,0])%n_grid, (i0+[0,0,7])%n_grid])
gd_vals = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
xy = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)
del gd, dens, df
print("dense:", np.array2string(gd_vals, precision=5), flush=True)

shifts = g1.periodic_shifts(box_half, tol=1e-13)
print("images:", len(shifts), flush=True)
ci = x0[0][None, :] + shifts
ai = np.repeat(amp, len(shifts))
gi = fields.PacketGroup(blk, ci, ai)
cs = packets.ConvolvedSquare([gi], blk, R, n_nodes=12)
gc_vals = cs.g(xy)
print("tensor:", np.array2string(gc_vals, precision=5),
      " rel %.3e" % (np.abs(gc_vals-gd_vals)/gd_vals).max(), flush=True)

# brute-force: same pair construction, per-pair dense GL over the box
W = spec
box = W.support_box()
B = box.axes
nb = 24
gx, gw = np.polynomial.legendre.leggauss(nb)
u = 0.5 * gx
w1 = 0.5 * gw
U = np.stack(np.meshgrid(u, u, u, indexing="ij"), axis=-1).reshape(-1, 3)
XI = U @ B
WQ = np.einsum("a,b,c->abc", w1, w1, w1).reshape(-1) * abs(np.linalg.det(B))
what = np.real(W.hat(XI))

Pg = gi.Minv @ gi.Minv.T
Ps = 2 * Pg
Psinv = np.linalg.inv(Ps)
dfac = (2*np.pi) ** -1.5 / math.sqrt(np.linalg.det(Ps))
gvec = dfac * np.exp(-0.5 * np.einsum("nj,jk,nk->n", XI, Psinv, XI))
F = WQ * what * gvec

xp = gi.x0[:, None, :]
xq = gi.x0[None, :, :]
xs = (xp @ Pg + xq @ Pg) @ Psinv
tp = np.einsum("pi,ij,pj->p", gi.x0, Pg, gi.x0)
kap = tp[:, None] + tp[None, :] - np.einsum("pqi,ij,pqj->pq", xs, Ps, xs)
keep = 2.0 * np.pi**2 * kap <= 34.0
pi_, qi_ = np.nonzero(keep)
print("kept pairs:", len(pi_), flush=True)
xstar = xs[pi_, qi_]
camp = (gi.amp[pi_] * np.conj(gi.amp[qi_])
        * np.exp(-2*np.pi**2 * kap[pi_, qi_])
        * np.exp(-1j*2*np.pi*((gi.x0[pi_] - gi.x0[qi_]) @ gi.xi_c)))
t0 = time.time()
gb_vals = []
for x in xy:
    tot = 0.0
    for s in range(0, len(pi_), 4000):
        ph = np.exp(2j*np.pi * (x[None, :] - xstar[s:s+4000]) @ XI.T)
        tot += np.real(np.sum(camp[s:s+4000, None] * ph * F[None, :]))
    gb_vals.append(tot)
gb_vals = np.array(gb_vals)
print("brute : %s  (%.1fs)" % (np.array2string(gb_vals, precision=5), time.time()-t0))
print("brute vs dense rel : %.3e" % (np.abs(gb_vals-gd_vals)/gd_vals).max())
print("tensor vs brute rel: %.3e" % (np.abs(gc_vals-gb_vals)/gd_vals).max())
