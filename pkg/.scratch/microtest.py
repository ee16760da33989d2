import numpy as np
from msl import geometry, fields

R = 64.0
box_half, n_grid = 64.0, 256
rng = np.random.default_rng(42)
leaf = geometry.MomentBlock(4, 2)
x0 = rng.uniform(-0.7*box_half, 0.7*box_half, size=(4, 3))
amp = rng.standard_normal(4) + 1j*rng.standard_normal(4)
gB = fields.PacketGroup(leaf, x0, amp)
fB = fields.PacketField([gB])

df = fB.to_dense(box_half, n_grid)
ax = df.x1d()
pts_idx = np.array([[128, 128, 128], [40, 200, 100], [5, 60, 250], [180, 20, 66]])
pts = np.stack([ax[pts_idx[:,0]], ax[pts_idx[:,1]], ax[pts_idx[:,2]]], axis=-1)
dense_vals = df.values[pts_idx[:,0], pts_idx[:,1], pts_idx[:,2]]
# df.values are demodulated: f(x) e^{-2 pi i offset.x}
demod = np.exp(-2j*np.pi * (pts @ df.freq_offset))

shifts = gB.periodic_shifts(box_half, tol=1e-13)
ci = (x0[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
ai = np.repeat(amp, len(shifts))
gi = fields.PacketGroup(leaf, ci, ai)
aug_vals = gi.eval(pts) * demod

print("test 1: f_aug vs dense field (demodulated)")
for k in range(len(pts)):
    print("  |dense| %.6e  |aug| %.6e   rel %.2e"
          % (abs(dense_vals[k]), abs(aug_vals[k]),
             abs(dense_vals[k]-aug_vals[k])/max(abs(dense_vals[k]), 1e-300)))

# test 2: kept-pair sum vs |f_aug|^2 at the same points
Pg = gi.Minv @ gi.Minv.T
Ps = 2 * Pg
Psinv = np.linalg.inv(Ps)
xp = gi.x0[:, None, :]; xq = gi.x0[None, :, :]
xs = (xp @ Pg + xq @ Pg) @ Psinv
tp = np.einsum("pi,ij,pj->p", gi.x0, Pg, gi.x0)
kap = tp[:, None] + tp[None, :] - np.einsum("pqi,ij,pqj->pq", xs, Ps, xs)
keep = 2.0*np.pi**2*kap <= 34.0
pi_, qi_ = np.nonzero(keep)
xstar = xs[pi_, qi_]
camp = (gi.amp[pi_]*np.conj(gi.amp[qi_])*np.exp(-2*np.pi**2*kap[pi_, qi_])
        * np.exp(-2j*np.pi*((gi.x0[pi_]-gi.x0[qi_]) @ gi.xi_c)))
print("test 2: pair sum vs |f_aug|^2   (%d pairs)" % len(pi_))
for k in range(len(pts)):
    dvec = pts[k][None, :] - xstar
    env = np.exp(-2*np.pi**2*np.einsum("ni,ij,nj->n", dvec, Ps, dvec))
    ps_val = float(np.real(np.sum(camp * env)))
    fa2 = abs(aug_vals[k])**2
    print("  pairsum %.6e  |f_aug|^2 %.6e  rel %.2e"
          % (ps_val, fa2, abs(ps_val-fa2)/max(fa2, 1e-300)))
