import numpy as np, math
from msl import geometry, fields, packets

R, S = 64.0, 4
blk = geometry.MomentBlock(S, 1)
box_half = 64.0
x0 = np.array([[3.7, -11.2, 8.9]])
amp = np.array([1.3 - 0.4j])
g1 = fields.PacketGroup(blk, x0, amp)
shifts = g1.periodic_shifts(box_half, tol=1e-13)
ci = x0[0][None, :] + shifts
ai = np.repeat(amp, len(shifts))
gi = fields.PacketGroup(blk, ci, ai)
W = fields.WeightSpec.for_block(blk, R)
box = W.support_box()
B = box.axes

# packet sigma in cluster cells
env = geometry.wave_envelope(blk, R)
cl_mat = env.axes * env.half_widths[:, None]
cl_inv = np.linalg.inv(cl_mat)
sig_cells = 0.1125 * np.linalg.norm(gi.M @ cl_inv, axis=1)
print("pair Gaussian std in cells:", np.round(sig_cells, 3))

def pair_lists():
    Pg = gi.Minv @ gi.Minv.T
    Ps = 2 * Pg
    Psinv = np.linalg.inv(Ps)
    dfac = (2*np.pi) ** -1.5 / math.sqrt(np.linalg.det(Ps))
    xp = gi.x0[:, None, :]; xq = gi.x0[None, :, :]
    xs = (xp @ Pg + xq @ Pg) @ Psinv
    tp = np.einsum("pi,ij,pj->p", gi.x0, Pg, gi.x0)
    kap = tp[:, None] + tp[None, :] - np.einsum("pqi,ij,pqj->pq", xs, Ps, xs)
    keep = 2.0*np.pi**2*kap <= 34.0
    pi_, qi_ = np.nonzero(keep)
    xstar = xs[pi_, qi_]
    camp = (gi.amp[pi_]*np.conj(gi.amp[qi_])*np.exp(-2*np.pi**2*kap[pi_, qi_])
            * np.exp(-2j*np.pi*((gi.x0[pi_]-gi.x0[qi_]) @ gi.xi_c)))
    return xstar, camp, Psinv, dfac

xstar, camp, Psinv, dfac = pair_lists()
x = x0[0] + np.array([1.0, 2.0, -1.5])
d_cell = np.abs((x[None, :] - xstar) @ cl_inv).max(axis=1)

def g_sum(nb, dmax):
    gx, gw = np.polynomial.legendre.leggauss(nb)
    u = 0.5*gx; w1 = 0.5*gw
    U3 = np.stack(np.meshgrid(u, u, u, indexing="ij"), axis=-1).reshape(-1, 3)
    XI = U3 @ B
    WQ = np.einsum("a,b,c->abc", w1, w1, w1).reshape(-1)*abs(np.linalg.det(B))
    F = WQ*np.real(W.hat(XI))*dfac*np.exp(
        -0.5*np.einsum("nj,jk,nk->n", XI, Psinv, XI))
    sel = d_cell <= dmax
    xs, ca = xstar[sel], camp[sel]
    tot = 0.0
    for s in range(0, len(xs), 2000):
        ph = np.exp(2j*np.pi*(x[None, :]-xs[s:s+2000]) @ XI.T)
        tot += float(np.real(np.sum(ca[s:s+2000, None]*ph*F[None, :])))
    return tot

print("dense reference: 210.07796")
print("%6s" % "dmax", "".join("%12s" % ("GL%d" % nb) for nb in (12, 16, 20, 28, 40)))
for dmax in (4, 6, 8, 10, 12, 14, 18):
    row = [g_sum(nb, dmax) for nb in (12, 16, 20, 28, 40)]
    print("%6d" % dmax, "".join("%12.3f" % v for v in row), flush=True)
