import numpy as np, resource, time
from msl import geometry, fields, packets

def rss(tag, t0):
    print("  %-14s rss %.2fGB  %.1fs" % (tag,
        resource.getrusage(resource.RUSAGE_SELF).ru_maxrss/1e6, time.time()-t0), flush=True)

R = 64.0
box_half, n_grid = 64.0, 256

# ---- A: single packet, no periodization, direct spatial quadrature
blk4 = geometry.MomentBlock(4, 2)
g1 = fields.PacketGroup(blk4, np.zeros((1, 3)), np.array([1.0+0j]))
M = g1.M
spec4 = fields.WeightSpec.for_block(blk4, R)
gx, gw = np.polynomial.legendre.leggauss(40)
h = 0.7
V = np.stack(np.meshgrid(h*gx, h*gx, h*gx, indexing="ij"), axis=-1).reshape(-1, 3)
WV = np.einsum("a,b,c->abc", h*gw, h*gw, h*gw).reshape(-1)
dens1 = np.exp(-4*np.pi**2*np.einsum("ni,ni->n", V, V))
VY = V @ M
cs1 = packets.ConvolvedSquare([g1], blk4, R)
print("A: single packet, auto n=%d gauge=%.1f" % (cs1.n, cs1.gauge_cut), flush=True)
for x in [np.zeros(3), 0.3*M[0], 0.5*M[2], 0.8*M[1]]:
    gd = abs(np.linalg.det(M)) * np.sum(WV*dens1*spec4.eval(x[None, :]-VY))
    gc = cs1.g(x[None, :])[0]
    print("   direct %.6e  gridfree %.6e  rel %.2e" % (gd, gc, abs(gc-gd)/gd), flush=True)

# ---- B: production shape: leaf S=4 packets, parent tau S=2, vs dense
rng = np.random.default_rng(42)
leaf = geometry.MomentBlock(4, 2)          # child of S=2, l=1
tau = geometry.MomentBlock(2, 1)
x0 = rng.uniform(-0.7*box_half, 0.7*box_half, size=(4, 3))
amp = rng.standard_normal(4) + 1j*rng.standard_normal(4)
gB = fields.PacketGroup(leaf, x0, amp)
fB = fields.PacketField([gB])
t0 = time.time()
df = fB.to_dense(box_half, n_grid)
dens = np.abs(df.values)**2
ax = df.x1d()
del df
specT = fields.WeightSpec.for_block(tau, R)
gd = fields.convolve_weight(dens, box_half, specT)
del dens
rss("dense", t0)
idxs = []
for c in x0:
    i0 = np.round((c + box_half) / (2*box_half/n_grid)).astype(int)
    for d in ([0,0,0],[5,0,0],[0,5,0],[0,0,6],[-7,4,3],[12,-9,5]):
        idxs.append((i0 + d) % n_grid)
idxs = np.array(idxs)
gd_vals = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
xy = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)
gmin = gd.min()
del gd
shifts = gB.periodic_shifts(box_half, tol=1e-13)
ci = (x0[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
ai = np.repeat(amp, len(shifts))
giB = fields.PacketGroup(leaf, ci, ai)
t0 = time.time()
csB = packets.ConvolvedSquare([giB], tau, R, eval_box_half=box_half)
rss("build", t0)
print("B: leaf-in-parent, %d images, auto n=%d gauge=%.1f, %d clusters"
      % (len(shifts), csB.n, csB.gauge_cut, len(csB._tensors)), flush=True)
t0 = time.time()
gc_vals = csB.g(xy)
rss("eval", t0)
rel = np.abs(gc_vals - gd_vals)/gd_vals.max()
print("   dense range [%.4e, %.4e] min %.3e" % (gd_vals.min(), gd_vals.max(), gmin))
print("   rel max %.3e  mean %.3e  positivity min %.4e"
      % (rel.max(), rel.mean(), gc_vals.min()), flush=True)

# ---- C: same-block (pathological fat) with 2 packets
x0c = np.array([[3.7, -11.2, 8.9], [-17.0, 6.0, -20.0]])
ampc = np.array([1.3-0.4j, -0.7+1.1j])
gC = fields.PacketGroup(blk4, x0c, ampc)
fC = fields.PacketField([gC])
t0 = time.time()
df = fC.to_dense(box_half, n_grid)
dens = np.abs(df.values)**2
gd = fields.convolve_weight(dens, box_half, spec4)
del dens, df
idxs = []
for c in x0c:
    i0 = np.round((c + box_half) / (2*box_half/n_grid)).astype(int)
    for d in ([0,0,0],[4,0,0],[0,0,5]):
        idxs.append((i0 + d) % n_grid)
idxs = np.array(idxs)
gd_vals = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
xy = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)
del gd
shifts = gC.periodic_shifts(box_half, tol=1e-13)
ci = (x0c[:, None, :] + shifts[None, :, :]).reshape(-1, 3)
ai = np.repeat(ampc, len(shifts))
giC = fields.PacketGroup(blk4, ci, ai)
csC = packets.ConvolvedSquare([giC], blk4, R, eval_box_half=box_half)
rss("C build", t0)
print("C: same-block fat, auto n=%d gauge=%.1f, %d clusters"
      % (csC.n, csC.gauge_cut, len(csC._tensors)), flush=True)
gc_vals = csC.g(xy)
rel = np.abs(gc_vals - gd_vals)/gd_vals.max()
print("   rel max %.3e  mean %.3e" % (rel.max(), rel.mean()))
