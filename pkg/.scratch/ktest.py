import numpy as np, math
from msl import geometry, fields
from msl.fields import TWO_PI

gx, gw = np.polynomial.legendre.leggauss(24)
u = 0.5*gx; w1 = 0.5*gw
print("1D GL-24 plane-wave: y, approx, true, err")
for y in (4, 6, 8, 10, 12, 15, 18):
    val = np.sum(w1*np.exp(2j*np.pi*y*u))
    true = np.sinc(y)
    print("  y=%5.1f  approx % .3e  true % .3e  err %.3e"
          % (y, val.real, true, abs(val-true)))

R = 64.0
leaf = geometry.MomentBlock(4, 2)
tau = geometry.MomentBlock(2, 1)
spec = fields.WeightSpec.for_block(tau, R)
B = spec.support_box().axes
plank = geometry.wave_envelope(tau, R)
cl_mat = plank.axes * plank.half_widths[:, None]
print("\ncl rows (units):", np.linalg.norm(cl_mat, axis=1))

g = fields.PacketGroup(leaf, np.zeros((1,3)), np.ones(1))
Ps = 2*(g.Minv @ g.Minv.T)
Psinv = np.linalg.inv(Ps)
dfac = TWO_PI**-1.5 / math.sqrt(np.linalg.det(Ps))

def K_gl(n, d):
    gx, gw = np.polynomial.legendre.leggauss(n)
    uu = 0.5*gx; ww = 0.5*gw
    U = np.stack(np.meshgrid(uu,uu,uu,indexing="ij"),axis=-1).reshape(-1,3)
    XI = U @ B
    WQ = np.einsum("a,b,c->abc",ww,ww,ww).reshape(-1)*abs(np.linalg.det(B))
    what = np.real(spec.hat(XI))
    gvec = dfac*np.exp(-0.5*np.einsum("nj,jk,nk->n",XI,Psinv,XI))
    ph = np.exp(2j*np.pi*(XI @ d))
    return float(np.real(np.sum(WQ*what*gvec*ph)))

def K_spatial(n, d, vcut=0.55):
    gx, gw = np.polynomial.legendre.leggauss(n)
    uu = vcut*gx; ww = vcut*gw
    V = np.stack(np.meshgrid(uu,uu,uu,indexing="ij"),axis=-1).reshape(-1,3)
    W = np.einsum("a,b,c->abc",ww,ww,ww).reshape(-1)
    pts = d[None,:] - V @ g.M
    om = spec.eval(pts)
    return float(np.sum(W*np.exp(-4*np.pi**2*np.sum(V*V,axis=1))*om)
                 * abs(np.linalg.det(g.M)))

print("\nK(d) along cell axis 3: cells, K_gl24, K_gl32, K_sp16, K_sp24")
for dc in (0., 2., 4., 6., 8., 10., 12., 16.):
    d = dc * cl_mat[2]
    print("  d3=%5.1f  % .5e  % .5e  % .5e  % .5e"
          % (dc, K_gl(24,d), K_gl(32,d), K_spatial(16,d), K_spatial(24,d)))
print("\nK(d) along cell axis 1: same columns")
for dc in (0., 1., 2., 3., 4., 6., 8.):
    d = dc * cl_mat[0]
    print("  d1=%5.1f  % .5e  % .5e  % .5e  % .5e"
          % (dc, K_gl(24,d), K_gl(32,d), K_spatial(16,d), K_spatial(24,d)))
