import numpy as np, time
from msl import geometry, fields

R = 64.0
box_half, n_grid = 64.0, 256
L = 2 * box_half
rng = np.random.default_rng(42)
leaf = geometry.MomentBlock(4, 2)
tau = geometry.MomentBlock(2, 1)
x0 = rng.uniform(-0.7*box_half, 0.7*box_half, size=(4, 3))
amp = rng.standard_normal(4) + 1j*rng.standard_normal(4)
f = fields.PacketField([fields.PacketGroup(leaf, x0, amp)])

spec = fields.WeightSpec.for_block(tau, R)
plank = geometry.wave_envelope(tau, R)
cl = plank.axes * plank.half_widths[:, None]
print("cluster cell rows (units):")
print(np.array2string(cl, precision=3))
print("row norms:", np.linalg.norm(cl, axis=1), " det:", np.linalg.det(cl))
A = spec.linear
print("A rows:", np.array2string(A, precision=6))

df = f.to_dense(box_half, n_grid)
dens = np.abs(df.values) ** 2
print("mean dens", dens.mean())

ax = df.x1d()
h = ax[1] - ax[0]
i0 = np.round((x0[0] + box_half) / h).astype(int)
x_eval = np.array([ax[i0[0]], ax[i0[1]], ax[i0[2]]])
print("x_eval", x_eval)

gd = fields.convolve_weight(dens, box_half, spec)
print("dense conv at x_eval: %.6f" % gd[i0[0], i0[1], i0[2]])
print("flat limit w_mass*mean: %.6f" % (spec.mass() * dens.mean()))

# direct Riemann: q = sum_j dens[j] * sum_k omega(x - x_j - kL) * h^3
# k-range: need |y|<=YCUT where y = A(x - x_j - kL)
YCUT = 4.0
# corners of box {x - x_j} as x_j ranges over the box: x - x_j in [x-bh, x+bh]
corners = x_eval[None, :] + box_half * np.array(
    [[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], float)
# y(kL) = A(c - kL): need k st some point maps inside |y|<=YCUT
# bound: |A(c - kL)|_inf <= YCUT  -> solve per k by brute scan
Ainv = np.linalg.inv(A)
# y-cube corners -> x-extent: x = c_corner - kL must lie in x_eval - Ainv*[-4,4]^3 - box
ycor = YCUT * np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], float)
xsup = ycor @ Ainv.T   # points x - u with y on cube corners: u = x - Ainv y
lo = (x_eval[None] - xsup).min(axis=0) - box_half
hi = (x_eval[None] - xsup).max(axis=0) + box_half
klo = np.floor(lo / L).astype(int)
khi = np.ceil(hi / L).astype(int)
print("k range:", klo, khi, " -> shifts:",
      np.prod(khi - klo + 1))

t0 = time.time()
total = 0.0
live_total = 0
X1 = ax[:, None, None] + 0*ax[None, :, None] + 0*ax[None, None, :]
# iterate shifts; per shift evaluate omega on (x_eval - lattice - kL) in slabs
ks = [(k1, k2, k3)
      for k1 in range(klo[0], khi[0]+1)
      for k2 in range(klo[1], khi[1]+1)
      for k3 in range(klo[2], khi[2]+1)]
for (k1, k2, k3) in ks:
    sh = np.array([k1*L, k2*L, k3*L])
    # rel = x_eval - x_j - sh ; per-axis 1d arrays
    r1 = x_eval[0] - ax - sh[0]
    r2 = x_eval[1] - ax - sh[1]
    r3 = x_eval[2] - ax - sh[2]
    # quick reject via y-extent per axis using interval arithmetic
    # y_i = A[i,0] r1 + A[i,1] r2 + A[i,2] r3
    ymin = np.zeros(3); ymax = np.zeros(3)
    for i in range(3):
        t = A[i,0]*np.array([r1.min(), r1.max()])
        u = A[i,1]*np.array([r2.min(), r2.max()])
        v = A[i,2]*np.array([r3.min(), r3.max()])
        ymin[i] = t.min()+u.min()+v.min(); ymax[i] = t.max()+u.max()+v.max()
    if np.any(ymin > YCUT) or np.any(ymax < -YCUT):
        continue
    for s in range(0, n_grid, 32):
        e = min(s+32, n_grid)
        rel = np.empty((e-s, n_grid, n_grid, 3))
        rel[..., 0] = r1[s:e, None, None]
        rel[..., 1] = r2[None, :, None]
        rel[..., 2] = r3[None, None, :]
        y = rel @ A.T
        m = np.all(np.abs(y) <= YCUT, axis=-1)
        if not m.any():
            continue
        om = spec.eval(rel[m])
        total += float(np.sum(om * dens[s:e][m]))
        live_total += int(m.sum())
print("live evals: %d   time %.0fs" % (live_total, time.time()-t0))
q_direct = total * h**3
print("q_direct(x_eval) = %.6f" % q_direct)
print("dense lattice    = %.6f" % gd[i0[0], i0[1], i0[2]])
print("tensor (prev)    = 431.448 ; arbiter (prev) = 396.537")
