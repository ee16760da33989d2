import numpy as np, math
from msl import geometry, fields, packets

R = 64.0
leaf = geometry.MomentBlock(4, 2)
tau = geometry.MomentBlock(2, 1)

spec = fields.WeightSpec.for_block(tau, R)
B = spec.support_box().axes           # rows span symbol support
print("support box rows (xi-space):")
print(np.array2string(B, precision=5))
print("row norms:", np.linalg.norm(B, axis=1))

g = fields.PacketGroup(leaf, np.zeros((1, 3)), np.ones(1))
M = g.M
Pg = g.Minv @ g.Minv.T
Ps = 2 * Pg
evals, evecs = np.linalg.eigh(Ps)
stds = np.sqrt(evals)
print("\npair spectral Gaussian stds (principal):", stds)

# how wide is the Gaussian along each support-box axis?
# box axis i direction: B[i]/|B[i]|, box half-extent |B[i]|/2 (u in [-1/2,1/2])
for i in range(3):
    e = B[i] / np.linalg.norm(B[i])
    sig_dir = math.sqrt(e @ Ps @ e)   # std of Gaussian along this direction
    half = np.linalg.norm(B[i]) / 2
    n = 24
    # GL node spacing near center ~ box_width * pi/(2n) (Chebyshev-ish density)
    spacing = 2 * half * math.pi / (2 * n)
    print("axis %d: box half %.4e  gauss std %.4e  ratio half/std %.1f  "
          "nodes(24) per std ~ %.2f"
          % (i, half, sig_dir, half / sig_dir, sig_dir / spacing))

# in plank-cell units: M rows and weight reach
plank = geometry.wave_envelope(tau, R)
cl_mat = plank.axes * plank.half_widths[:, None]
cl_inv = np.linalg.inv(cl_mat)
print("\n|M rows| in cluster cells:", np.linalg.norm(M @ cl_inv, axis=1))
print("pair gauss spatial std in cells (0.1125*row):",
      0.1125 * np.linalg.norm(M @ cl_inv, axis=1))
