"""Validate the remaining test_packets configurations before freezing."""
import time
import numpy as np
from msl import packets, windows, geometry, fields

rng = np.random.default_rng(20260816)

# ---- B. cascade invariants at R=64, bush amplitude 100
t0 = time.time()
f = fields.bush_field(64.0, amplitude=100.0)
casc = packets.prune_cascade(f, 64.0, alpha=1.0, beta=1.0, K=2.0, A=4.0,
                             rng=np.random.default_rng(3), n_audit=256)
print("cascade levels:", [st.k for st in casc.states], "%.1fs" % (time.time() - t0))
print("schedule:", casc.schedule)
print("monotone margin %.3e" % casc.monotone_margin())
print("linf margin %.6f" % casc.linf_margin())
npruned = sum(1 for st in casc.states[1:] for s in st.good_sets.values()
              if s.nontrivial)
print("nontrivial selections:", npruned)
for st in casc.states[1:]:
    for l, node in st.fields_by_block.items():
        gval = packets.spectral_support_gauge(node, n_samples=64)
        print("  k=%d block %d gauge %.4f" % (st.k, l, gval))

# ---- C. pigeonhole variants
leaf = geometry.MomentBlock(4, 2)
c0 = leaf.center_point() * 0  # origin centers fine
U = np.zeros((1, 3))
# small-class discard at R=2
g = fields.PacketGroup(leaf, np.zeros((2, 3)), np.array([1.0, 1e-305]))
kept, A_amp, rep = packets.amplitude_pigeonhole(
    fields.PacketField([g]), alpha=0.1, R=2.0, eps=0.25, u_alpha_points=U)
print("small: kept %d  A_amp %.3f  n_small %d" % (
    sum(gr.n_packets for gr in kept.groups), A_amp, rep.n_small))
# far discard at R=64
off = np.array([50.0, 0, 0]) @ g.M
g2 = fields.PacketGroup(leaf, np.stack([np.zeros(3), off]),
                        np.array([1.0, 1.0]))
kept2, A2, rep2 = packets.amplitude_pigeonhole(
    fields.PacketField([g2]), alpha=0.1, R=64.0, eps=0.25, u_alpha_points=U)
print("far: kept %d  n_far %d" % (sum(gr.n_packets for gr in kept2.groups),
                                  rep2.n_far))
# tie break
g3 = fields.PacketGroup(leaf, rng.standard_normal((5, 3)) * 0.3,
                        np.array([1.0, 0.4, 0.4, 0.4, 0.4]))
kept3, A3, rep3 = packets.amplitude_pigeonhole(
    fields.PacketField([g3]), alpha=0.1, R=64.0, eps=0.25, u_alpha_points=U)
print("tie: lam %.2f tie_broken %s kept %d A_amp %.3f" % (
    rep3.lambda_M, rep3.tie_broken, sum(gr.n_packets for gr in kept3.groups),
    A3))
# trivial path flag
_, _, rep4 = packets.amplitude_pigeonhole(
    fields.PacketField([g3]), alpha=1e-200, R=2.0, eps=0.25,
    u_alpha_points=U)
print("trivial flag:", rep4.trivial_path)

# ---- D. high_low_split wrapper waves
n, H = 64, 4.0
ax = (np.arange(n) - n // 2) * (2 * H / n)
X = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)
cut = 0.5
const = np.ones((n, n, n))
st = packets.high_low_split(const, cut, box_half=H)
print("const: |g_high| %.3e  residual %.3e" % (np.abs(st.g_high).max(),
                                               st.residual()))
low_wave = np.cos(2 * np.pi * (cut / 4) * X[..., 0])
st = packets.high_low_split(low_wave, cut, box_half=H)
print("inner wave: |g_high| %.3e" % np.abs(st.g_high).max())
hi_wave = np.cos(2 * np.pi * (4 * cut) * X[..., 0])
st = packets.high_low_split(hi_wave, cut, box_half=H)
print("outer wave: |g_low| %.3e" % np.abs(st.g_low).max())

# ---- E. ConvolvedSquare vs direct spatial quadrature, exact test form
t0 = time.time()
tau = geometry.MomentBlock(2, 1)
R = 64.0
plank = geometry.wave_envelope(tau, R)
cl = plank.axes * plank.half_widths[:, None]
ctr = rng.standard_normal((4, 3)) * 1.2 @ cl * 0.25
amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
G = fields.PacketGroup(leaf, ctr, amps)
cs = packets.ConvolvedSquare([G], tau, R)
print("auto n=%d gauge=%.1f  build %.1fs" % (cs.n, cs.gauge_cut,
                                             time.time() - t0))

pts = np.concatenate([ctr, ctr.mean(0)[None],
                      ctr.mean(0) + rng.standard_normal((19, 3)) @ cl * 0.3],
                     axis=0)
got = cs.g(pts)

# reference: per-pair spatial kernel, GL-16 in envelope coordinates
spec = cs.weight
M, Minv, detM = G.M, G.Minv, G.detM
gx, gw = np.polynomial.legendre.leggauss(16)
vcut = 0.55
v1 = vcut * gx
w1 = vcut * gw
V = np.stack(np.meshgrid(v1, v1, v1, indexing="ij"), axis=-1).reshape(-1, 3)
WV = np.einsum("a,b,c->abc", w1, w1, w1).reshape(-1) \
    * np.exp(-4 * np.pi ** 2 * (V ** 2).sum(1)) * detM
VM = V @ M
ref = np.zeros(pts.shape[0])
for p in range(4):
    for q in range(4):
        dx = ctr[p] - ctr[q]
        xstar = 0.5 * (ctr[p] + ctr[q])
        kap = 0.5 * ((dx @ Minv.T if False else Minv.T @ dx) ** 2).sum()
        # careful: u = M^{-T} dx; Minv.T @ dx
        u = Minv.T @ dx
        camp = amps[p] * np.conj(amps[q]) * np.exp(
            -np.pi ** 2 * (u ** 2).sum()) * np.exp(
            2j * np.pi * (G.xi_c @ (ctr[q] - ctr[p])))
        d = pts - xstar
        K = spec.eval((d[:, None, :] - VM[None, :, :]).reshape(-1, 3))
        K = K.reshape(pts.shape[0], -1) @ WV
        ref += np.real(camp * K)
print("direct quad %.1fs" % (time.time() - t0))
scale = np.abs(ref).max()
rel = np.abs(got - ref) / scale
print("max rel %.4f  at scale %.4f" % (rel.max(), scale))
for a, b in list(zip(got, ref))[:6]:
    print("  %12.6f %12.6f" % (a, b))

# node doubling
cs2 = packets.ConvolvedSquare([G], tau, R, n_nodes=cs.n + 8)
got2 = cs2.g(pts)
print("node doubling max rel %.2e" % (np.abs(got2 - got).max() / scale))

# large-cutoff identity
bigcut = 4.0 * np.linalg.norm(cs.XI, axis=1).max()
cs3 = packets.ConvolvedSquare([G], tau, R, cutoff=bigcut)
gl = cs3.g_low(pts)
print("large-cutoff g_low == g: %.2e" % (np.abs(gl - cs3.g(pts)).max() / scale))
print("total %.1fs" % (time.time() - t0))
