import numpy as np, time
from msl import geometry, fields, packets

# end-to-end: dense torus convolution vs grid-free tensor evaluator,
# periodized with the weight's spatial reach
for (R, Sleaf, lleaf, ltau, box_half, n_grid, seed) in [
        (8.0, 4, 2, 1, 8.0, 64, 7),
        (27.0, 9, 4, 1, 27.0, 128, 11)]:
    rng = np.random.default_rng(seed)
    leaf = geometry.MomentBlock(Sleaf, lleaf)
    x0 = rng.uniform(-0.7*box_half, 0.7*box_half, size=(4, 3))
    amp = rng.standard_normal(4) + 1j*rng.standard_normal(4)
    f = fields.PacketField([fields.PacketGroup(leaf, x0, amp)])

    S_k = int(round(R ** (1.0/3.0)))
    tau = geometry.MomentBlock(S_k, ltau)
    spec = fields.WeightSpec.for_block(tau, R)
    reach = spec.spatial_reach()

    df = f.to_dense(box_half, n_grid)
    dens = np.abs(df.values)**2
    gd = fields.convolve_weight(dens, box_half, spec)
    ax = df.x1d()

    t0 = time.time()
    fp = f.periodize(box_half, tol=1e-13, margin=reach)
    n_img = fp.groups[0].x0.shape[0]
    t1 = time.time()
    cs = packets.ConvolvedSquare(fp.groups, tau, R,
                                 eval_box_half=box_half)
    t2 = time.time()

    idxs = []
    for c in x0[:3]:
        i0 = np.round((c + box_half) / (2*box_half/n_grid)).astype(int) % n_grid
        idxs.append(i0)
        idxs.append((i0 + np.array([5, 0, 3])) % n_grid)
    idxs = np.array(idxs)
    pts = np.stack([ax[idxs[:,0]], ax[idxs[:,1]], ax[idxs[:,2]]], axis=-1)
    gv = cs.g(pts)
    dv = gd[idxs[:,0], idxs[:,1], idxs[:,2]]
    rel = np.abs(gv - dv) / np.abs(dv)
    print("R=%g: reach %s images %d  periodize %.1fs build %.1fs "
          "(n=%d gauge=%.1f clusters=%d)"
          % (R, np.array2string(reach, precision=0), n_img,
             t1-t0, t2-t1, cs.n, cs.gauge_cut, len(cs._tensors)))
    print("  dense   :", np.array2string(dv, precision=4))
    print("  gridfree:", np.array2string(gv, precision=4))
    print("  max rel err: %.3e" % rel.max(), flush=True)
