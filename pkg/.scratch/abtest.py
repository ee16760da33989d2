import numpy as np
from msl import geometry, fields
from msl.fields import _real_spectral_apply

rng = np.random.default_rng(3)
R = 8.0
tau = geometry.MomentBlock(2, 1)
spec = fields.WeightSpec.for_block(tau, R)
arr = rng.standard_normal((64, 64, 64))
box_half = 8.0

box = spec.support_box()
radii = np.abs(box.axes).T @ box.half_widths
fast = _real_spectral_apply(arr, box_half, spec.hat, support_radii=radii)
slow = _real_spectral_apply(arr, box_half, spec.hat)
print("fast vs slow max abs diff: %.3e (scale %.3e)"
      % (np.abs(fast - slow).max(), np.abs(slow).max()))
