"""Numerical laboratory for moment-curve square function geometry.

Blocks, frames and planks of the moment curve and the sheared cone;
compactly supported window/weight kernels; band-limited field synthesis
(dense grids and explicit wave packets); square-function and envelope
functionals; scaling experiments with CSV/JSON reporting.
"""

from .geometry import (
    AffineMap,
    ConePlank,
    CurveSpec,
    DerivOracle,
    FrameTriple,
    MomentBlock,
    Parallelepiped,
    SampledSet,
    comparability_constant,
    cone_frame,
    cone_planks,
    cone_shear,
    cone_wave_envelope,
    curve_class_check,
    fibonacci_sphere,
    frenet_frame,
    general_rescaling,
    locate_block,
    model_curve,
    moment_blocks,
    moment_curve,
    moment_point,
    moment_rescaling,
    wave_envelope,
)
from .fields import (
    DenseField,
    PacketField,
    PacketGroup,
    WeightSpec,
    bush_field,
    convolve_weight,
    high_low_split,
    stratified_mc,
    torus_stratified_mc,
)
from .windows import (
    Psi,
    ball_ft,
    cumulative_phi1_hat_sq,
    phi1,
    phi1_hat,
    phi1_hat_sq,
    plateau,
    psi_sqrt_sum_1d,
    radial_lowpass,
    rho1,
    shell_conv_eval,
    shell_hat,
    smoothstep_c2,
    w_eval,
    w_hat,
    w_mass,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap", "ConePlank", "CurveSpec", "DerivOracle", "FrameTriple",
    "MomentBlock", "Parallelepiped", "SampledSet", "comparability_constant",
    "cone_frame", "cone_planks", "cone_shear", "cone_wave_envelope",
    "curve_class_check", "fibonacci_sphere", "frenet_frame",
    "general_rescaling", "locate_block", "model_curve", "moment_blocks",
    "moment_curve", "moment_point", "moment_rescaling", "wave_envelope",
    "DenseField", "PacketField", "PacketGroup", "WeightSpec", "bush_field",
    "convolve_weight", "high_low_split", "stratified_mc",
    "torus_stratified_mc",
    "Psi", "ball_ft", "cumulative_phi1_hat_sq", "phi1", "phi1_hat",
    "phi1_hat_sq", "plateau", "psi_sqrt_sum_1d", "radial_lowpass", "rho1",
    "shell_conv_eval", "shell_hat", "smoothstep_c2", "w_eval", "w_hat",
    "w_mass", "__version__",
]
