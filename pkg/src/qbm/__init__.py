"""Measurement statistics and decoherence in quantum Brownian motion."""
from .bath import (
    DomainError,
    NoDissipation,
    Ohmic,
    Tabulated,
    UnitSystem,
    UnsupportedVariantError,
    im_alpha,
    thermal_scales,
)
from .kernels import (
    Divergent,
    HighTemperatureWarning,
    KernelPair,
    commutator_amplitude,
    equilibrium_variance,
    kernel_pair,
    mean_square_displacement,
    ohmic_high_t_kernels,
)
from .measurement import (
    AliasingError,
    DoubleSlit,
    GaussianSlit,
    alpha_fourier,
    alpha_value,
    invert_characteristic,
    invert_characteristic_2d,
    joint_density_oracle,
    xi_joint,
    xi_single,
)
from .observables import (
    DecoherenceEstimate,
    InconsistentInputsError,
    InterferenceProfile,
    JointGaussian,
    SpreadResult,
    attenuation,
    attenuation_no_dissipation,
    conditional_spread,
    decoherence_time,
    interference_profile,
    joint_distribution,
    joint_gaussian_params,
    long_time_attenuation_rate,
    measured_decoherence_time,
    measured_fringe_ratio,
    packet_width,
    single_distribution,
)
from .quadrature import ConvergenceError, QuadratureConfig

__version__ = "0.1.0"
