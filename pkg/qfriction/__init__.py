# project plugin
from qfriction.factory import ParameterFactory
from qfriction.friction import (
    AtomKinematics,
    AtomState,
    DecayRates,
    DegenerateRatesError,
    ForceValue,
    SubstrateModel,
    decay_rates_lossless,
    decay_rates_lossy,
    decay_rates_lossy_2d,
    excited_probability,
    force_trajectory,
    friction_force_lossless,
    friction_force_lossy,
    friction_force_lossy_2d,
    optimal_frequency,
    optimal_velocity,
    steady_state_force_lossless,
)
from qfriction.material import DrudeMetal, PoleError, im_reflection_real_axis, permittivity, reflection
from qfriction.polarization import TransitionDipole, greens_kx_qs, ky_reduced_kernel, pol_factor, spin_y
from qfriction.quadrature import QuadratureError, QuadratureSpec
from qfriction.specfun import bessel_k
from qfriction.units import UnitSystem

__all__ = [
    "AtomKinematics",
    "AtomState",
    "DecayRates",
    "ForceValue",
    "SubstrateModel",
    "DrudeMetal",
    "TransitionDipole",
    "QuadratureSpec",
    "UnitSystem",
    "ParameterFactory",
    "DegenerateRatesError",
    "PoleError",
    "QuadratureError",
    "bessel_k",
    "permittivity",
    "reflection",
    "im_reflection_real_axis",
    "spin_y",
    "pol_factor",
    "ky_reduced_kernel",
    "greens_kx_qs",
    "decay_rates_lossless",
    "friction_force_lossless",
    "steady_state_force_lossless",
    "decay_rates_lossy",
    "decay_rates_lossy_2d",
    "friction_force_lossy",
    "friction_force_lossy_2d",
    "excited_probability",
    "force_trajectory",
    "optimal_velocity",
    "optimal_frequency",
]
