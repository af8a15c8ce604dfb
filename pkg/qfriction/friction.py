import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from loguru import logger

from qfriction.material import DrudeMetal, im_reflection_real_axis
from qfriction.polarization import (
    SpectralPoint,
    TransitionDipole,
    ky_reduced_kernel,
    ky_reduced_kernel_array,
    pol_factor,
)
from qfriction.quadrature import (
    QuadratureResult,
    QuadratureSpec,
    integrate_both_sides,
    integrate_iterated,
    integrate_semi_infinite,
    locate_peaks,
)

# rates below this are reported as negligible (a few hundred e-foldings of K_n)
NEGLIGIBLE_RATE = 1e-280
# past this velocity the Galilean treatment of the atom is no longer trusted
GALILEAN_VELOCITY_LIMIT = 0.3
# the optimal-velocity scaling law assumes omega_sp d << 1
SCALING_LAW_MAX_HEIGHT = 0.2


class DegenerateRatesError(ValueError):
    """Raised when both decay rates vanish and the steady state is undefined."""


@dataclass(frozen=True)
class AtomKinematics:
    """Transition frequency omega0, height d and velocity v of the moving atom."""

    omega0: float
    d: float
    v: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.omega0) and self.omega0 >= 0):
            raise ValueError(f"omega0 must be a finite non-negative frequency, got {self.omega0}")
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"The height d must be positive, got {self.d}")
        if not 0 < self.v < 1:
            raise ValueError(f"The velocity must satisfy 0 < v < 1 (units of c), got {self.v}")
        if self.v > GALILEAN_VELOCITY_LIMIT:
            logger.warning(f"v = {self.v} is beyond the Galilean regime (v > {GALILEAN_VELOCITY_LIMIT}) ⚠️")

    @property
    def threshold(self) -> float:
        """kx = -omega0 / v, where the Doppler-shifted frequency changes sign."""
        return -self.omega0 / self.v

    def with_values(self, **changes: float) -> "AtomKinematics":
        params = {"omega0": self.omega0, "d": self.d, "v": self.v}
        params.update(changes)
        return AtomKinematics(**params)


@dataclass(frozen=True)
class AtomState:
    pe: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.pe <= 1.0:
            raise ValueError(f"The excited-state probability must lie in [0, 1], got {self.pe}")


@dataclass(frozen=True)
class DecayRates:
    """Velocity-induced excitation (gamma_plus) and de-excitation (gamma_minus) rates."""

    gamma_plus: float
    gamma_minus: float
    negligible_plus: bool = False
    negligible_minus: bool = False
    err_estimate: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma_plus", "gamma_minus"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.negligible_plus and self.negligible_minus:
            logger.warning("Both decay rates are below the negligible threshold ⚠️")

    @property
    def total(self) -> float:
        return self.gamma_plus + self.gamma_minus

    @property
    def degenerate(self) -> bool:
        return self.total == 0 or (self.negligible_plus and self.negligible_minus)

    @property
    def pe_infinity(self) -> float:
        """Steady-state excitation gamma_minus / (gamma_plus + gamma_minus).

        Raises:
            DegenerateRatesError: If both rates vanish.
        """
        if self.degenerate:
            raise DegenerateRatesError("Both decay rates are negligible; the steady state is undefined")
        return self.gamma_minus / self.total


@dataclass(frozen=True)
class ForceValue:
    """Friction force with its excited/ground decomposition at the excitation pe it was composed for."""

    total: float
    excited_channel: float
    ground_channel: float
    pe: float = 0.0
    err_estimate: float = 0.0

    @classmethod
    def compose(cls, pe: float, excited: float, ground: float, err_estimate: float = 0.0) -> "ForceValue":
        AtomState(pe)
        return cls(
            total=pe * excited + (1.0 - pe) * ground,
            excited_channel=excited,
            ground_channel=ground,
            pe=pe,
            err_estimate=err_estimate,
        )

    def at(self, pe: float) -> "ForceValue":
        """The same channels recomposed for another excitation probability."""
        return ForceValue.compose(pe, self.excited_channel, self.ground_channel, self.err_estimate)


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    pe: float
    force: ForceValue


def plasmon_wavenumbers(kin: AtomKinematics, omega_sp: float = 1.0) -> tuple[float, float]:
    """Resonant wave numbers k_P+- = -(omega0 -+ omega_sp) / v picked out by the lossless plasmon."""
    return (-(kin.omega0 - omega_sp) / kin.v, -(kin.omega0 + omega_sp) / kin.v)


def _lossless_rate(kp: float, kin: AtomKinematics, dip: TransitionDipole, omega_sp: float) -> tuple[float, bool]:
    rate = omega_sp / (2.0 * kin.v) * ky_reduced_kernel(kp, dip, kin.d)
    return rate, rate < NEGLIGIBLE_RATE


def decay_rates_lossless(kin: AtomKinematics, dip: TransitionDipole, omega_sp: float = 1.0) -> DecayRates:
    """Decay rates over a lossless Drude metal, where Im R collapses onto the plasmon resonance.

    gamma_+- = (omega_sp / 2v) W(k_P+-), with W the ky-reduced kernel.

    Args:
        kin (AtomKinematics): Frequency, height and velocity.
        dip (TransitionDipole): Transition dipole.
        omega_sp (float): Surface-plasmon frequency.

    Returns:
        DecayRates: Both rates, flagged negligible below 1e-280.
    """
    kp_plus, kp_minus = plasmon_wavenumbers(kin, omega_sp)
    gamma_plus, negligible_plus = _lossless_rate(kp_plus, kin, dip, omega_sp)
    gamma_minus, negligible_minus = _lossless_rate(kp_minus, kin, dip, omega_sp)
    logger.debug(f"lossless rates at {kin}: gamma+={gamma_plus:.6e} gamma-={gamma_minus:.6e}")
    return DecayRates(gamma_plus, gamma_minus, negligible_plus, negligible_minus)


def friction_force_lossless(
    kin: AtomKinematics,
    dip: TransitionDipole,
    state: AtomState,
    omega_sp: float = 1.0,
) -> ForceValue:
    """Friction force over a lossless metal at excitation probability pe.

    The excited channel carries the recoil -k_P+ gamma_+ and the ground channel k_P- gamma_-,
    so F = pe (omega0 - omega_sp)/v gamma_+ - (1 - pe) (omega0 + omega_sp)/v gamma_-.
    """
    kp_plus, kp_minus = plasmon_wavenumbers(kin, omega_sp)
    rates = decay_rates_lossless(kin, dip, omega_sp)
    return ForceValue.compose(state.pe, -kp_plus * rates.gamma_plus, kp_minus * rates.gamma_minus)


def steady_state_force_lossless(kin: AtomKinematics, dip: TransitionDipole, omega_sp: float = 1.0) -> ForceValue:
    """Force once the population has relaxed to pe_infinity: -(2 omega_sp / v) gamma_+ gamma_- / (gamma_+ + gamma_-).

    Raises:
        DegenerateRatesError: If both rates are negligible.
    """
    rates = decay_rates_lossless(kin, dip, omega_sp)
    pe_inf = rates.pe_infinity
    channels = friction_force_lossless(kin, dip, AtomState(pe_inf), omega_sp)
    total = -(2.0 * omega_sp / kin.v) * rates.gamma_plus * rates.gamma_minus / rates.total
    return ForceValue(total, channels.excited_channel, channels.ground_channel, pe=pe_inf)


def _lossy_integrals(
    kin: AtomKinematics,
    metal: DrudeMetal,
    weight: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec,
) -> tuple[QuadratureResult, QuadratureResult]:
    """Integrals of weight(kx) Im R(omega0 + kx v) / pi above and below the threshold kx = -omega0/v.

    Both sides are refined together on arrays of kx.
    """
    peaks = locate_peaks(metal, kin.omega0, kin.v)
    decay = 1.0 / (2.0 * kin.d)

    def _integrand(kx: np.ndarray) -> np.ndarray:
        return weight(kx) * im_reflection_real_axis(metal, kin.omega0 + kx * kin.v) / math.pi

    return integrate_both_sides(_integrand, kin.threshold, decay, spec=spec, peaks=peaks)


def _rates_from_integrals(above: QuadratureResult, below: QuadratureResult) -> DecayRates:
    # Im R < 0 above the threshold, > 0 below it; clamp rounding-level sign errors
    gamma_plus = max(-above.value, 0.0)
    gamma_minus = max(below.value, 0.0)
    return DecayRates(
        gamma_plus,
        gamma_minus,
        negligible_plus=gamma_plus < NEGLIGIBLE_RATE,
        negligible_minus=gamma_minus < NEGLIGIBLE_RATE,
        err_estimate=above.err_estimate + below.err_estimate,
    )


def decay_rates_lossy(
    kin: AtomKinematics,
    metal: DrudeMetal,
    dip: TransitionDipole,
    spec: QuadratureSpec | None = None,
) -> DecayRates:
    """Decay rates over a lossy Drude metal.

    gamma_+ = (1/pi) integral from -omega0/v to inf of W(kx) (-Im R(omega0 + kx v)) dkx and
    gamma_- = (1/pi) integral from -inf to -omega0/v of W(kx) Im R(omega0 + kx v) dkx.

    Args:
        kin (AtomKinematics): Frequency, height and velocity.
        metal (DrudeMetal): Substrate with gamma_c > 0.
        dip (TransitionDipole): Transition dipole.
        spec (QuadratureSpec): Integration tolerances.

    Raises:
        QuadratureError: If an integral does not converge.
    """
    spec = spec or QuadratureSpec()
    if metal.is_lossless:
        raise ValueError("decay_rates_lossy needs gamma_c > 0; use decay_rates_lossless")
    above, below = _lossy_integrals(kin, metal, partial(ky_reduced_kernel_array, dip=dip, d=kin.d), spec)
    rates = _rates_from_integrals(above, below)
    logger.debug(f"lossy rates at {kin}: gamma+={rates.gamma_plus:.6e} gamma-={rates.gamma_minus:.6e}")
    return rates


def friction_force_lossy(
    kin: AtomKinematics,
    metal: DrudeMetal,
    dip: TransitionDipole,
    state: AtomState,
    spec: QuadratureSpec | None = None,
) -> ForceValue:
    """Friction force over a lossy Drude metal.

    F = (1/pi) [pe integral above -omega0/v + (1 - pe) integral below -omega0/v] of kx W(kx) Im R dkx.

    Raises:
        QuadratureError: If an integral does not converge.
    """
    spec = spec or QuadratureSpec()
    if metal.is_lossless:
        raise ValueError("friction_force_lossy needs gamma_c > 0; use friction_force_lossless")

    def _recoil(kx: np.ndarray) -> np.ndarray:
        return kx * ky_reduced_kernel_array(kx, dip, kin.d)

    above, below = _lossy_integrals(kin, metal, _recoil, spec)
    pe = state.pe
    err = pe * above.err_estimate + (1.0 - pe) * below.err_estimate
    return ForceValue.compose(pe, above.value, below.value, err_estimate=err)


def _lossy_integrals_2d(
    kin: AtomKinematics,
    metal: DrudeMetal,
    dip: TransitionDipole,
    recoil: bool,
    spec: QuadratureSpec,
) -> tuple[QuadratureResult, QuadratureResult]:
    inner_spec = QuadratureSpec(
        rel_tol=spec.rel_tol / 10.0,
        abs_tol=spec.abs_tol,
        max_subdivisions=spec.max_subdivisions,
        peak_padding=spec.peak_padding,
    )
    peaks = locate_peaks(metal, kin.omega0, kin.v)
    decay = 1.0 / (2.0 * kin.d)

    def _integrand(kx: float, ky: float) -> float:
        envelope = math.exp(-2.0 * math.hypot(kx, ky) * kin.d)
        if envelope == 0.0:
            return 0.0
        weight = pol_factor(SpectralPoint(kx, ky), dip) + pol_factor(SpectralPoint(kx, -ky), dip)
        if recoil:
            weight *= kx
        return envelope * weight * im_reflection_real_axis(metal, kin.omega0 + kx * kin.v) / math.pi

    def _inner(row: Callable[[float], float]) -> QuadratureResult:
        return integrate_semi_infinite(row, 0.0, "+", decay, spec=inner_spec)

    results = []
    for direction in ("+", "-"):
        outer = partial(
            integrate_semi_infinite,
            a=kin.threshold,
            direction=direction,
            decay_scale=decay,
            spec=spec,
            peaks=peaks,
        )
        results.append(integrate_iterated(_integrand, outer=outer, inner=_inner))
    return results[0], results[1]


def decay_rates_lossy_2d(
    kin: AtomKinematics,
    metal: DrudeMetal,
    dip: TransitionDipole,
    spec: QuadratureSpec | None = None,
) -> DecayRates:
    """Decay rates from the unreduced (kx, ky) integral, without the closed-form Bessel kernel."""
    spec = spec or QuadratureSpec()
    if metal.is_lossless:
        raise ValueError("decay_rates_lossy_2d needs gamma_c > 0")
    above, below = _lossy_integrals_2d(kin, metal, dip, recoil=False, spec=spec)
    return _rates_from_integrals(above, below)


def friction_force_lossy_2d(
    kin: AtomKinematics,
    metal: DrudeMetal,
    dip: TransitionDipole,
    state: AtomState,
    spec: QuadratureSpec | None = None,
) -> ForceValue:
    """Friction force from the unreduced (kx, ky) integral."""
    spec = spec or QuadratureSpec()
    if metal.is_lossless:
        raise ValueError("friction_force_lossy_2d needs gamma_c > 0")
    above, below = _lossy_integrals_2d(kin, metal, dip, recoil=True, spec=spec)
    pe = state.pe
    err = pe * above.err_estimate + (1.0 - pe) * below.err_estimate
    return ForceValue.compose(pe, above.value, below.value, err_estimate=err)


@dataclass(frozen=True)
class SubstrateModel:
    """Chooses between the lossless closed forms and the lossy quadratures from the metal alone."""

    metal: DrudeMetal = field(default_factory=DrudeMetal)
    spec: QuadratureSpec = field(default_factory=QuadratureSpec)

    @classmethod
    def lossless(cls, omega_sp: float = 1.0) -> "SubstrateModel":
        return cls(metal=DrudeMetal(omega_sp=omega_sp, gamma_c=0.0))

    @classmethod
    def drude(cls, metal: DrudeMetal, spec: QuadratureSpec | None = None) -> "SubstrateModel":
        return cls(metal=metal, spec=spec or QuadratureSpec())

    @property
    def is_lossless(self) -> bool:
        return self.metal.is_lossless

    def decay_rates(self, kin: AtomKinematics, dip: TransitionDipole) -> DecayRates:
        if self.is_lossless:
            return decay_rates_lossless(kin, dip, self.metal.omega_sp)
        return decay_rates_lossy(kin, self.metal, dip, self.spec)

    def force(self, kin: AtomKinematics, dip: TransitionDipole, state: AtomState) -> ForceValue:
        if self.is_lossless:
            return friction_force_lossless(kin, dip, state, self.metal.omega_sp)
        return friction_force_lossy(kin, self.metal, dip, state, self.spec)

    def describe(self) -> dict:
        return {
            "model": "lossless" if self.is_lossless else "drude",
            "omega_sp": self.metal.omega_sp,
            "gamma_c": self.metal.gamma_c,
            "rel_tol": self.spec.rel_tol,
        }


def excited_probability(t: float, pe0: float, rates: DecayRates) -> float:
    """P_e(t) = pe0 exp(-(gamma_+ + gamma_-) t) + pe_infinity (1 - exp(-(gamma_+ + gamma_-) t)).

    Raises:
        DegenerateRatesError: If both rates are negligible.
    """
    if not t >= 0:
        raise ValueError(f"Time must be non-negative, got {t = }")
    AtomState(pe0)
    pe_inf = rates.pe_infinity
    exponent = -rates.total * t
    decayed = math.exp(exponent)
    relaxed = -math.expm1(exponent)
    return min(max(pe0 * decayed + pe_inf * relaxed, 0.0), 1.0)


def force_trajectory(
    kin: AtomKinematics,
    model: SubstrateModel,
    dip: TransitionDipole,
    pe0: float,
    times: Sequence[float],
) -> list[TrajectoryPoint]:
    """Excitation probability and force along a list of times, starting from pe0 at t = 0.

    Rates and force channels are evaluated once and recombined at every time.
    """
    times = list(times)
    if any(t < 0 for t in times):
        raise ValueError("Trajectory times must be non-negative")
    if any(later < earlier for earlier, later in zip(times, times[1:], strict=False)):
        raise ValueError("Trajectory times must be sorted")

    rates = model.decay_rates(kin, dip)
    channels = model.force(kin, dip, AtomState(pe0))
    trajectory = []
    for t in times:
        pe = excited_probability(t, pe0, rates)
        trajectory.append(TrajectoryPoint(t=t, pe=pe, force=channels.at(pe)))
    return trajectory


def optimal_velocity(omega0: float, d: float, omega_sp: float = 1.0) -> float:
    """Velocity maximizing the ground-state friction, v_opt = (4/7)(omega0 + omega_sp) d."""
    if not d > 0 or not omega0 >= 0:
        raise ValueError(f"optimal_velocity needs d > 0 and omega0 >= 0, got {omega0 = }, {d = }")
    if omega_sp * d > SCALING_LAW_MAX_HEIGHT:
        logger.warning(f"The optimal-velocity law assumes omega_sp d << 1, got {omega_sp * d:.3g}")
    return 4.0 / 7.0 * (omega0 + omega_sp) * d


def optimal_frequency(v: float, d: float, omega_sp: float = 1.0) -> float:
    """Transition frequency maximizing the ground-state friction at fixed v, clipped at zero."""
    if not v > 0 or not d > 0:
        raise ValueError(f"optimal_frequency needs v > 0 and d > 0, got {v = }, {d = }")
    return max(0.0, 5.0 / 4.0 * v / d - omega_sp)
