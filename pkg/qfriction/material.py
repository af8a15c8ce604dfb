import math
from collections.abc import Callable
from dataclasses import dataclass

from loguru import logger

from qfriction.quadrature import Peak, PeakSet, QuadratureResult, QuadratureSpec, integrate_adaptive

# frequencies closer than this to a pole of epsilon or R are rejected
POLE_EXCLUSION_RADIUS = 1e-8


class PoleError(ZeroDivisionError):
    """Raised when a response function is evaluated on (or numerically at) one of its poles."""


@dataclass(frozen=True)
class DrudeMetal:
    """Drude half-space with surface-plasmon frequency omega_sp and collision rate gamma_c.

    Frequencies are in units of the surface-plasmon frequency of the reference metal, so the
    default omega_sp = 1 is the dimensionless convention used everywhere else.
    """

    omega_sp: float = 1.0
    gamma_c: float = 0.0

    def __post_init__(self) -> None:
        if not self.omega_sp > 0:
            raise ValueError(f"omega_sp must be positive, got {self.omega_sp}")
        if not self.gamma_c >= 0:
            raise ValueError(f"gamma_c must be non-negative, got {self.gamma_c}")
        if not self.gamma_c < 2.0 * self.omega_sp:
            raise ValueError(f"gamma_c must stay below 2 omega_sp (underdamped plasmon), got {self.gamma_c}")

    @property
    def is_lossless(self) -> bool:
        return self.gamma_c == 0

    @property
    def omega_sp_prime(self) -> float:
        """Damped plasmon frequency sqrt(omega_sp^2 - gamma_c^2 / 4)."""
        return math.sqrt(self.omega_sp**2 - self.gamma_c**2 / 4.0)

    @property
    def poles(self) -> tuple[complex, complex]:
        """Poles of R in the lower half plane, at +-omega_sp' - i gamma_c / 2."""
        half = 0.5j * self.gamma_c
        return (self.omega_sp_prime - half, -self.omega_sp_prime - half)


def _near(omega: complex, point: complex) -> bool:
    return abs(omega - point) < POLE_EXCLUSION_RADIUS


def permittivity(metal: DrudeMetal, omega: complex) -> complex:
    """Drude permittivity eps(w) = 1 - 2 omega_sp^2 / (w (w + i gamma_c)).

    Args:
        metal (DrudeMetal): The substrate.
        omega (complex): Complex frequency.

    Raises:
        PoleError: At w = 0 or w = -i gamma_c.
    """
    omega = complex(omega)
    if _near(omega, 0.0) or _near(omega, -1j * metal.gamma_c):
        raise PoleError(f"Drude permittivity is singular at {omega = }")
    return 1.0 - 2.0 * metal.omega_sp**2 / (omega * (omega + 1j * metal.gamma_c))


def reflection(metal: DrudeMetal, omega: complex) -> complex:
    """Quasi-static reflection coefficient R(w) = -(eps - 1) / (eps + 1).

    Args:
        metal (DrudeMetal): The substrate.
        omega (complex): Complex frequency, off the poles of eps and R.

    Returns:
        complex: R(w); real on the imaginary axis.

    Raises:
        PoleError: Near the plasmon poles or the poles of eps.
    """
    omega = complex(omega)
    for pole in metal.poles:
        if _near(omega, pole):
            raise PoleError(f"R(w) has a plasmon pole at {pole}, requested {omega = }")
    eps = permittivity(metal, omega)
    return -(eps - 1.0) / (eps + 1.0)


def reflection_pole_form(metal: DrudeMetal, omega: complex) -> complex:
    """R(w) = -(omega_sp^2 / 2 omega_sp') [1 / (omega_sp' - i gamma_c/2 - w) + 1 / (omega_sp' + i gamma_c/2 + w)].

    Args:
        metal (DrudeMetal): The substrate.
        omega (complex): Complex frequency.

    Raises:
        PoleError: Near either plasmon pole.
    """
    omega = complex(omega)
    for pole in metal.poles:
        if _near(omega, pole):
            raise PoleError(f"R(w) has a plasmon pole at {pole}, requested {omega = }")
    shifted = metal.omega_sp_prime
    half = 0.5j * metal.gamma_c
    prefactor = -(metal.omega_sp**2) / (2.0 * shifted)
    return prefactor * (1.0 / (shifted - half - omega) + 1.0 / (shifted + half + omega))


def im_reflection_real_axis(metal: DrudeMetal, omega: float) -> float:
    """Closed form of Im R on the real frequency axis.

    Im R(w) = -omega_sp^2 gamma_c w / ((w^2 - omega_sp^2)^2 + gamma_c^2 w^2), negative for w > 0.

    Args:
        metal (DrudeMetal): The substrate.
        omega (float): Real frequency.

    Raises:
        PoleError: For a lossless metal exactly on resonance (delta-function regime).
    """
    detuning = omega * omega - metal.omega_sp**2
    if metal.is_lossless:
        if abs(detuning) < POLE_EXCLUSION_RADIUS:
            raise PoleError(f"Im R is a delta function at {omega = } for a lossless metal; use the lossless rates")
        return 0.0
    return -(metal.omega_sp**2) * metal.gamma_c * omega / (detuning * detuning + (metal.gamma_c * omega) ** 2)


def on_imaginary_axis(metal: DrudeMetal, xi: float) -> float:
    """R(i xi), which is real."""
    value = reflection(metal, 1j * xi)
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        logger.warning(f"R(i xi) picked up an imaginary part {value.imag:.3e} at {xi = }")
    return value.real


def delta_limit_weight(
    metal: DrudeMetal,
    phi: Callable[[float], float],
    half_width: float = 0.5,
    spec: QuadratureSpec | None = None,
) -> QuadratureResult:
    """Integral of Im g(w) phi(w) across the positive plasmon resonance.

    g is R rescaled by -2 omega_sp' / omega_sp^2 so its resonant part is a unit Lorentzian;
    as gamma_c goes to zero the result tends to pi phi(omega_sp) with a first-order correction.

    Args:
        metal (DrudeMetal): A lossy substrate.
        phi (Callable[[float], float]): Smooth test function.
        half_width (float): Half-length of the frequency window centred on omega_sp'.
        spec (QuadratureSpec): Tolerances.
    """
    if metal.is_lossless:
        raise PoleError("delta_limit_weight needs gamma_c > 0; the lossless weight is pi phi(omega_sp)")
    if not 0 < half_width < metal.omega_sp_prime:
        raise ValueError(f"half_width must lie in (0, omega_sp'), got {half_width}")

    scale = -2.0 * metal.omega_sp_prime / metal.omega_sp**2
    center = metal.omega_sp_prime
    peaks = PeakSet(peaks=(Peak(center, metal.gamma_c / 2.0),))

    def _integrand(omega: float) -> float:
        return scale * im_reflection_real_axis(metal, omega) * phi(omega)

    return integrate_adaptive(_integrand, center - half_width, center + half_width, spec=spec, peaks=peaks)

