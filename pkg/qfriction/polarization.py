import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from qfriction.material import DrudeMetal, reflection
from qfriction.quadrature import QuadratureResult, QuadratureSpec, integrate_semi_infinite
from qfriction.specfun import bessel_k_arrays, bessel_k_triplet

NORMALIZATION_TOLERANCE = 1e-12
# below this value of 2 |kx| d the kernel is replaced by its kx -> 0 limit
SMALL_ARGUMENT = 1e-12


class DegeneratePointError(ValueError):
    """Raised when a spectral quantity is requested at k_par = 0."""


def _parse_component(token: str) -> complex:
    cleaned = token.strip().replace(" ", "").replace("i", "j")
    if not cleaned:
        raise ValueError(f"Cannot parse dipole component {token!r} (expected e.g. '0.7071', '-0.7071i', '1+2i')")
    try:
        return complex(cleaned)
    except ValueError:
        raise ValueError(f"Cannot parse dipole component {token!r}")


@dataclass(frozen=True)
class TransitionDipole:
    """Normalized complex transition-dipole direction (gamma_x, gamma_y, gamma_z).

    A vector whose norm differs from 1 by more than 1e-12 is rescaled with a warning.
    """

    gx: complex
    gy: complex
    gz: complex

    def __post_init__(self) -> None:
        components = [complex(self.gx), complex(self.gy), complex(self.gz)]
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in components):
            raise ValueError(f"Dipole components must be finite, got {components}")
        norm = math.sqrt(sum(abs(c) ** 2 for c in components))
        if norm == 0:
            raise ValueError("The transition dipole cannot be the zero vector")
        if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
            logger.warning(f"Transition dipole has norm {norm:.12g} (off by {norm - 1.0:+.2e}), normalizing it ⚠️")
            components = [c / norm for c in components]
        for name, value in zip(("gx", "gy", "gz"), components, strict=True):
            object.__setattr__(self, name, value)

    @classmethod
    def from_string(cls, text: str) -> "TransitionDipole":
        """Parses 'gx,gy,gz' where each entry is a real or complex literal such as '0.7071-0.2i'."""
        tokens = text.split(",")
        if len(tokens) != 3:
            raise ValueError(f"A dipole needs exactly three comma separated components, got {text!r}")
        return cls(*(_parse_component(token) for token in tokens))

    @classmethod
    def linear(cls, axis: str) -> "TransitionDipole":
        """Linearly polarized dipole along 'x', 'y' or 'z'."""
        axes = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
        if axis not in axes:
            raise ValueError(f"Unknown axis {axis!r}, expected one of {sorted(axes)}")
        return cls(*axes[axis])

    @classmethod
    def circular(cls, handedness: str) -> "TransitionDipole":
        """Circular dipole in the xz plane: '+' is (x + iz)/sqrt(2) (s_y = +1), '-' is (x - iz)/sqrt(2)."""
        if handedness not in ("+", "-"):
            raise ValueError(f"handedness must be '+' or '-', got {handedness!r}")
        sign = 1.0 if handedness == "+" else -1.0
        return cls(1 / math.sqrt(2), 0.0, sign * 1j / math.sqrt(2))

    @property
    def components(self) -> tuple[complex, complex, complex]:
        return (self.gx, self.gy, self.gz)

    @property
    def px(self) -> float:
        return abs(self.gx) ** 2

    @property
    def py(self) -> float:
        return abs(self.gy) ** 2

    @property
    def pz(self) -> float:
        return abs(self.gz) ** 2

    @property
    def spin_y(self) -> float:
        return spin_y(self)

    def mirrored(self) -> "TransitionDipole":
        """Dipole reflected through the yz plane (gamma_x -> -gamma_x), pairing with v -> -v."""
        return TransitionDipole(-self.gx, self.gy, self.gz)

    def to_string(self) -> str:
        def _fmt(value: complex) -> str:
            return f"{value.real:.17g}{value.imag:+.17g}i"

        return ",".join(_fmt(c) for c in self.components)

    def as_array(self) -> np.ndarray:
        return np.array(self.components, dtype=complex)


@dataclass(frozen=True)
class SpectralPoint:
    kx: float
    ky: float

    @property
    def kpar(self) -> float:
        return math.hypot(self.kx, self.ky)


def spin_y(dip: TransitionDipole) -> float:
    """Out-of-plane spin projection s_y = -2 Im(gamma_x conj(gamma_z)), in [-1, 1]."""
    return -2.0 * (dip.gx * dip.gz.conjugate()).imag


def pol_factor(point: SpectralPoint, dip: TransitionDipole) -> float:
    """A(k) = |kx gx + ky gy - i k_par gz|^2 / k_par, the weight of one evanescent mode.

    Raises:
        DegeneratePointError: At k_par = 0.
    """
    kpar = point.kpar
    if kpar == 0:
        raise DegeneratePointError("pol_factor is undefined at k_par = 0")
    amplitude = point.kx * dip.gx + point.ky * dip.gy - 1j * kpar * dip.gz
    return abs(amplitude) ** 2 / kpar


def ky_reduced_kernel(kx: float, dip: TransitionDipole, d: float) -> float:
    """W(kx) = integral over ky of exp(-2 k_par d) A(kx, ky), in closed form.

    W = 2 kx^2 [(px - py) K0 + (py + pz)/2 (K0 + K2) + sgn(kx) s_y K1] evaluated at 2 |kx| d,
    which tends to (py + pz) / (2 d^2) at kx = 0 and to exact zero once K_n underflows.

    Args:
        kx (float): Wave number along the motion.
        dip (TransitionDipole): The transition dipole.
        d (float): Atom height above the surface, strictly positive.

    Returns:
        float: The non-negative kernel value.
    """
    if not d > 0:
        raise ValueError(f"The atom height must be positive, got {d = }")
    xi = 2.0 * abs(kx) * d
    if xi < SMALL_ARGUMENT:
        return (dip.py + dip.pz) / (2.0 * d * d)

    k0, k1, k2, negligible = bessel_k_triplet(xi)
    if negligible:
        return 0.0
    bracket = (dip.px - dip.py) * k0 + 0.5 * (dip.py + dip.pz) * (k0 + k2) + math.copysign(1.0, kx) * dip.spin_y * k1
    # the bracket is a positive integral; clamp rounding-level negatives near a chirality null
    return max(2.0 * kx * kx * bracket, 0.0)


def ky_reduced_kernel_array(kx: np.ndarray, dip: TransitionDipole, d: float) -> np.ndarray:
    """ky_reduced_kernel evaluated element-wise on an array of wave numbers."""
    if not d > 0:
        raise ValueError(f"The atom height must be positive, got {d = }")
    kx = np.asarray(kx, dtype=float)
    xi = 2.0 * np.abs(kx) * d
    small = xi < SMALL_ARGUMENT
    k0, k1, k2, negligible = bessel_k_arrays(np.where(small, 1.0, xi))
    bracket = (dip.px - dip.py) * k0 + 0.5 * (dip.py + dip.pz) * (k0 + k2) + np.copysign(1.0, kx) * dip.spin_y * k1
    values = np.where(negligible, 0.0, np.maximum(2.0 * kx * kx * bracket, 0.0))
    return np.where(small, (dip.py + dip.pz) / (2.0 * d * d), values)


def greens_kx_qs(kx: float, omega: complex, metal: DrudeMetal, d: float) -> np.ndarray:
    """ky-integrated quasi-static reflected Green tensor in the (kx, omega) representation.

    Satisfies conj(gamma) . G . gamma = -R(omega) W(kx) for any dipole gamma.

    Args:
        kx (float): Wave number along the motion.
        omega (complex): Frequency, off the plasmon poles.
        metal (DrudeMetal): The substrate.
        d (float): Atom height.

    Returns:
        np.ndarray: A 3x3 complex array; G_yx = G_xy = G_yz = G_zy = 0 and G_zx = -G_xz.
    """
    if not d > 0:
        raise ValueError(f"The atom height must be positive, got {d = }")
    r = reflection(metal, omega)
    xi = 2.0 * abs(kx) * d
    tensor = np.zeros((3, 3), dtype=complex)
    if xi < SMALL_ARGUMENT:
        limit = 1.0 / (2.0 * d * d)
        tensor[1, 1] = -r * limit
        tensor[2, 2] = -r * limit
        return tensor

    k0, k1, k2, negligible = bessel_k_triplet(xi)
    if negligible:
        return tensor
    kx2 = kx * kx
    tensor[0, 0] = -r * 2.0 * kx2 * k0
    tensor[1, 1] = -r * kx2 * (k2 - k0)
    tensor[2, 2] = -r * kx2 * (k0 + k2)
    tensor[0, 2] = -r * (-1j) * kx * 2.0 * abs(kx) * k1
    tensor[2, 0] = -tensor[0, 2]
    return tensor


def quadratic_form(tensor: np.ndarray, dip: TransitionDipole) -> complex:
    """conj(gamma) . G . gamma."""
    vector = dip.as_array()
    return complex(np.conj(vector) @ tensor @ vector)


def ky_reduced_kernel_numerical(
    kx: float,
    dip: TransitionDipole,
    d: float,
    spec: QuadratureSpec | None = None,
) -> QuadratureResult:
    """W(kx) by adaptive quadrature of exp(-2 k_par d) A(kx, ky) over ky, folded onto ky >= 0."""
    if not d > 0:
        raise ValueError(f"The atom height must be positive, got {d = }")

    def _integrand(ky: float) -> float:
        envelope = math.exp(-2.0 * math.hypot(kx, ky) * d)
        if envelope == 0.0:
            return 0.0
        return envelope * (pol_factor(SpectralPoint(kx, ky), dip) + pol_factor(SpectralPoint(kx, -ky), dip))

    return integrate_semi_infinite(_integrand, 0.0, "+", 1.0 / (2.0 * d), spec=spec)
