import math
from enum import IntEnum
from typing import NamedTuple

import numpy as np
from loguru import logger
from scipy import special

# beyond this argument e^{-x} is below ~1e-304 and K_n is treated as exact zero
UNDERFLOW_THRESHOLD = 700.0


class BesselOrder(IntEnum):
    K0 = 0
    K1 = 1
    K2 = 2

    @staticmethod
    def from_value(order: "int | BesselOrder") -> "BesselOrder":
        """Converts an integer to a BesselOrder.

        Args:
            order (int | BesselOrder): The order of the modified Bessel function.

        Raises:
            ValueError: If the order is not 0, 1 or 2.
        """
        try:
            return BesselOrder(order)
        except ValueError:
            raise ValueError(f"Unsupported Bessel order: {order} (only 0, 1 and 2 are representable)")


class BesselDomainError(ValueError):
    """Raised when K_n is requested at a non-positive argument."""


class BesselValue(NamedTuple):
    value: float
    negligible: bool = False


class BesselTriplet(NamedTuple):
    k0: float
    k1: float
    k2: float
    negligible: bool = False


def _check_argument(x: float, order: int | None = None) -> None:
    if not x > 0:
        label = "K_n" if order is None else f"K_{order}"
        raise BesselDomainError(f"{label}(x) is only defined here for x > 0, got {x = }")


def bessel_k_triplet(x: float) -> BesselTriplet:
    """Evaluates K0, K1 and K2 at a single positive argument.

    K0 and K1 come from the exponentially scaled Chebyshev kernels of scipy, K2 always
    from the upward recurrence K2 = K0 + (2/x) K1 so the recurrence holds to rounding.

    Args:
        x (float): The positive real argument.

    Returns:
        BesselTriplet: The three values, flagged negligible (and zeroed) for x > 700.

    Raises:
        BesselDomainError: If x <= 0.
    """
    _check_argument(x)
    if x > UNDERFLOW_THRESHOLD:
        logger.debug(f"K_n({x = }) below the underflow-safe range, returning negligible zero")
        return BesselTriplet(0.0, 0.0, 0.0, negligible=True)

    k0_scaled = float(special.k0e(x))
    k1_scaled = float(special.k1e(x))
    k2_scaled = k0_scaled + (2.0 / x) * k1_scaled
    damping = math.exp(-x)
    return BesselTriplet(k0_scaled * damping, k1_scaled * damping, k2_scaled * damping)


def bessel_k(order: "int | BesselOrder", x: float) -> BesselValue:
    """Modified Bessel function of the second kind K_n(x) for n in {0, 1, 2}.

    Args:
        order (int | BesselOrder): The order n.
        x (float): The positive real argument.

    Returns:
        BesselValue: The value and a flag telling whether it was exponentially negligible.

    Raises:
        BesselDomainError: If x <= 0.
        ValueError: If the order is not representable.
    """
    order = BesselOrder.from_value(order)
    _check_argument(x, order=int(order))
    triplet = bessel_k_triplet(x)
    return BesselValue(value=triplet[int(order)], negligible=triplet.negligible)


class BesselArrays(NamedTuple):
    k0: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    negligible: np.ndarray


def bessel_k_arrays(x: "np.ndarray | float") -> BesselArrays:
    """Element-wise K0, K1 and K2, the array form of bessel_k_triplet used inside quadrature rules.

    Raises:
        BesselDomainError: If any argument is not strictly positive.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0):
        raise BesselDomainError(f"K_n(x) is only defined here for x > 0, got min(x) = {np.min(x)}")
    negligible = x > UNDERFLOW_THRESHOLD
    damping = np.where(negligible, 0.0, np.exp(-np.minimum(x, UNDERFLOW_THRESHOLD)))
    k0_scaled = special.k0e(x)
    k1_scaled = special.k1e(x)
    k0 = k0_scaled * damping
    k1 = k1_scaled * damping
    return BesselArrays(k0, k1, k0 + (2.0 / x) * k1, negligible)
