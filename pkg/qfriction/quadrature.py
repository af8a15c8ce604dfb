import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from loguru import logger
from scipy import integrate

if TYPE_CHECKING:
    from qfriction.material import DrudeMetal


class QuadratureError(RuntimeError):
    """Raised when the adaptive rule does not reach the requested tolerance.

    The partial result is kept on the exception so callers can still report it.
    """

    def __init__(self, message: str, value: float, err_estimate: float) -> None:
        super().__init__(f"{message} (partial value={value:.6e}, error estimate={err_estimate:.3e})")
        self.value = value
        self.err_estimate = err_estimate


class Direction(Enum):
    UP = "+"
    DOWN = "-"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.UP else -1

    @staticmethod
    def from_string(value: "str | Direction") -> "Direction":
        """Converts '+', '-', 'up' or 'down' to a Direction."""
        if isinstance(value, Direction):
            return value
        aliases = {"+": Direction.UP, "up": Direction.UP, "-": Direction.DOWN, "down": Direction.DOWN}
        try:
            return aliases[value.strip().lower()]
        except (KeyError, AttributeError):
            raise ValueError(f"Unsupported integration direction: {value!r}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy contract shared by every adaptive integral.

    Attributes:
        rel_tol (float): Requested relative tolerance.
        abs_tol (float): Requested absolute tolerance, also the envelope level where tails are cut.
        max_subdivisions (int): Maximal number of subintervals of the adaptive rule.
        peak_padding (float): Half-widths kept around a resonance as dedicated subintervals.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000
    peak_padding: float = 10.0

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_subdivisions < 10:
            raise ValueError(f"max_subdivisions must be at least 10, got {self.max_subdivisions}")
        if not self.peak_padding > 0:
            raise ValueError(f"peak_padding must be positive, got {self.peak_padding}")


@dataclass(frozen=True)
class Peak:
    center: float
    width: float


@dataclass(frozen=True)
class PeakSet:
    """Resonances of an integrand; zero_width marks the lossless (delta-function) regime."""

    peaks: tuple[Peak, ...] = ()
    zero_width: bool = False

    def __post_init__(self) -> None:
        for peak in self.peaks:
            if self.zero_width:
                continue
            if not peak.width > 0:
                raise ValueError(f"Peak widths must be positive outside the lossless regime, got {peak}")

    @property
    def centers(self) -> list[float]:
        return [peak.center for peak in self.peaks]

    def breakpoints(self, a: float, b: float, padding: float) -> list[float]:
        """Returns the sorted subdivision points strictly inside (a, b).

        Each peak contributes its center and the two points `padding` widths away.

        Args:
            a (float): Lower integration bound.
            b (float): Upper integration bound.
            padding (float): Number of half-widths isolated around each center.
        """
        points = set()
        for peak in self.peaks:
            for candidate in (peak.center, peak.center - padding * peak.width, peak.center + padding * peak.width):
                if a < candidate < b:
                    points.add(candidate)
        return sorted(points)


class QuadratureResult(NamedTuple):
    value: float
    err_estimate: float


def _tolerance(value: float, spec: QuadratureSpec) -> float:
    return max(spec.rel_tol * abs(value), spec.abs_tol)


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    peaks: PeakSet | None = None,
) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod integral of f over the finite interval [a, b].

    Args:
        f (Callable[[float], float]): Real integrand, finite on (a, b).
        a (float): Lower bound.
        b (float): Upper bound, strictly larger than a.
        spec (QuadratureSpec): Tolerances. Defaults to QuadratureSpec().
        peaks (PeakSet): Known resonances, used as subdivision points.

    Returns:
        QuadratureResult: The integral and its error estimate.

    Raises:
        ValueError: If the bounds are not finite and ordered.
        QuadratureError: If the tolerance is not reached within max_subdivisions.
    """
    spec = spec or QuadratureSpec()
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise ValueError(f"integrate_adaptive needs finite bounds with a < b, got [{a}, {b}]")

    points = peaks.breakpoints(a, b, spec.peak_padding) if peaks else []
    limit = max(spec.max_subdivisions, len(points) + 2)
    result = integrate.quad(
        f,
        a,
        b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=limit,
        points=points or None,
        full_output=1,
    )
    value, err_estimate = float(result[0]), float(result[1])

    # scipy appends a message only when QUADPACK flags a problem
    if len(result) > 3:
        if err_estimate <= _tolerance(value, spec):
            logger.debug(f"Quadrature on [{a:.4g}, {b:.4g}] flagged but within tolerance: {result[3]}")
        else:
            raise QuadratureError(f"Quadrature on [{a:.6g}, {b:.6g}] did not converge", value, err_estimate)
    return QuadratureResult(value, err_estimate)


def _tail_cut(a: float, sign: int, decay_scale: float, spec: QuadratureSpec, peaks: PeakSet | None) -> float:
    """Point past which the envelope is below abs_tol and no padded peak remains."""
    cut = a + sign * decay_scale * math.log(1.0 / spec.abs_tol)
    if peaks:
        for peak in peaks.peaks:
            edge = peak.center + sign * spec.peak_padding * peak.width
            if sign * (peak.center - a) > 0 and sign * (edge - cut) > 0:
                cut = edge + sign * decay_scale
    return cut


def integrate_semi_infinite(
    f: Callable[[float], float],
    a: float,
    direction: "str | Direction",
    decay_scale: float,
    spec: QuadratureSpec | None = None,
    peaks: PeakSet | None = None,
) -> QuadratureResult:
    """Integral of f from a to +infinity (direction '+') or from -infinity to a (direction '-').

    The range is split at a cut where the exponential envelope exp(-|t - a| / decay_scale)
    falls below abs_tol (pushed outward past any padded peak). The finite part is integrated
    adaptively with the peaks as breakpoints; the remaining tail is mapped onto [0, 1).

    Args:
        f (Callable[[float], float]): Real integrand, returning finite values for any finite t.
        a (float): The finite bound.
        direction (str | Direction): '+' for [a, inf), '-' for (-inf, a].
        decay_scale (float): Length over which the integrand envelope drops by e.
        spec (QuadratureSpec): Tolerances. Defaults to QuadratureSpec().
        peaks (PeakSet): Known resonances of the integrand.

    Returns:
        QuadratureResult: The integral and the summed error estimate of both pieces.
    """
    spec = spec or QuadratureSpec()
    sign = Direction.from_string(direction).sign
    if not decay_scale > 0:
        raise ValueError(f"decay_scale must be positive, got {decay_scale}")

    cut = _tail_cut(a, sign, decay_scale, spec, peaks)
    lower, upper = (a, cut) if sign > 0 else (cut, a)
    body = integrate_adaptive(f, lower, upper, spec=spec, peaks=peaks)

    def _mapped(s: float) -> float:
        if s >= 1.0:
            return 0.0
        return f(cut + sign * decay_scale * s / (1.0 - s)) * decay_scale / (1.0 - s) ** 2

    tail = integrate_adaptive(_mapped, 0.0, 1.0, spec=spec)
    logger.debug(f"semi-infinite integral from {a:.4g} (sign {sign:+d}): body={body.value:.6e} tail={tail.value:.3e}")
    return QuadratureResult(body.value + tail.value, body.err_estimate + tail.err_estimate)


def integrate_iterated(
    f: Callable[[float, float], float],
    outer: Callable[[Callable[[float], float]], QuadratureResult],
    inner: Callable[[Callable[[float], float]], QuadratureResult],
) -> QuadratureResult:
    """Iterated two-dimensional integral: outer over x of inner over y of f(x, y).

    Args:
        f (Callable[[float, float], float]): The integrand f(x, y).
        outer (Callable): Integrates a function of x, e.g. a partial of integrate_semi_infinite.
        inner (Callable): Integrates a function of y for a fixed x.

    Returns:
        QuadratureResult: The value, with the worst inner relative error folded into the estimate.
    """
    worst_inner = 0.0

    def _row(x: float) -> float:
        nonlocal worst_inner
        row = inner(lambda y: f(x, y))
        if row.value != 0.0:
            worst_inner = max(worst_inner, row.err_estimate / abs(row.value))
        return row.value

    total = outer(_row)
    return QuadratureResult(total.value, total.err_estimate + worst_inner * abs(total.value))


def locate_peaks(metal: "DrudeMetal", omega0: float, v: float) -> PeakSet:
    """Places the two Doppler-shifted plasmon resonances on the kx axis.

    The reflection poles at +-omega_sp' - i gamma_c / 2 map to kx = (+-omega_sp' - omega0) / v
    with half-width gamma_c / (2 v).

    Args:
        metal (DrudeMetal): The substrate.
        omega0 (float): Atomic transition frequency.
        v (float): Atom velocity, strictly positive.

    Returns:
        PeakSet: Both resonances; zero_width when the metal is lossless.
    """
    if not v > 0:
        raise ValueError(f"locate_peaks requires v > 0, got {v = }")
    shifted = metal.omega_sp_prime
    width = metal.gamma_c / (2.0 * v)
    peaks = (Peak((shifted - omega0) / v, width), Peak((-shifted - omega0) / v, width))
    return PeakSet(peaks=peaks, zero_width=metal.gamma_c == 0)


_KRONROD_ABSCISSAE = np.array(
    [
        0.995657163025808080735527280689003,
        0.973906528517171720077964012084452,
        0.930157491355708226001207180059508,
        0.865063366688984510732096688423493,
        0.780817726586416897063717578345042,
        0.679409568299024406234327365114874,
        0.562757134668604683339000099272694,
        0.433395394129247190799265943165784,
        0.294392862701460198131126603103866,
        0.148874338981631210884826001129720,
    ],
)
_KRONROD_WEIGHTS = np.array(
    [
        0.011694638867371874278064396062192,
        0.032558162307964727478818972459390,
        0.054755896574351996031381300244580,
        0.075039674810919952767043140916190,
        0.093125454583697605535065465083366,
        0.109387158802297641899210590325805,
        0.123491976262065851077208980223048,
        0.134709217311473325928054001771707,
        0.142775938577060080797094273138717,
        0.147739104901338491374841515972068,
    ],
)
_KRONROD_CENTER_WEIGHT = 0.149445554002916905664936468389821
_GAUSS_WEIGHTS = np.array(
    [
        0.066671344308688137593568809893332,
        0.149451349150580593145776339657697,
        0.219086362515982043995534934228163,
        0.269266719309996355091226921569469,
        0.295524224714752870173892994651338,
    ],
)

# 21-point Kronrod extension of the 10-point Gauss rule on [-1, 1], nodes ascending
GK21_NODES = np.concatenate([-_KRONROD_ABSCISSAE, [0.0], _KRONROD_ABSCISSAE[::-1]])
GK21_KRONROD_WEIGHTS = np.concatenate([_KRONROD_WEIGHTS, [_KRONROD_CENTER_WEIGHT], _KRONROD_WEIGHTS[::-1]])
GK21_GAUSS_WEIGHTS = np.zeros(21)
GK21_GAUSS_WEIGHTS[1:10:2] = _GAUSS_WEIGHTS
GK21_GAUSS_WEIGHTS[11:20:2] = _GAUSS_WEIGHTS[::-1]


class PanelSet(NamedTuple):
    """Subintervals of one or more integrals, evaluated together by integrate_panels.

    A mapped panel lives in s in [0, 1) and stands for t = origin + scale s / (1 - s);
    a plain panel integrates directly over t = s.
    """

    left: np.ndarray
    right: np.ndarray
    group: np.ndarray
    origin: np.ndarray
    scale: np.ndarray
    mapped: np.ndarray

    @classmethod
    def plain(cls, edges: "list[float] | np.ndarray", group: int = 0) -> "PanelSet":
        """Consecutive panels between sorted edges."""
        edges = np.asarray(edges, dtype=float)
        n = len(edges) - 1
        if n < 1 or not np.all(np.diff(edges) > 0):
            raise ValueError(f"Panel edges must be strictly increasing, got {edges}")
        return cls(edges[:-1], edges[1:], np.full(n, group), np.zeros(n), np.ones(n), np.zeros(n, dtype=bool))

    @classmethod
    def tail(cls, origin: float, scale: float, group: int = 0) -> "PanelSet":
        """One mapped panel for the ray from origin towards sign(scale) infinity."""
        return cls(
            np.zeros(1),
            np.ones(1),
            np.full(1, group),
            np.full(1, origin),
            np.full(1, scale),
            np.ones(1, dtype=bool),
        )

    @classmethod
    def join(cls, *sets: "PanelSet") -> "PanelSet":
        return cls(*(np.concatenate(columns) for columns in zip(*sets, strict=True)))

    def take(self, index: np.ndarray) -> "PanelSet":
        return PanelSet(*(column[index] for column in self))


def semi_infinite_panels(
    a: float,
    direction: "str | Direction",
    decay_scale: float,
    spec: QuadratureSpec,
    peaks: PeakSet | None = None,
    group: int = 0,
) -> PanelSet:
    """Initial panels of the integral from a towards +infinity or -infinity.

    The same split as integrate_semi_infinite: padded peaks bound their own panels up to the cut,
    and one mapped panel covers the rest of the ray.
    """
    sign = Direction.from_string(direction).sign
    if not decay_scale > 0:
        raise ValueError(f"decay_scale must be positive, got {decay_scale}")
    cut = _tail_cut(a, sign, decay_scale, spec, peaks)
    lower, upper = (a, cut) if sign > 0 else (cut, a)
    inner = peaks.breakpoints(lower, upper, spec.peak_padding) if peaks else []
    return PanelSet.join(
        PanelSet.plain([lower, *inner, upper], group),
        PanelSet.tail(cut, sign * decay_scale, group),
    )


def gauss_kronrod_panels(f: Callable[[np.ndarray], np.ndarray], panels: PanelSet) -> tuple[np.ndarray, np.ndarray]:
    """21-point Kronrod estimate and error of f on every panel, with a single call of f.

    Args:
        f (Callable[[np.ndarray], np.ndarray]): Vectorized real integrand.
        panels (PanelSet): The panels.

    Returns:
        tuple[np.ndarray, np.ndarray]: Per-panel integrals and error estimates.
    """
    half = 0.5 * (panels.right - panels.left)
    s = 0.5 * (panels.right + panels.left)[:, None] + half[:, None] * GK21_NODES
    mapped = panels.mapped[:, None]
    # rounding can put a node of a tiny panel next to s = 1 on the end of the ray
    beyond = mapped & (s >= 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s_inside = np.where(beyond, 0.0, s)
        gap = 1.0 - s_inside
        t = np.where(mapped, panels.origin[:, None] + panels.scale[:, None] * s_inside / gap, s_inside)
        jacobian = np.where(mapped, np.abs(panels.scale)[:, None] / gap**2, 1.0)
        values = np.where(beyond, 0.0, np.asarray(f(t), dtype=float) * jacobian)

        kronrod = half * (values @ GK21_KRONROD_WEIGHTS)
        gauss = half * (values @ GK21_GAUSS_WEIGHTS)
        mean = 0.5 * (values @ GK21_KRONROD_WEIGHTS)
        resasc = np.abs(half) * (np.abs(values - mean[:, None]) @ GK21_KRONROD_WEIGHTS)
        difference = np.abs(kronrod - gauss)
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * difference / resasc) ** 1.5), difference)
    return kronrod, np.where(np.isfinite(scaled), scaled, difference)


def integrate_panels(
    f: Callable[[np.ndarray], np.ndarray],
    panels: PanelSet,
    spec: QuadratureSpec | None = None,
) -> list[QuadratureResult]:
    """Globally adaptive Gauss-Kronrod integration of several integrals sharing one integrand.

    Every round bisects the panels of each unconverged group whose error exceeds their share
    of the group tolerance (and always the worst panel), and evaluates only the new halves.

    Args:
        f (Callable[[np.ndarray], np.ndarray]): Vectorized real integrand, finite everywhere.
        panels (PanelSet): Initial panels; group g collects the pieces of integral g.
        spec (QuadratureSpec): Tolerances; max_subdivisions bounds the panels of each group.

    Returns:
        list[QuadratureResult]: One result per group, in group order.

    Raises:
        QuadratureError: If a group exhausts max_subdivisions or its panels cannot be split further.
    """
    spec = spec or QuadratureSpec()
    n_groups = int(panels.group.max()) + 1
    estimates, errors = gauss_kronrod_panels(f, panels)
    rounds = 0
    while True:
        totals = np.bincount(panels.group, weights=estimates, minlength=n_groups)
        group_errors = np.bincount(panels.group, weights=errors, minlength=n_groups)
        tolerances = np.maximum(spec.rel_tol * np.abs(totals), spec.abs_tol)
        if not np.all(np.isfinite(totals)):
            g = int(np.argmin(np.isfinite(totals)))
            raise QuadratureError(f"Panel integral {g} has a non-finite integrand value", math.nan, math.inf)
        unconverged = group_errors > tolerances
        if not unconverged.any():
            break
        counts = np.bincount(panels.group, minlength=n_groups)
        exhausted = np.flatnonzero(unconverged & (counts >= spec.max_subdivisions))
        if exhausted.size:
            g = int(exhausted[0])
            raise QuadratureError(
                f"Panel integral {g} needs more than {spec.max_subdivisions} subintervals",
                float(totals[g]),
                float(group_errors[g]),
            )

        split = unconverged[panels.group] & (errors > (tolerances / counts)[panels.group])
        for g in np.flatnonzero(unconverged):
            members = np.flatnonzero(panels.group == g)
            split[members[np.argmax(errors[members])]] = True

        chosen = panels.take(split)
        middle = 0.5 * (chosen.left + chosen.right)
        if np.any((middle <= chosen.left) | (middle >= chosen.right)):
            g = int(chosen.group[np.argmax((middle <= chosen.left) | (middle >= chosen.right))])
            raise QuadratureError(
                f"Panel integral {g} cannot be refined below machine precision",
                float(totals[g]),
                float(group_errors[g]),
            )
        halves = PanelSet.join(chosen._replace(right=middle), chosen._replace(left=middle))
        new_estimates, new_errors = gauss_kronrod_panels(f, halves)
        keep = ~split
        panels = PanelSet.join(panels.take(keep), halves)
        estimates = np.concatenate([estimates[keep], new_estimates])
        errors = np.concatenate([errors[keep], new_errors])
        rounds += 1

    logger.debug(f"Panel quadrature converged after {rounds} rounds on {len(panels.left)} panels")
    return [QuadratureResult(float(totals[g]), float(group_errors[g])) for g in range(n_groups)]


def integrate_both_sides(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    decay_scale: float,
    spec: QuadratureSpec | None = None,
    peaks: PeakSet | None = None,
) -> tuple[QuadratureResult, QuadratureResult]:
    """Integrals of a vectorized f over [a, inf) and over (-inf, a], refined together.

    Returns:
        tuple[QuadratureResult, QuadratureResult]: The integral above a, then the one below a.
    """
    spec = spec or QuadratureSpec()
    panels = PanelSet.join(
        semi_infinite_panels(a, Direction.UP, decay_scale, spec, peaks, group=0),
        semi_infinite_panels(a, Direction.DOWN, decay_scale, spec, peaks, group=1),
    )
    above, below = integrate_panels(f, panels, spec)
    return above, below
