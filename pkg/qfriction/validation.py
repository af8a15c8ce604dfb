import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import pandas as pd
from loguru import logger

from qfriction.friction import (
    AtomKinematics,
    AtomState,
    SubstrateModel,
    decay_rates_lossless,
    decay_rates_lossy,
    decay_rates_lossy_2d,
    friction_force_lossless,
    friction_force_lossy,
    friction_force_lossy_2d,
    force_trajectory,
    optimal_velocity,
    steady_state_force_lossless,
)
from qfriction.material import POLE_EXCLUSION_RADIUS, DrudeMetal, reflection, reflection_pole_form
from qfriction.polarization import (
    TransitionDipole,
    greens_kx_qs,
    ky_reduced_kernel,
    ky_reduced_kernel_numerical,
)
from qfriction.quadrature import QuadratureSpec
from qfriction.specfun import bessel_k, bessel_k_triplet

REFERENCE = {"omega0": 0.1, "d": 0.1, "v": 0.05}
NAMED_DIPOLES = {
    "x": TransitionDipole.linear("x"),
    "y": TransitionDipole.linear("y"),
    "z": TransitionDipole.linear("z"),
    "gamma_plus": TransitionDipole.circular("+"),
    "gamma_minus": TransitionDipole.circular("-"),
}


def random_dipole(rng: np.random.Generator) -> TransitionDipole:
    components = rng.normal(size=3) + 1j * rng.normal(size=3)
    return TransitionDipole(*(components / np.linalg.norm(components)))


def _relative(measured: float, reference: float, floor: float = 1e-300) -> float:
    return abs(measured - reference) / max(abs(reference), floor)


def series_bessel_k(order: int, x: float, terms: int = 60) -> float:
    """K0 or K1 from their ascending series, independent of the Chebyshev kernels."""
    quarter = x * x / 4.0
    log_half = math.log(x / 2.0)
    if order == 0:
        total_i, total_psi = 0.0, 0.0
        term, harmonic = 1.0, 0.0
        for k in range(terms):
            if k > 0:
                term *= quarter / (k * k)
                harmonic += 1.0 / k
            total_i += term
            total_psi += term * (harmonic - np.euler_gamma)
        return -log_half * total_i + total_psi
    if order == 1:
        total_i, total_psi = 0.0, 0.0
        term, harmonic_k, harmonic_k1 = 1.0, 0.0, 1.0
        for k in range(terms):
            if k > 0:
                term *= quarter / (k * (k + 1))
                harmonic_k += 1.0 / k
                harmonic_k1 += 1.0 / (k + 1)
            total_i += term
            total_psi += term * (harmonic_k + harmonic_k1 - 2.0 * np.euler_gamma)
        return 1.0 / x + log_half * (x / 2.0) * total_i - (x / 4.0) * total_psi
    raise ValueError(f"series_bessel_k supports orders 0 and 1, got {order}")


def measure_reflection_identity(samples: int = 10_000, seed: int = 0) -> float:
    """Largest relative gap between the rational and pole forms of R on random complex frequencies."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for gamma_c in (0.05, 0.2, 0.5):
        metal = DrudeMetal(gamma_c=gamma_c)
        singular = [*metal.poles, 0.0, -1j * gamma_c]
        count = 0
        while count < samples // 3 + 1:
            omega = complex(rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0))
            if min(abs(omega - point) for point in singular) < 1e-2:
                continue
            worst = max(worst, _relative(reflection(metal, omega), reflection_pole_form(metal, omega)))
            count += 1
    return worst


def measure_bessel_goldens() -> float:
    worst = 0.0
    for x in (0.5, 1.0, 2.0):
        for order in (0, 1):
            worst = max(worst, _relative(bessel_k(order, x).value, series_bessel_k(order, x)))
    return worst


def measure_bessel_recurrence() -> float:
    worst = 0.0
    for x in np.geomspace(1e-4, 100.0, 400):
        k0, k1, k2, _ = bessel_k_triplet(float(x))
        worst = max(worst, abs(k2 - k0 - 2.0 * k1 / x) / k2)
    return worst


def measure_ky_reduction(samples: int = 50, seed: int = 1) -> float:
    """Closed-form kernel against direct ky quadrature on random (kx, dipole, d)."""
    rng = np.random.default_rng(seed)
    spec = QuadratureSpec(rel_tol=1e-10)
    worst = 0.0
    for _ in range(samples):
        kx, d = rng.uniform(-20.0, 20.0), rng.uniform(0.05, 0.3)
        dip = random_dipole(rng)
        exact = ky_reduced_kernel(kx, dip, d)
        worst = max(worst, _relative(ky_reduced_kernel_numerical(kx, dip, d, spec).value, exact))
    return worst


def random_lossy_config(rng: np.random.Generator) -> tuple[AtomKinematics, DrudeMetal, TransitionDipole]:
    kin = AtomKinematics(omega0=rng.uniform(0.05, 0.5), d=rng.uniform(0.05, 0.2), v=rng.uniform(0.02, 0.1))
    return kin, DrudeMetal(gamma_c=rng.uniform(0.05, 0.5)), random_dipole(rng)


def measure_reduction_2d(samples: int = 20, seed: int = 2) -> float:
    """Worst relative gap between the Bessel-reduced and the (kx, ky) quadratures."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        kin, metal, dip = random_lossy_config(rng)
        reduced = decay_rates_lossy(kin, metal, dip)
        full = decay_rates_lossy_2d(kin, metal, dip)
        worst = max(worst, _relative(full.gamma_plus, reduced.gamma_plus))
        worst = max(worst, _relative(full.gamma_minus, reduced.gamma_minus))
        force = friction_force_lossy(kin, metal, dip, AtomState(0.0))
        force_2d = friction_force_lossy_2d(kin, metal, dip, AtomState(0.0))
        worst = max(worst, _relative(force_2d.excited_channel, force.excited_channel))
        worst = max(worst, _relative(force_2d.ground_channel, force.ground_channel))
    return worst


def measure_lossless_limit(gamma_c: float = 1e-4) -> float:
    """Gap between lossy results at tiny gamma_c and the lossless closed forms.

    Each gap is normalized by the dominant member of its pair (gamma_+/gamma_- or the two force
    channels), since the O(gamma_c) off-resonant background can exceed a percent of a channel
    that chirality suppresses by orders of magnitude.
    """
    metal = DrudeMetal(gamma_c=gamma_c)
    worst = 0.0
    for v in (0.02, 0.05, 0.1):
        kin = AtomKinematics(omega0=REFERENCE["omega0"], d=REFERENCE["d"], v=v)
        for dip in NAMED_DIPOLES.values():
            lossy = decay_rates_lossy(kin, metal, dip)
            exact = decay_rates_lossless(kin, dip)
            scale = max(exact.gamma_plus, exact.gamma_minus)
            worst = max(worst, abs(lossy.gamma_plus - exact.gamma_plus) / scale)
            worst = max(worst, abs(lossy.gamma_minus - exact.gamma_minus) / scale)

            force = friction_force_lossy(kin, metal, dip, AtomState(0.0))
            exact_force = friction_force_lossless(kin, dip, AtomState(0.0))
            scale = max(abs(exact_force.excited_channel), abs(exact_force.ground_channel))
            worst = max(worst, abs(force.excited_channel - exact_force.excited_channel) / scale)
            worst = max(worst, abs(force.ground_channel - exact_force.ground_channel) / scale)
    return worst


def measure_greens_symmetry(samples: int = 1000, seed: int = 3) -> float:
    """G(kx, i xi) against conj G(-kx, i xi)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        kx, xi, d = rng.uniform(-30.0, 30.0), rng.uniform(10 * POLE_EXCLUSION_RADIUS, 10.0), rng.uniform(0.05, 0.3)
        metal = DrudeMetal(gamma_c=rng.uniform(0.0, 0.5))
        forward = greens_kx_qs(kx, 1j * xi, metal, d)
        mirrored = np.conj(greens_kx_qs(-kx, 1j * xi, metal, d))
        scale = max(float(np.max(np.abs(forward))), 1e-300)
        worst = max(worst, float(np.max(np.abs(forward - mirrored))) / scale)
    return worst


def measure_conjugation_symmetry(samples: int = 200, seed: int = 4) -> float:
    """W(kx) for gamma* against W(-kx) for gamma."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        kx, d = rng.uniform(-30.0, 30.0), rng.uniform(0.05, 0.3)
        dip = random_dipole(rng)
        conjugate = TransitionDipole(*(c.conjugate() for c in dip.components))
        reference = ky_reduced_kernel(-kx, dip, d)
        if reference > 0:
            worst = max(worst, _relative(ky_reduced_kernel(kx, conjugate, d), reference))
    return worst


def measure_sign_violations(lossless_samples: int = 1000, lossy_samples: int = 30, seed: int = 5) -> float:
    """Number of configurations with a negative rate, a positive ground-state force or a non-negative steady state."""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(lossless_samples):
        kin = AtomKinematics(omega0=rng.uniform(0.0, 1.0), d=rng.uniform(0.02, 0.3), v=rng.uniform(0.005, 0.3))
        dip = random_dipole(rng)
        rates = decay_rates_lossless(kin, dip)
        violations += rates.gamma_plus < 0 or rates.gamma_minus < 0
        violations += friction_force_lossless(kin, dip, AtomState(0.0)).total > 0
        if not (rates.negligible_plus or rates.negligible_minus):
            violations += steady_state_force_lossless(kin, dip).total >= 0
    for _ in range(lossy_samples):
        kin, metal, dip = random_lossy_config(rng)
        rates = decay_rates_lossy(kin, metal, dip)
        violations += rates.gamma_plus < 0 or rates.gamma_minus < 0
        violations += friction_force_lossy(kin, metal, dip, AtomState(0.0)).total > 0
    return float(violations)


def measure_chirality_ratio() -> float:
    kin = AtomKinematics(**REFERENCE)
    ground_minus = friction_force_lossless(kin, NAMED_DIPOLES["gamma_minus"], AtomState(0.0)).total
    ground_plus = friction_force_lossless(kin, NAMED_DIPOLES["gamma_plus"], AtomState(0.0)).total
    return abs(ground_minus) / abs(ground_plus)


def measure_high_velocity_steady_state() -> float:
    rates = decay_rates_lossless(AtomKinematics(omega0=0.1, d=0.1, v=0.5), NAMED_DIPOLES["z"])
    return abs(rates.pe_infinity - 0.5)


def measure_velocity_scaling(d: float = 0.02, points: int = 400) -> float:
    """Relative distance between the grid argmax of the ground-state force over v and v_opt."""
    omega0 = REFERENCE["omega0"]
    v_opt = optimal_velocity(omega0, d)
    velocities = np.linspace(0.1 * v_opt, 3.0 * v_opt, points)
    forces = [
        abs(friction_force_lossless(AtomKinematics(omega0, d, float(v)), NAMED_DIPOLES["z"], AtomState(0.0)).total)
        for v in velocities
    ]
    return abs(float(velocities[int(np.argmax(forces))]) / v_opt - 1.0)


def measure_channel_swap(velocities: tuple[float, ...] = (0.02, 0.05, 0.1), gamma_c: float = 0.2) -> float:
    """Number of configurations where the dominant force channel fails to swap under gamma -> gamma*.

    gamma_- drags mostly through the ground channel and gamma_+ through the excited one, for the
    lossless metal at every velocity and for a lossy metal at the reference configuration.
    """
    models = [(SubstrateModel.lossless(), v) for v in velocities]
    models.append((SubstrateModel.drude(DrudeMetal(gamma_c=gamma_c)), REFERENCE["v"]))
    violations = 0
    for model, v in models:
        kin = AtomKinematics(omega0=REFERENCE["omega0"], d=REFERENCE["d"], v=v)
        minus = model.force(kin, NAMED_DIPOLES["gamma_minus"], AtomState(0.0))
        plus = model.force(kin, NAMED_DIPOLES["gamma_plus"], AtomState(0.0))
        violations += abs(minus.ground_channel) <= abs(minus.excited_channel)
        violations += abs(plus.excited_channel) <= abs(plus.ground_channel)
    return float(violations)


def measure_lossy_map_argmax(
    omega0_steps: int = 21,
    heights: tuple[float, ...] = (0.07, 0.1, 0.13, 0.16, 0.2, 0.24, 0.27, 0.3),
    v: float = 0.05,
    gamma_c: float = 0.2,
) -> float:
    """Number of heights whose ground-state force maximum over omega0 in [0, 1] is not the lowest bin."""
    metal = DrudeMetal(gamma_c=gamma_c)
    dip = NAMED_DIPOLES["gamma_minus"]
    misplaced = 0
    for d in heights:
        forces = [
            abs(friction_force_lossy(AtomKinematics(float(omega0), d, v), metal, dip, AtomState(0.0)).total)
            for omega0 in np.linspace(0.0, 1.0, omega0_steps)
        ]
        misplaced += int(np.argmax(forces)) != 0
    return float(misplaced)


def measure_dissipation_crossover(gamma_c: float = 0.2) -> float:
    """Violations of |F(lossy)| > |F(lossless)| at v = 0.01 and of the reverse at v = 0.1, for gamma = z."""
    lossy, lossless = SubstrateModel.drude(DrudeMetal(gamma_c=gamma_c)), SubstrateModel.lossless()
    violations = 0
    for v, dissipation_wins in ((0.01, True), (0.1, False)):
        kin = AtomKinematics(omega0=REFERENCE["omega0"], d=REFERENCE["d"], v=v)
        damped = abs(lossy.force(kin, NAMED_DIPOLES["z"], AtomState(0.0)).total)
        ideal = abs(lossless.force(kin, NAMED_DIPOLES["z"], AtomState(0.0)).total)
        violations += (damped > ideal) != dissipation_wins
    return float(violations)


def measure_trajectory_steady_state(relaxation_times: float = 20.0) -> float:
    """Worst relative gap between the trajectory force after 20 relaxation times and the steady-state force."""
    model = SubstrateModel.lossless()
    worst = 0.0
    for v in (0.02, 0.05, 0.1):
        kin = AtomKinematics(omega0=REFERENCE["omega0"], d=REFERENCE["d"], v=v)
        for name in ("z", "gamma_minus"):
            dip = NAMED_DIPOLES[name]
            horizon = relaxation_times / decay_rates_lossless(kin, dip).total
            steady = steady_state_force_lossless(kin, dip).total
            for pe0 in (0.0, 1.0):
                late = force_trajectory(kin, model, dip, pe0, [0.0, horizon])[-1]
                worst = max(worst, _relative(late.force.total, steady))
    return worst


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


class OracleCheck:
    def __init__(
        self,
        name: str,
        measure: Callable[..., float],
        tolerance: float,
        description: str = "",
        at_least: bool = False,
        quick: bool = True,
        **measure_kwargs,
    ) -> None:
        """Initialize an oracle check.

        Args:
            name (str): Short identifier shown in the tables.
            measure (Callable[..., float]): Returns the measured discrepancy (or ratio).
            tolerance (float): Upper bound on the measurement, or lower bound when at_least is set.
            description (str): One line describing the criterion.
            at_least (bool): Whether the measurement must reach the tolerance instead of staying below it.
            quick (bool): Whether the check belongs to the fast subset.
            **measure_kwargs: Keyword arguments forwarded to measure.
        """
        self.name = name
        self.measure = measure
        self.tolerance = tolerance
        self.description = description
        self.at_least = at_least
        self.quick = quick
        self.measure_kwargs = measure_kwargs

    def run(self) -> CheckOutcome:
        """Runs the measurement; an exception counts as a failure."""
        try:
            measured = float(self.measure(**self.measure_kwargs))
        except Exception as err:  # noqa: BLE001
            logger.error(f"Check {self.name} raised {type(err).__name__}: {err}")
            return CheckOutcome(self.name, False, math.nan, self.tolerance, detail=f"{type(err).__name__}: {err}")
        passed = measured >= self.tolerance if self.at_least else measured <= self.tolerance
        marker = "✅" if passed else "❌"
        logger.info(f"{marker} {self.name}: measured {measured:.3e} (tolerance {self.tolerance:.1e})")
        return CheckOutcome(self.name, passed, measured, self.tolerance)


class ValidationSuite:
    def __init__(self, checks: list[OracleCheck] = None, name: str = "") -> None:
        """Initialize a suite of oracle checks.

        Args:
            checks (list[OracleCheck]): Checks run in insertion order.
            name (str): The name of the suite.
        """
        logger.info(f"🔂 Initializing validation suite: {name}")
        self.name = name
        self.checks = checks or []

    def add_check(self, check: OracleCheck) -> None:
        logger.debug(f"Adding check {check.name} to the suite ➕")
        self.checks.append(check)

    def selected(self, quick: bool = False) -> list[OracleCheck]:
        return [check for check in self.checks if check.quick or not quick]

    def run(self, quick: bool = False) -> list[CheckOutcome]:
        """Runs every check (only the fast subset when quick is set)."""
        return [check.run() for check in self.selected(quick)]

    def tolerance_table(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "check": check.name,
                    "criterion": check.description,
                    "bound": ">=" if check.at_least else "<=",
                    "tolerance": check.tolerance,
                    "quick": check.quick,
                }
                for check in self.checks
            ],
        )

    @staticmethod
    def outcome_table(outcomes: list[CheckOutcome]) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "check": outcome.name,
                    "status": "PASS" if outcome.passed else "FAIL",
                    "measured": outcome.measured,
                    "tolerance": outcome.tolerance,
                    "detail": outcome.detail,
                }
                for outcome in outcomes
            ],
        )


def default_suite() -> ValidationSuite:
    """The release gate: every numerical oracle with its acceptance tolerance."""
    suite = ValidationSuite(name="qfriction")
    suite.add_check(
        OracleCheck("reflection_identity", measure_reflection_identity, 1e-12, "rational vs pole-form R, 1e4 points"),
    )
    suite.add_check(OracleCheck("bessel_goldens", measure_bessel_goldens, 1e-10, "K0, K1 vs ascending series"))
    suite.add_check(OracleCheck("bessel_recurrence", measure_bessel_recurrence, 1e-12, "K2 = K0 + 2 K1 / x"))
    suite.add_check(OracleCheck("ky_reduction", measure_ky_reduction, 1e-3, "closed-form W vs ky quadrature"))
    suite.add_check(
        OracleCheck("reduction_2d", measure_reduction_2d, 1e-3, "1D vs 2D lossy rates and force", quick=False),
    )
    suite.add_check(
        OracleCheck("lossless_limit", measure_lossless_limit, 1e-2, "gamma_c = 1e-4 vs closed forms", quick=False),
    )
    suite.add_check(OracleCheck("greens_symmetry", measure_greens_symmetry, 1e-10, "G(kx, i xi) = conj G(-kx, i xi)"))
    suite.add_check(
        OracleCheck("conjugation_symmetry", measure_conjugation_symmetry, 1e-12, "W(kx, gamma*) = W(-kx, gamma)"),
    )
    suite.add_check(
        OracleCheck("sign_invariants", measure_sign_violations, 0.0, "rates >= 0, ground force <= 0", quick=False),
    )
    suite.add_check(
        OracleCheck("chirality_ratio", measure_chirality_ratio, 10.0, "|F(gamma-)| / |F(gamma+)|", at_least=True),
    )
    suite.add_check(
        OracleCheck("steady_state_high_v", measure_high_velocity_steady_state, 0.05, "|pe_inf - 1/2| at v = 0.5"),
    )
    suite.add_check(OracleCheck("velocity_scaling", measure_velocity_scaling, 0.15, "argmax over v vs v_opt"))
    suite.add_check(
        OracleCheck("channel_swap", measure_channel_swap, 0.0, "dominant channel swaps under gamma -> gamma*"),
    )
    suite.add_check(
        OracleCheck(
            "lossy_map_argmax",
            measure_lossy_map_argmax,
            0.0,
            "argmax over omega0 in the lowest bin per d, gamma_c = 0.2",
            quick=False,
        ),
    )
    suite.add_check(
        OracleCheck(
            "dissipation_crossover",
            measure_dissipation_crossover,
            0.0,
            "gamma_c = 0.2 beats lossless at v = 0.01, not at v = 0.1",
        ),
    )
    suite.add_check(
        OracleCheck(
            "trajectory_steady_state",
            measure_trajectory_steady_state,
            1e-3,
            "F(t = 20 / (gamma_+ + gamma_-)) vs steady-state force",
        ),
    )
    return suite
