import math
import time
import unittest

import numpy as np

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
    optimal_frequency,
    optimal_velocity,
    plasmon_wavenumbers,
    steady_state_force_lossless,
)
from qfriction.material import DrudeMetal, im_reflection_real_axis
from qfriction.polarization import TransitionDipole, ky_reduced_kernel
from qfriction.quadrature import integrate_semi_infinite, locate_peaks


class TestParameters(unittest.TestCase):
    """Unit tests for the kinematics, state and value types."""

    def test_kinematics_validation(self):
        for omega0, d, v in ((-0.1, 0.1, 0.05), (0.1, 0.0, 0.05), (0.1, 0.1, 0.0), (0.1, 0.1, 1.0)):
            with self.assertRaises(ValueError):
                AtomKinematics(omega0=omega0, d=d, v=v)
        kin = AtomKinematics(omega0=0.1, d=0.1, v=0.05)
        self.assertAlmostEqual(kin.threshold, -2.0, places=12)
        self.assertEqual(kin.with_values(v=0.1).v, 0.1)

    def test_state_validation(self):
        with self.assertRaises(ValueError):
            AtomState(1.5)
        with self.assertRaises(ValueError):
            AtomState(-0.1)

    def test_force_composition(self):
        force = ForceValue.compose(0.25, excited=-4.0, ground=-8.0)
        self.assertEqual(force.total, -7.0)
        self.assertEqual(force.at(1.0).total, -4.0)

    def test_degenerate_rates(self):
        rates = DecayRates(0.0, 0.0)
        self.assertTrue(rates.degenerate)
        with self.assertRaises(DegenerateRatesError):
            rates.pe_infinity
        with self.assertRaises(ValueError):
            DecayRates(-1.0, 0.0)


class TestLosslessFriction(unittest.TestCase):
    """Unit tests for the closed-form lossless rates and forces."""

    def setUp(self) -> None:
        self.kin = AtomKinematics(omega0=0.1, d=0.1, v=0.05)
        self.z = TransitionDipole.linear("z")

    def test_plasmon_wavenumbers(self):
        kp_plus, kp_minus = plasmon_wavenumbers(self.kin)
        self.assertAlmostEqual(kp_plus, 18.0, places=10)
        self.assertAlmostEqual(kp_minus, -22.0, places=10)

    def test_reference_rates(self):
        rates = decay_rates_lossless(self.kin, self.z)
        self.assertAlmostEqual(rates.gamma_minus, 86.63, delta=0.05)
        self.assertAlmostEqual(rates.gamma_plus, 149.0, delta=0.5)
        self.assertAlmostEqual(rates.pe_infinity, 0.368, delta=2e-3)
        self.assertFalse(rates.negligible_minus)

    def test_force_channels(self):
        """F(pe=0) = k_P- gamma_- and F(pe=1) = -k_P+ gamma_+."""
        rates = decay_rates_lossless(self.kin, self.z)
        ground = friction_force_lossless(self.kin, self.z, AtomState(0.0))
        excited = friction_force_lossless(self.kin, self.z, AtomState(1.0))
        self.assertAlmostEqual(ground.total, -22.0 * rates.gamma_minus, places=9)
        self.assertAlmostEqual(excited.total, -18.0 * rates.gamma_plus, places=9)
        self.assertLess(ground.total, 0.0)

    def test_steady_state_is_composition_at_pe_infinity(self):
        steady = steady_state_force_lossless(self.kin, self.z)
        composed = friction_force_lossless(self.kin, self.z, AtomState(steady.pe))
        self.assertAlmostEqual(steady.total / composed.total, 1.0, delta=1e-12)
        self.assertLess(steady.total, 0.0)

    def test_low_velocity_suppression(self):
        rates = decay_rates_lossless(self.kin.with_values(v=0.005), self.z)
        self.assertLess(rates.gamma_minus, 1e-10)
        self.assertLess(rates.gamma_minus, 1e-12 * 86.63)

    def test_high_velocity_steady_state(self):
        rates = decay_rates_lossless(self.kin.with_values(v=0.5), self.z)
        self.assertAlmostEqual(rates.pe_infinity, 0.5, delta=0.05)

    def test_chirality(self):
        """gamma- rubs on its ground channel, gamma+ on its excited channel."""
        minus, plus = TransitionDipole.circular("-"), TransitionDipole.circular("+")
        ground_minus = friction_force_lossless(self.kin, minus, AtomState(0.0)).total
        ground_plus = friction_force_lossless(self.kin, plus, AtomState(0.0)).total
        self.assertGreater(abs(ground_minus) / abs(ground_plus), 100.0)
        self.assertGreater(abs(ground_minus), abs(friction_force_lossless(self.kin, minus, AtomState(1.0)).total))
        self.assertGreater(abs(friction_force_lossless(self.kin, plus, AtomState(1.0)).total), abs(ground_plus))

    def test_linear_polarization_ordering(self):
        x, y = TransitionDipole.linear("x"), TransitionDipole.linear("y")
        for v in np.linspace(0.01, 0.1, 10):
            kin = self.kin.with_values(v=float(v))
            fz, fx, fy = (abs(friction_force_lossless(kin, dip, AtomState(0.0)).total) for dip in (self.z, x, y))
            self.assertGreaterEqual(fz, fx)
            self.assertGreaterEqual(fx, fy)

    def test_signs_for_random_dipoles(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            components = rng.normal(size=3) + 1j * rng.normal(size=3)
            dip = TransitionDipole(*components)
            kin = AtomKinematics(omega0=rng.uniform(0, 1), d=rng.uniform(0.05, 0.3), v=rng.uniform(0.01, 0.3))
            rates = decay_rates_lossless(kin, dip)
            self.assertGreaterEqual(rates.gamma_plus, 0.0)
            self.assertGreaterEqual(rates.gamma_minus, 0.0)
            self.assertLessEqual(friction_force_lossless(kin, dip, AtomState(0.0)).total, 0.0)


class TestLossyFriction(unittest.TestCase):
    """Unit tests for the lossy quadratures."""

    def setUp(self) -> None:
        self.kin = AtomKinematics(omega0=0.1, d=0.1, v=0.05)
        self.z = TransitionDipole.linear("z")
        self.metal = DrudeMetal(gamma_c=0.2)

    def test_lossless_metal_is_rejected(self):
        with self.assertRaises(ValueError):
            decay_rates_lossy(self.kin, DrudeMetal(), self.z)
        with self.assertRaises(ValueError):
            friction_force_lossy(self.kin, DrudeMetal(), self.z, AtomState(0.0))

    def test_rates_and_ground_force(self):
        rates = decay_rates_lossy(self.kin, self.metal, self.z)
        self.assertGreater(rates.gamma_plus, 0.0)
        self.assertGreater(rates.gamma_minus, 0.0)
        self.assertLess(friction_force_lossy(self.kin, self.metal, self.z, AtomState(0.0)).total, 0.0)

    def test_weak_dissipation_matches_lossless(self):
        metal = DrudeMetal(gamma_c=1e-4)
        for dip in (self.z, TransitionDipole.linear("x")):
            lossy = decay_rates_lossy(self.kin, metal, dip)
            lossless = decay_rates_lossless(self.kin, dip)
            self.assertAlmostEqual(lossy.gamma_plus / lossless.gamma_plus, 1.0, delta=0.01)
            self.assertAlmostEqual(lossy.gamma_minus / lossless.gamma_minus, 1.0, delta=0.01)
            force = friction_force_lossy(self.kin, metal, dip, AtomState(0.0)).total
            reference = friction_force_lossless(self.kin, dip, AtomState(0.0)).total
            self.assertAlmostEqual(force / reference, 1.0, delta=0.01)

    def test_dissipation_crossover(self):
        """Dissipation wins at low velocity and loses near the resonant velocity."""
        lossless = SubstrateModel.lossless()
        lossy = SubstrateModel.drude(self.metal)
        ground = AtomState(0.0)
        for v, dissipation_wins in ((0.01, True), (0.1, False)):
            kin = self.kin.with_values(v=v)
            damped = abs(lossy.force(kin, self.z, ground).total)
            ideal = abs(lossless.force(kin, self.z, ground).total)
            self.assertEqual(damped > ideal, dissipation_wins, f"{v = }: lossy {damped:.4g}, lossless {ideal:.4g}")

    def test_reduced_and_unreduced_integrals_agree(self):
        reduced = decay_rates_lossy(self.kin, self.metal, self.z)
        unreduced = decay_rates_lossy_2d(self.kin, self.metal, self.z)
        self.assertAlmostEqual(unreduced.gamma_plus / reduced.gamma_plus, 1.0, delta=1e-3)
        self.assertAlmostEqual(unreduced.gamma_minus / reduced.gamma_minus, 1.0, delta=1e-3)

    def test_handedness_swap(self):
        """Conjugating the dipole is the same as reversing kx in the kernel."""
        minus, plus = TransitionDipole.circular("-"), TransitionDipole.circular("+")
        for kx in (-30.0, -2.5, 0.7, 18.0):
            self.assertAlmostEqual(ky_reduced_kernel(kx, plus, 0.1), ky_reduced_kernel(-kx, minus, 0.1), places=10)

    def test_suppressed_channel_gap_is_first_order_in_dissipation(self):
        """For gamma- the suppressed excited-state rate approaches the lossless value linearly in gamma_c."""
        dip = TransitionDipole.circular("-")
        exact = decay_rates_lossless(self.kin, dip).gamma_plus
        gaps = [
            abs(decay_rates_lossy(self.kin, DrudeMetal(gamma_c=gamma_c), dip).gamma_plus - exact) / exact
            for gamma_c in (1e-4, 1e-5)
        ]
        self.assertLess(gaps[1], 1e-2)
        self.assertAlmostEqual(gaps[0] / gaps[1], 10.0, delta=2.0)

    def test_panel_integrals_match_pointwise_quadrature(self):
        """The vectorized force agrees with a point-by-point adaptive quadrature of kx W(kx) Im R."""
        for kin, dip in (
            (self.kin, self.z),
            (AtomKinematics(omega0=0.4, d=0.2, v=0.02), TransitionDipole.circular("-")),
            (AtomKinematics(omega0=0.05, d=0.07, v=0.1), TransitionDipole.linear("x")),
        ):
            peaks = locate_peaks(self.metal, kin.omega0, kin.v)

            def integrand(kx: float, kin: AtomKinematics = kin, dip: TransitionDipole = dip) -> float:
                weight = kx * ky_reduced_kernel(kx, dip, kin.d)
                return weight * im_reflection_real_axis(self.metal, kin.omega0 + kx * kin.v) / math.pi

            decay = 1.0 / (2.0 * kin.d)
            above = integrate_semi_infinite(integrand, kin.threshold, "+", decay, peaks=peaks).value
            below = integrate_semi_infinite(integrand, kin.threshold, "-", decay, peaks=peaks).value
            force = friction_force_lossy(kin, self.metal, dip, AtomState(0.5))
            self.assertAlmostEqual(force.excited_channel / above, 1.0, delta=1e-6)
            self.assertAlmostEqual(force.ground_channel / below, 1.0, delta=1e-6)

    def test_single_force_is_fast(self):
        friction_force_lossy(self.kin, self.metal, self.z, AtomState(0.0))
        timings = []
        for _ in range(5):
            start = time.perf_counter()
            friction_force_lossy(self.kin, self.metal, self.z, AtomState(0.0))
            timings.append(time.perf_counter() - start)
        self.assertLess(min(timings), 0.01)

    def test_map_rows_fit_the_grid_budget(self):
        """A hundred lossy points over the default map region take under 0.3 s, i.e. 30 s for 100 x 100."""
        ground = AtomState(0.0)
        start = time.perf_counter()
        for omega0 in np.linspace(0.0, 1.0, 10):
            for d in np.linspace(0.07, 0.3, 10):
                kin = AtomKinematics(omega0=float(omega0), d=float(d), v=0.05)
                friction_force_lossy(kin, self.metal, self.z, ground)
        self.assertLess(time.perf_counter() - start, 0.3)


class TestSubstrateModel(unittest.TestCase):
    """Unit tests for the SubstrateModel dispatch."""

    def test_dispatch(self):
        kin = AtomKinematics(omega0=0.1, d=0.1, v=0.05)
        dip = TransitionDipole.linear("z")
        lossless = SubstrateModel.lossless()
        self.assertTrue(lossless.is_lossless)
        self.assertEqual(lossless.decay_rates(kin, dip), decay_rates_lossless(kin, dip))
        metal = DrudeMetal(gamma_c=0.2)
        lossy = SubstrateModel.drude(metal)
        self.assertFalse(lossy.is_lossless)
        self.assertEqual(lossy.describe()["model"], "drude")
        self.assertEqual(lossy.force(kin, dip, AtomState(0.3)), friction_force_lossy(kin, metal, dip, AtomState(0.3)))


class TestDynamics(unittest.TestCase):
    """Unit tests for the excitation dynamics."""

    def setUp(self) -> None:
        self.kin = AtomKinematics(omega0=0.1, d=0.1, v=0.05)
        self.dip = TransitionDipole.linear("z")
        self.rates = decay_rates_lossless(self.kin, self.dip)

    def test_boundary_values(self):
        self.assertEqual(excited_probability(0.0, 0.7, self.rates), 0.7)
        self.assertAlmostEqual(excited_probability(math.inf, 0.7, self.rates), self.rates.pe_infinity, places=14)
        with self.assertRaises(ValueError):
            excited_probability(-1.0, 0.7, self.rates)

    def test_degenerate_rates_raise(self):
        with self.assertRaises(DegenerateRatesError):
            excited_probability(1.0, 0.0, DecayRates(0.0, 0.0))

    def test_relaxation_from_either_side(self):
        model = SubstrateModel.lossless()
        late = 20.0 / self.rates.total
        from_ground = force_trajectory(self.kin, model, self.dip, 0.0, [0.0, late])
        from_excited = force_trajectory(self.kin, model, self.dip, 1.0, [0.0, late])
        self.assertLess(abs(from_ground[-1].pe - from_excited[-1].pe), 1e-8)
        steady = steady_state_force_lossless(self.kin, self.dip)
        self.assertAlmostEqual(from_ground[-1].force.total / steady.total, 1.0, delta=1e-3)
        self.assertEqual(from_excited[0].pe, 1.0)
        self.assertEqual(from_excited[0].force, friction_force_lossless(self.kin, self.dip, AtomState(1.0)))

    def test_unsorted_times_raise(self):
        with self.assertRaises(ValueError):
            force_trajectory(self.kin, SubstrateModel.lossless(), self.dip, 0.0, [1.0, 0.5])


class TestScalingLaws(unittest.TestCase):
    """Unit tests for the optimal velocity and frequency."""

    def test_reference_values(self):
        self.assertAlmostEqual(optimal_velocity(0.1, 0.1), 0.062857, places=6)
        self.assertAlmostEqual(optimal_velocity(0.1, 0.02), 0.012571, places=6)
        self.assertEqual(optimal_frequency(0.05, 0.1), 0.0)
        self.assertAlmostEqual(optimal_frequency(0.2, 0.1), 1.5, places=12)

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            optimal_velocity(0.1, 0.0)
        with self.assertRaises(ValueError):
            optimal_frequency(0.0, 0.1)

    def test_velocity_law_locates_the_maximum(self):
        dip = TransitionDipole.linear("z")
        velocities = np.geomspace(0.002, 0.05, 400)
        forces = [
            abs(friction_force_lossless(AtomKinematics(0.1, 0.02, float(v)), dip, AtomState(0.0)).total)
            for v in velocities
        ]
        best = velocities[int(np.argmax(forces))]
        self.assertAlmostEqual(best / optimal_velocity(0.1, 0.02), 1.0, delta=0.15)


if __name__ == "__main__":
    unittest.main()
