import math
import unittest

import numpy as np

from qfriction.material import (
    DrudeMetal,
    PoleError,
    delta_limit_weight,
    im_reflection_real_axis,
    on_imaginary_axis,
    permittivity,
    reflection,
    reflection_pole_form,
)


class TestDrudeMetal(unittest.TestCase):
    """Unit tests for the DrudeMetal parameters."""

    def test_defaults_are_lossless(self):
        metal = DrudeMetal()
        self.assertTrue(metal.is_lossless)
        self.assertEqual(metal.omega_sp_prime, 1.0)

    def test_poles_sit_in_the_lower_half_plane(self):
        """Poles of R at +-omega_sp' - i gamma_c / 2."""
        metal = DrudeMetal(gamma_c=0.2)
        plus, minus = metal.poles
        self.assertAlmostEqual(plus.real, math.sqrt(0.99), places=14)
        self.assertAlmostEqual(minus.real, -math.sqrt(0.99), places=14)
        self.assertAlmostEqual(plus.imag, -0.1, places=14)
        self.assertAlmostEqual(minus.imag, -0.1, places=14)

    def test_invalid_parameters_raise(self):
        with self.assertRaises(ValueError):
            DrudeMetal(gamma_c=-0.1)
        with self.assertRaises(ValueError):
            DrudeMetal(gamma_c=2.0)
        with self.assertRaises(ValueError):
            DrudeMetal(omega_sp=0.0)


class TestResponseFunctions(unittest.TestCase):
    """Unit tests for the permittivity and the reflection coefficient."""

    def setUp(self) -> None:
        self.metal = DrudeMetal(gamma_c=0.2)

    def test_permittivity_below_resonance(self):
        eps = permittivity(self.metal, 0.5)
        self.assertAlmostEqual(eps.real, -5.89655, places=5)
        self.assertAlmostEqual(eps.imag, 2.75862, places=5)

    def test_reflection_below_resonance(self):
        r = reflection(self.metal, 0.5)
        self.assertAlmostEqual(r.real, -1.31004, places=5)
        self.assertAlmostEqual(r.imag, -0.174672, places=6)

    def test_rational_and_pole_forms_agree(self):
        """Both forms agree to 1e-12 away from the singular points."""
        rng = np.random.default_rng(11)
        singular = [*self.metal.poles, 0.0, -0.2j]
        checked = 0
        while checked < 1000:
            omega = complex(rng.uniform(-3, 3), rng.uniform(-1, 1))
            if min(abs(omega - point) for point in singular) < 1e-2:
                continue
            rational = reflection(self.metal, omega)
            pole_form = reflection_pole_form(self.metal, omega)
            self.assertLessEqual(abs(rational - pole_form) / abs(pole_form), 1e-12)
            checked += 1

    def test_reflection_on_imaginary_axis_is_real(self):
        for xi in (0.01, 0.5, 3.0):
            self.assertAlmostEqual(reflection(self.metal, 1j * xi).imag, 0.0, places=14)
            self.assertLess(on_imaginary_axis(self.metal, xi), 0.0)

    def test_static_limit(self):
        """R tends to -1 as the frequency goes to zero."""
        self.assertAlmostEqual(reflection(self.metal, 1e-6).real, -1.0, places=4)

    def test_poles_raise(self):
        with self.assertRaises(PoleError):
            reflection(self.metal, self.metal.poles[0])
        with self.assertRaises(PoleError):
            permittivity(self.metal, 0.0)
        with self.assertRaises(ZeroDivisionError):
            reflection_pole_form(self.metal, self.metal.poles[1])

    def test_imaginary_part_on_real_axis(self):
        metal = DrudeMetal(gamma_c=0.1)
        self.assertAlmostEqual(im_reflection_real_axis(metal, 0.5), -0.0884956, places=7)
        for omega in (-2.0, -0.7, 0.3, 1.4):
            self.assertAlmostEqual(im_reflection_real_axis(metal, omega), reflection(metal, omega).imag, places=12)

    def test_imaginary_part_sign(self):
        """Im R < 0 for positive and > 0 for negative frequencies."""
        self.assertLess(im_reflection_real_axis(self.metal, 0.8), 0.0)
        self.assertGreater(im_reflection_real_axis(self.metal, -0.8), 0.0)

    def test_lossless_imaginary_part(self):
        lossless = DrudeMetal()
        self.assertEqual(im_reflection_real_axis(lossless, 0.5), 0.0)
        with self.assertRaises(PoleError):
            im_reflection_real_axis(lossless, 1.0)


class TestDeltaLimit(unittest.TestCase):
    """Unit tests for the weak-dissipation limit of Im g."""

    @staticmethod
    def phi(omega: float) -> float:
        return math.exp(-((omega - 1.0) ** 2))

    def test_converges_to_pi_phi(self):
        """The weight approaches pi phi(omega_sp) with an error of order gamma_c."""
        errors = []
        for gamma_c in (1e-2, 1e-3, 1e-4):
            weight = delta_limit_weight(DrudeMetal(gamma_c=gamma_c), self.phi)
            error = abs(weight.value / (math.pi * self.phi(1.0)) - 1.0)
            self.assertLess(error, 10 * gamma_c)
            errors.append(error)
        self.assertLess(errors[1], errors[0])
        self.assertLess(errors[2], errors[1])

    def test_lossless_metal_raises(self):
        with self.assertRaises(PoleError):
            delta_limit_weight(DrudeMetal(), self.phi)

    def test_bad_window_raises(self):
        with self.assertRaises(ValueError):
            delta_limit_weight(DrudeMetal(gamma_c=0.01), self.phi, half_width=2.0)


if __name__ == "__main__":
    unittest.main()
