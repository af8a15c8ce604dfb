import unittest

from scipy import constants

from qfriction.units import UnitSystem


class TestUnitSystem(unittest.TestCase):
    """Unit tests for the UnitSystem class."""

    def setUp(self) -> None:
        self.units = UnitSystem(omega_sp_si=1.4e16, dipole_si=1e-29)

    def test_natural_scales_map_to_one(self):
        self.assertAlmostEqual(self.units.frequency_from_si(1.4e16), 1.0, places=14)
        self.assertAlmostEqual(self.units.velocity_from_si(constants.c), 1.0, places=14)
        self.assertAlmostEqual(self.units.length_from_si(constants.c / 1.4e16), 1.0, places=14)

    def test_run_parameters_by_name(self):
        self.assertAlmostEqual(self.units.parameter_from_si("gamma_c", 0.2 * 1.4e16), 0.2, places=14)
        self.assertAlmostEqual(self.units.parameter_from_si("omega0", 1.4e15), 0.1, places=14)
        self.assertAlmostEqual(self.units.parameter_from_si("v", 0.05 * constants.c), 0.05, places=14)
        self.assertEqual(self.units.parameter_from_si("pe", 0.3), 0.3)
        with self.assertRaises(ValueError):
            self.units.parameter_from_si("tmax", 1.0)

    def test_force_to_rate_ratio(self):
        """|F_0| / Gamma_0 = hbar omega_sp / c."""
        ratio = self.units.force_scale / self.units.rate_scale
        self.assertAlmostEqual(ratio / (constants.hbar * 1.4e16 / constants.c), 1.0, places=12)

    def test_scales_need_a_dipole(self):
        units = UnitSystem(omega_sp_si=1.4e16)
        with self.assertRaises(ValueError):
            units.rate_scale
        self.assertNotIn("force_scale_N", units.header())
        self.assertIn("force_scale_N", self.units.header())

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            UnitSystem(omega_sp_si=0.0)
        with self.assertRaises(ValueError):
            UnitSystem(omega_sp_si=1.0, dipole_si=-1.0)


if __name__ == "__main__":
    unittest.main()
