import unittest

from qfriction.factory import ParameterFactory
from qfriction.friction import AtomKinematics
from qfriction.polarization import TransitionDipole


class TestParameterFactory(unittest.TestCase):
    """Unit tests for the ParameterFactory class."""

    def setUp(self) -> None:
        self.params = {"omega0": 0.1, "d": 0.1, "v": 0.05, "pe": 0.0, "gamma_c": None, "threads": 4, "rel_tol": 1e-9}

    def test_create_filters_unrelated_keys(self):
        """Keys outside the constructor and None values are dropped."""
        kin = ParameterFactory.create(AtomKinematics, **self.params)
        self.assertEqual(kin, AtomKinematics(omega0=0.1, d=0.1, v=0.05))
        self.assertEqual(ParameterFactory.state(**self.params).pe, 0.0)
        self.assertEqual(ParameterFactory.metal(**self.params).gamma_c, 0.0)

    def test_invalid_values_propagate(self):
        with self.assertRaises(ValueError):
            ParameterFactory.kinematics(**{**self.params, "v": 1.5})

    def test_dipole_from_string(self):
        dip = ParameterFactory.dipole("0.7071067811865476, 0, -0.7071067811865476i")
        self.assertAlmostEqual(dip.spin_y, -1.0, places=12)

    def test_dipole_from_sequence(self):
        """Plain numbers and [re, im] pairs are both accepted."""
        self.assertEqual(ParameterFactory.dipole([0, 0, 1]), TransitionDipole.linear("z"))
        dip = ParameterFactory.dipole([[0.7071067811865476, 0.0], 0, [0.0, 0.7071067811865476]])
        self.assertAlmostEqual(dip.spin_y, 1.0, places=12)
        with self.assertRaises(ValueError):
            ParameterFactory.dipole([1, 0])

    def test_dipole_passthrough(self):
        dip = TransitionDipole.circular("+")
        self.assertIs(ParameterFactory.dipole(dip), dip)

    def test_model_selection(self):
        lossless = ParameterFactory.model(lossless=True, **self.params)
        self.assertTrue(lossless.is_lossless)
        lossy = ParameterFactory.model(**{**self.params, "gamma_c": 0.2})
        self.assertFalse(lossy.is_lossless)
        self.assertEqual(lossy.metal.gamma_c, 0.2)
        self.assertEqual(lossy.spec.rel_tol, 1e-9)

    def test_lossless_conflicts_with_gamma_c(self):
        with self.assertRaises(ValueError):
            ParameterFactory.model(lossless=True, **{**self.params, "gamma_c": 0.2})


if __name__ == "__main__":
    unittest.main()
