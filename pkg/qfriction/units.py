from dataclasses import dataclass

from scipy import constants


@dataclass(frozen=True)
class UnitSystem:
    """Conversions between SI and the dimensionless units where omega_sp = 1 and 1/(4 pi eps0) = 1.

    Lengths are measured in c / omega_sp, velocities in c, times in 1 / Gamma_0 and forces in |F_0|.

    Attributes:
        omega_sp_si (float): Surface-plasmon angular frequency in rad/s.
        dipole_si (float | None): Transition-dipole magnitude |gamma| in C m, needed for rate and force scales.
    """

    omega_sp_si: float
    dipole_si: float | None = None

    def __post_init__(self) -> None:
        if not self.omega_sp_si > 0:
            raise ValueError(f"omega_sp_si must be positive, got {self.omega_sp_si}")
        if self.dipole_si is not None and not self.dipole_si > 0:
            raise ValueError(f"dipole_si must be positive, got {self.dipole_si}")

    @property
    def wavenumber_si(self) -> float:
        """omega_sp / c in 1/m."""
        return self.omega_sp_si / constants.c

    def frequency_from_si(self, omega: float) -> float:
        return omega / self.omega_sp_si

    def length_from_si(self, length: float) -> float:
        return length * self.wavenumber_si

    def velocity_from_si(self, velocity: float) -> float:
        return velocity / constants.c

    def parameter_from_si(self, name: str, value: float) -> float:
        """Converts one run parameter given in SI; pe is a probability and passes through.

        Args:
            name (str): One of omega0, gamma_c (rad/s), d (m), v (m/s) or pe.
            value (float): The SI value.
        """
        converters = {
            "omega0": self.frequency_from_si,
            "gamma_c": self.frequency_from_si,
            "d": self.length_from_si,
            "v": self.velocity_from_si,
            "pe": float,
        }
        if name not in converters:
            raise ValueError(f"No SI conversion for parameter {name!r}")
        return converters[name](value)

    def _require_dipole(self) -> float:
        if self.dipole_si is None:
            raise ValueError("dipole_si is required to convert rates and forces to SI")
        return self.dipole_si

    @property
    def rate_scale(self) -> float:
        """Gamma_0 = |gamma|^2 (omega_sp / c)^3 / (4 pi eps0 hbar), in 1/s."""
        dipole = self._require_dipole()
        return dipole**2 * self.wavenumber_si**3 / (4.0 * constants.pi * constants.epsilon_0 * constants.hbar)

    @property
    def force_scale(self) -> float:
        """|F_0| = |gamma|^2 (omega_sp / c)^4 / (4 pi eps0), in N."""
        dipole = self._require_dipole()
        return dipole**2 * self.wavenumber_si**4 / (4.0 * constants.pi * constants.epsilon_0)

    def header(self) -> dict[str, float]:
        """Scales recorded alongside results computed in these units."""
        scales = {"omega_sp_si": self.omega_sp_si, "length_scale_m": 1.0 / self.wavenumber_si}
        if self.dipole_si is not None:
            scales.update({"rate_scale_per_s": self.rate_scale, "force_scale_N": self.force_scale})
        return scales
