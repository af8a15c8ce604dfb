import inspect
from collections.abc import Sequence
from typing import Any, TypeVar

from loguru import logger

from qfriction.friction import AtomKinematics, AtomState, SubstrateModel
from qfriction.material import DrudeMetal
from qfriction.polarization import TransitionDipole
from qfriction.quadrature import QuadratureSpec

T = TypeVar("T")


class ParameterFactory:
    @staticmethod
    def create(cls: type[T], **params: Any) -> T:
        """Create a parameter object, automatically filtering params based on the constructor signature.

        Args:
            cls (type): The dataclass (or any class) to instantiate.
            **params: A flat dictionary of run parameters, possibly holding unrelated keys.

        Returns:
            An instance of cls built from the accepted keys.
        """
        constructor_params = inspect.signature(cls).parameters
        filtered = {key: value for key, value in params.items() if key in constructor_params and value is not None}
        return cls(**filtered)

    @staticmethod
    def kinematics(**params: Any) -> AtomKinematics:
        """Create AtomKinematics from omega0, d and v."""
        return ParameterFactory.create(AtomKinematics, **params)

    @staticmethod
    def state(**params: Any) -> AtomState:
        """Create AtomState from pe."""
        return ParameterFactory.create(AtomState, **params)

    @staticmethod
    def metal(**params: Any) -> DrudeMetal:
        """Create DrudeMetal from omega_sp and gamma_c."""
        return ParameterFactory.create(DrudeMetal, **params)

    @staticmethod
    def quadrature_spec(**params: Any) -> QuadratureSpec:
        """Create QuadratureSpec from rel_tol, abs_tol, max_subdivisions and peak_padding."""
        return ParameterFactory.create(QuadratureSpec, **params)

    @staticmethod
    def dipole(gamma: "str | Sequence[complex] | TransitionDipole") -> TransitionDipole:
        """Create a TransitionDipole from its text form, a 3-sequence or an existing dipole."""
        if isinstance(gamma, TransitionDipole):
            return gamma
        if isinstance(gamma, str):
            return TransitionDipole.from_string(gamma)
        components = list(gamma)
        if len(components) != 3:
            raise ValueError(f"A dipole needs three components, got {len(components)}")
        # JSON configs store complex numbers as [re, im] pairs
        parsed = [complex(*c) if isinstance(c, list | tuple) else complex(c) for c in components]
        return TransitionDipole(*parsed)

    @staticmethod
    def model(lossless: bool = False, **params: Any) -> SubstrateModel:
        """Create the substrate model; lossless excludes a positive gamma_c.

        Raises:
            ValueError: If lossless is requested together with gamma_c > 0.
        """
        gamma_c = params.get("gamma_c") or 0.0
        if lossless and gamma_c > 0:
            raise ValueError(f"--lossless cannot be combined with gamma_c = {gamma_c} > 0")
        metal = ParameterFactory.metal(**{**params, "gamma_c": 0.0 if lossless else gamma_c})
        spec = ParameterFactory.quadrature_spec(**params)
        model = SubstrateModel.drude(metal, spec)
        logger.debug(f"substrate model: {model.describe()}")
        return model
