import math
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger

from qfriction.factory import ParameterFactory
from qfriction.friction import force_trajectory
from qfriction.polarization import TransitionDipole
from qfriction.quadrature import QuadratureError

FORCE_COLUMNS = ["F_total", "F_excited", "F_ground", "err"]


class SweepVariable(Enum):
    V = "v"
    GAMMA_C = "gamma_c"
    OMEGA0 = "omega0"
    D = "d"
    PE = "pe"

    @staticmethod
    def from_string(value: str) -> "SweepVariable":
        """Converts a parameter name to a SweepVariable.

        Args:
            value (str): One of v, gamma_c, omega0, d, pe.
        """
        try:
            return SweepVariable(value.strip().lower())
        except ValueError:
            choices = ", ".join(variable.value for variable in SweepVariable)
            raise ValueError(f"Unsupported sweep variable: {value!r} (expected one of {choices})")


class Spacing(Enum):
    LINEAR = "linear"
    LOG = "log"

    @staticmethod
    def from_string(value: str) -> "Spacing":
        aliases = {"lin": Spacing.LINEAR, "linear": Spacing.LINEAR, "log": Spacing.LOG}
        try:
            return aliases[value.strip().lower()]
        except KeyError:
            raise ValueError(f"Unsupported grid spacing: {value!r} (expected 'linear' or 'log')")


@dataclass(frozen=True)
class GridAxis:
    """A one-dimensional grid over one run parameter."""

    variable: SweepVariable
    start: float
    stop: float
    steps: int
    spacing: Spacing = Spacing.LINEAR

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError(f"A grid needs at least one point, got steps={self.steps}")
        if self.steps == 1 and self.start != self.stop:
            raise ValueError("A single-point grid needs start == stop")
        if self.steps > 1 and not self.start < self.stop:
            raise ValueError(f"Grid bounds must satisfy min < max, got [{self.start}, {self.stop}]")
        if self.spacing is Spacing.LOG and not self.start > 0:
            raise ValueError(f"A log grid needs a positive lower bound, got {self.start}")

    @classmethod
    def parse(cls, text: str) -> "GridAxis":
        """Parses 'var:min:max:steps[:log]'."""
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise ValueError(f"Expected 'var:min:max:steps[:log]', got {text!r}")
        try:
            start, stop, steps = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ValueError(f"Non-numeric bounds or steps in {text!r}")
        spacing = Spacing.from_string(parts[4]) if len(parts) == 5 else Spacing.LINEAR
        return cls(SweepVariable.from_string(parts[0]), start, stop, steps, spacing)

    def to_string(self) -> str:
        """The 'var:min:max:steps[:log]' form accepted by parse."""
        text = f"{self.variable.value}:{self.start!r}:{self.stop!r}:{self.steps}"
        return text + ":log" if self.spacing is Spacing.LOG else text

    def converted(self, convert: Callable[[str, float], float]) -> "GridAxis":
        """The same grid with both bounds passed through convert(variable name, value)."""
        name = self.variable.value
        return replace(self, start=convert(name, self.start), stop=convert(name, self.stop))

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.start])
        if self.spacing is Spacing.LOG:
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


def _check_lossless(params: dict[str, Any], swept: Iterable[SweepVariable] = ()) -> None:
    if not params.get("lossless"):
        return
    if (params.get("gamma_c") or 0.0) > 0:
        raise ValueError(f"lossless cannot be combined with gamma_c = {params['gamma_c']} > 0")
    if SweepVariable.GAMMA_C in swept:
        raise ValueError("Sweeping gamma_c contradicts the lossless flag")


@dataclass(frozen=True)
class SweepRequest:
    """One-parameter sweep of the friction force with every other parameter fixed."""

    axis: GridAxis
    dipole: TransitionDipole
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.axis.steps < 2:
            raise ValueError(f"A sweep needs at least two points, got steps={self.axis.steps}")
        _check_lossless(self.params, swept=[self.axis.variable])

    @property
    def variable(self) -> SweepVariable:
        return self.axis.variable


@dataclass(frozen=True)
class MapRequest:
    """Two-parameter grid (by default omega0 along x and d along y) of the friction force."""

    x_axis: GridAxis
    y_axis: GridAxis
    dipole: TransitionDipole
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.x_axis.variable is self.y_axis.variable:
            raise ValueError(f"Map axes must differ, both are {self.x_axis.variable.value}")
        _check_lossless(self.params, swept=[self.x_axis.variable, self.y_axis.variable])


@dataclass(frozen=True)
class _PointTask:
    params: dict[str, Any]
    dipole: TransitionDipole


def _evaluate_point(task: _PointTask) -> dict[str, float]:
    """Force at a single grid point; quadrature failures become nan rows."""
    params = task.params
    kin = ParameterFactory.kinematics(**params)
    model = ParameterFactory.model(**params)
    state = ParameterFactory.state(**params)
    try:
        force = model.force(kin, task.dipole, state)
    except QuadratureError as err:
        logger.warning(f"Quadrature failed at {kin}: {err}")
        return dict.fromkeys(FORCE_COLUMNS, math.nan)
    return {
        "F_total": force.total,
        "F_excited": force.excited_channel,
        "F_ground": force.ground_channel,
        "err": force.err_estimate,
    }


def _run_tasks(tasks: list[_PointTask], threads: int) -> list[dict[str, float]]:
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    if threads == 1 or len(tasks) < 2:
        return [_evaluate_point(task) for task in tasks]
    logger.info(f"Evaluating {len(tasks)} grid points on {threads} workers 📊")
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(_evaluate_point, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def count_failures(frame: pd.DataFrame) -> int:
    return int(frame["F_total"].isna().sum())


def run_sweep(request: SweepRequest, threads: int = 1) -> pd.DataFrame:
    """Evaluates the force along the sweep axis.

    Args:
        request (SweepRequest): The sweep definition.
        threads (int): Worker processes; results keep grid order.

    Returns:
        pd.DataFrame: Columns var, value, F_total, F_excited, F_ground, err.
    """
    name = request.variable.value
    values = request.axis.values()
    tasks = [_PointTask({**request.params, name: float(value)}, request.dipole) for value in values]
    # build every parameter set up front so an invalid grid fails before any quadrature
    for task in tasks:
        ParameterFactory.kinematics(**task.params)
        ParameterFactory.state(**task.params)
        ParameterFactory.model(**task.params)

    logger.info(f"Sweeping {name} over {len(values)} points 📊")
    rows = _run_tasks(tasks, threads)
    frame = pd.DataFrame(rows, columns=FORCE_COLUMNS)
    frame.insert(0, "value", values)
    frame.insert(0, "var", name)
    logger.info(f"Sweep over {name} done ✅")
    return frame


def run_map(request: MapRequest, threads: int = 1) -> pd.DataFrame:
    """Evaluates the force on a two-dimensional grid, x varying fastest.

    Returns:
        pd.DataFrame: Columns <x variable>, <y variable>, F_total.
    """
    x_name, y_name = request.x_axis.variable.value, request.y_axis.variable.value
    x_values, y_values = request.x_axis.values(), request.y_axis.values()
    grid = [(float(x), float(y)) for y in y_values for x in x_values]
    tasks = [_PointTask({**request.params, x_name: x, y_name: y}, request.dipole) for x, y in grid]
    for task in tasks:
        ParameterFactory.kinematics(**task.params)
        ParameterFactory.model(**task.params)

    logger.info(f"Computing a {len(x_values)}x{len(y_values)} map over ({x_name}, {y_name}) 📊")
    rows = _run_tasks(tasks, threads)
    frame = pd.DataFrame(
        {
            x_name: [x for x, _ in grid],
            y_name: [y for _, y in grid],
            "F_total": [row["F_total"] for row in rows],
        },
    )
    logger.info("Map done ✅")
    return frame


def run_trajectory(
    params: dict[str, Any],
    dipole: TransitionDipole,
    pe0: float,
    tmax: float,
    steps: int,
) -> pd.DataFrame:
    """Excitation probability and force on an evenly spaced time grid from 0 to tmax (units of 1/Gamma_0).

    Returns:
        pd.DataFrame: Columns t, pe, F_total, F_excited, F_ground, err.
    """
    if not tmax > 0:
        raise ValueError(f"tmax must be positive, got {tmax}")
    if steps < 2:
        raise ValueError(f"steps must be at least 2, got {steps}")
    kin = ParameterFactory.kinematics(**params)
    model = ParameterFactory.model(**params)
    times = np.linspace(0.0, tmax, steps)
    trajectory = force_trajectory(kin, model, dipole, pe0, times.tolist())
    rows = []
    for point in trajectory:
        rows.append(
            {
                "t": point.t,
                "pe": point.pe,
                "F_total": point.force.total,
                "F_excited": point.force.excited_channel,
                "F_ground": point.force.ground_channel,
                "err": point.force.err_estimate,
            },
        )
    return pd.DataFrame(rows)
