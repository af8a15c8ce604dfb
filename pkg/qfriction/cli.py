import argparse
import sys
from pathlib import Path
from typing import Any

from loguru import logger

from qfriction.factory import ParameterFactory
from qfriction.friction import plasmon_wavenumbers
from qfriction.material import PoleError
from qfriction.quadrature import QuadratureError
from qfriction.records import dumps, load_json, write_table
from qfriction.sweeps import (
    FORCE_COLUMNS,
    GridAxis,
    MapRequest,
    SweepRequest,
    SweepVariable,
    count_failures,
    run_map,
    run_sweep,
    run_trajectory,
)
from qfriction.units import UnitSystem
from qfriction.validation import default_suite

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# grid options parsed by each subcommand
GRID_KEYS = {"force-sweep": ("sweep",), "map": ("x_axis", "y_axis")}
# fixed parameters read in SI units when --omega-sp-si is given
SI_PARAMETERS = ("omega0", "d", "v", "gamma_c")

DEFAULTS: dict[str, Any] = {
    "omega0": 0.1,
    "d": 0.1,
    "v": 0.05,
    "gamma_c": 0.0,
    "lossless": False,
    "gamma": "0,0,1",
    "pe": 0.0,
    "pe0": 0.0,
    "sweep": None,
    "rel_tol": 1e-8,
    "threads": 1,
    "format": None,
    "out": None,
    "tmax": None,
    "steps": 101,
    "x_axis": "omega0:0:1:100",
    "y_axis": "d:0.07:0.3:100",
    "omega_sp_si": None,
    "dipole_si": None,
}


def _common_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    physics = parent.add_argument_group("physical parameters (dimensionless unless --omega-sp-si is given)")
    physics.add_argument("--omega0", type=float, default=None, help="transition frequency (default 0.1)")
    physics.add_argument("--d", type=float, default=None, help="height above the surface (default 0.1)")
    physics.add_argument("--v", type=float, default=None, help="velocity; negative values use the mirror image")
    physics.add_argument("--gamma-c", dest="gamma_c", type=float, default=None, help="Drude collision rate")
    physics.add_argument("--lossless", action="store_true", default=None, help="lossless Drude metal")
    physics.add_argument("--gamma", default=None, help='transition dipole "gx,gy,gz", e.g. "0.7071,0,-0.7071i"')
    physics.add_argument("--pe", type=float, default=None, help="excited-state probability (default 0)")
    physics.add_argument("--omega-sp-si", dest="omega_sp_si", type=float, default=None, help="omega_sp in rad/s")
    physics.add_argument("--dipole-si", dest="dipole_si", type=float, default=None, help="|gamma| in C m")

    run = parent.add_argument_group("run options")
    run.add_argument("--config", default=None, help="JSON file with the same keys as the flags")
    run.add_argument("--rel-tol", dest="rel_tol", type=float, default=None, help="relative quadrature tolerance")
    run.add_argument("--threads", type=int, default=None, help="worker processes for grids")
    run.add_argument("--format", choices=["csv", "json"], default=None, help="output format")
    run.add_argument("--out", default=None, help="output file (default stdout)")
    run.add_argument("--verbose", "-v", action="store_true", help="debug logging on stderr")
    run.add_argument("--log-file", dest="log_file", default=None, help="also log to this file")
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the force-sweep, evolve, map, rates and validate subcommands."""
    parent = _common_parser()
    parser = argparse.ArgumentParser(
        prog="qfriction",
        description="Quantum friction on a two-level atom moving above a Drude metal.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sweep = subparsers.add_parser("force-sweep", parents=[parent], help="friction force along one parameter")
    sweep.add_argument("--sweep", default=None, help="var:min:max:steps[:log] with var in v, gamma_c, omega0, d, pe")
    sweep.set_defaults(handler=cmd_force_sweep)

    evolve = subparsers.add_parser("evolve", parents=[parent], help="population and force versus time")
    evolve.add_argument("--pe0", type=float, default=None, help="excited-state probability at t = 0")
    evolve.add_argument("--tmax", type=float, default=None, help="final time in 1/Gamma_0 (default 10 lifetimes)")
    evolve.add_argument("--steps", type=int, default=None, help="number of time points")
    evolve.set_defaults(handler=cmd_evolve)

    density = subparsers.add_parser("map", parents=[parent], help="force on a two-parameter grid")
    density.add_argument("--x-axis", dest="x_axis", default=None, help="var:min:max:steps (default omega0:0:1:100)")
    density.add_argument("--y-axis", dest="y_axis", default=None, help="var:min:max:steps (default d:0.07:0.3:100)")
    density.set_defaults(handler=cmd_map)

    rates = subparsers.add_parser("rates", parents=[parent], help="decay rates and steady state as JSON")
    rates.set_defaults(handler=cmd_rates)

    validate = subparsers.add_parser("validate", parents=[parent], help="run the numerical oracle suite")
    validate.add_argument("--list", dest="list_only", action="store_true", help="print the tolerance table only")
    validate.add_argument("--quick", action="store_true", help="skip the slow quadrature oracles")
    validate.set_defaults(handler=cmd_validate)
    return parser


def configure_logging(verbose: bool = False, log_file: str | None = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "WARNING")
    if log_file:
        logger.add(log_file, level="DEBUG")


def resolve_params(args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then the JSON config, then explicit flags."""
    params = dict(DEFAULTS)
    if getattr(args, "config", None):
        config = load_json(args.config)
        unknown = sorted(set(config) - set(DEFAULTS))
        if unknown:
            raise ValueError(f"Unknown configuration keys: {', '.join(unknown)}")
        params.update(config)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


class RunContext:
    """Resolved parameters and grids of one invocation, in dimensionless units with v > 0."""

    def __init__(self, params: dict[str, Any], command: str) -> None:
        self.command = command
        self.units = None
        self.axes = {key: GridAxis.parse(params[key]) for key in GRID_KEYS.get(command, ()) if params.get(key)}
        if params.get("omega_sp_si"):
            self.units = UnitSystem(params["omega_sp_si"], params.get("dipole_si"))
            convert = self.units.parameter_from_si
            params = {**params, **{name: convert(name, params[name]) for name in SI_PARAMETERS}}
            self.axes = {key: axis.converted(convert) for key, axis in self.axes.items()}
            params.update({key: axis.to_string() for key, axis in self.axes.items()})
        self.dipole = ParameterFactory.dipole(params["gamma"])
        self.force_sign = 1.0
        sweeps_velocity = False
        for key, axis in self.axes.items():
            if axis.variable is not SweepVariable.V:
                continue
            sweeps_velocity = True
            if not axis.start > 0:
                raise ValueError(
                    f"Velocity grids must be positive, got {key} = {params[key]!r}; sweep |v| instead "
                    "and flip the sign of gamma_x, the mirror image of a negative velocity",
                )
        if not sweeps_velocity and params["v"] < 0:
            logger.info("Negative velocity: using the mirror image (v, gamma_x) -> (-v, -gamma_x)")
            params = {**params, "v": -params["v"]}
            self.dipole = self.dipole.mirrored()
            self.force_sign = -1.0
        if params["lossless"] and (params.get("gamma_c") or 0.0) > 0:
            raise ValueError(f"--lossless cannot be combined with --gamma-c {params['gamma_c']}")
        self.params = params

    def header(self) -> dict[str, Any]:
        header = {"command": self.command}
        header.update({key: value for key, value in self.params.items() if key not in ("gamma", "out", "threads")})
        header["gamma"] = self.dipole.to_string()
        header["force_sign"] = self.force_sign
        if self.units:
            header.update(self.units.header())
        return header

    def signed(self, frame: Any, columns: list[str]) -> Any:
        if self.force_sign < 0:
            for column in columns:
                if column in frame:
                    frame[column] = -frame[column]
        return frame


def _emit_table(context: RunContext, frame: Any, default_format: str = "csv") -> None:
    fmt = context.params.get("format") or default_format
    write_table(frame, context.header(), fmt=fmt, out=context.params.get("out"))


def _finish(frame: Any) -> int:
    failures = count_failures(frame)
    if failures:
        logger.error(f"{failures} grid points failed to converge and were written as nan")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_force_sweep(args: argparse.Namespace) -> int:
    context = RunContext(resolve_params(args), "force-sweep")
    if not context.params.get("sweep"):
        raise ValueError("force-sweep needs --sweep var:min:max:steps[:log]")
    request = SweepRequest(
        axis=context.axes["sweep"],
        dipole=context.dipole,
        params=context.params,
    )
    frame = context.signed(run_sweep(request, threads=int(context.params["threads"])), FORCE_COLUMNS[:3])
    _emit_table(context, frame)
    return _finish(frame)


def cmd_map(args: argparse.Namespace) -> int:
    context = RunContext(resolve_params(args), "map")
    request = MapRequest(
        x_axis=context.axes["x_axis"],
        y_axis=context.axes["y_axis"],
        dipole=context.dipole,
        params=context.params,
    )
    frame = context.signed(run_map(request, threads=int(context.params["threads"])), ["F_total"])
    _emit_table(context, frame)
    return _finish(frame)


def cmd_evolve(args: argparse.Namespace) -> int:
    context = RunContext(resolve_params(args), "evolve")
    params = context.params
    tmax = params.get("tmax")
    if tmax is None:
        model = ParameterFactory.model(**params)
        rates = model.decay_rates(ParameterFactory.kinematics(**params), context.dipole)
        tmax = 10.0 / rates.total if rates.total > 0 else 1.0
        params["tmax"] = tmax
        logger.info(f"tmax defaulting to ten relaxation times: {tmax:.6g}")
    frame = run_trajectory(params, context.dipole, float(params["pe0"]), float(tmax), int(params["steps"]))
    frame = context.signed(frame, FORCE_COLUMNS[:3])
    _emit_table(context, frame)
    return EXIT_OK


def cmd_rates(args: argparse.Namespace) -> int:
    context = RunContext(resolve_params(args), "rates")
    params = context.params
    kin = ParameterFactory.kinematics(**params)
    model = ParameterFactory.model(**params)
    rates = model.decay_rates(kin, context.dipole)
    k_plus, k_minus = plasmon_wavenumbers(kin, model.metal.omega_sp)
    payload = {
        "gamma_plus": rates.gamma_plus,
        "gamma_minus": rates.gamma_minus,
        "pe_infinity": None if rates.degenerate else rates.pe_infinity,
        "k_p_plus": context.force_sign * k_plus,
        "k_p_minus": context.force_sign * k_minus,
        "negligible_plus": rates.negligible_plus,
        "negligible_minus": rates.negligible_minus,
        "err": rates.err_estimate,
        "parameters": context.header(),
    }
    for name in ("plus", "minus"):
        if payload[f"negligible_{name}"]:
            logger.warning(f"gamma_{name} is exponentially negligible")
    text = dumps(payload) + "\n"
    if params.get("out"):
        Path(params["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    suite = default_suite()
    if args.list_only:
        print(suite.tolerance_table().to_string(index=False))
        return EXIT_OK
    outcomes = suite.run(quick=args.quick)
    print(suite.outcome_table(outcomes).to_string(index=False))
    failed = [outcome.name for outcome in outcomes if not outcome.passed]
    if failed:
        logger.error(f"Validation failed: {', '.join(failed)}")
        return EXIT_VALIDATION_FAILED
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Entry point of the qfriction command; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.log_file)
    try:
        return args.handler(args)
    except QuadratureError as err:
        logger.error(f"Numerical failure: {err}")
        return EXIT_NUMERICAL
    except (ValueError, PoleError) as err:
        logger.error(f"Invalid request: {err}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
