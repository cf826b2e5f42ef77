"""Command-line entry point: ecdg {run,converge,energy,longtime,list}."""
import argparse
import logging
import os
import sys

import numpy as np

from . import harness
from .config import COMMANDS, MESH_KINDS, RunConfig
from .errors import EcdgError, NumericalError, ValidationError
from .timestep import IntegratorSpec

DEFAULT_INTEGRATORS = {"run": "rk6", "converge": "rk6", "energy": "lw4", "longtime": "rk3"}


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per harness entry point."""
    parser = argparse.ArgumentParser(prog="ecdg", description="Energy-conserving DG experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file; flags override its values")
    common.add_argument("--example", help="example id, e.g. 4.1")
    common.add_argument("--flux", help=f"method or flux: {', '.join(harness.METHOD_FLAGS)}")
    common.add_argument("--k", type=int, help="polynomial degree")
    common.add_argument("--N", dest="n", help="cells per direction, comma-separated for converge")
    common.add_argument("--mesh", choices=MESH_KINDS, help="mesh kind")
    common.add_argument("--mesh-file", help="triangle mesh file (V/T format)")
    common.add_argument("--perturb", type=float, help="random node perturbation as a fraction of h")
    common.add_argument("--mesh-seed", type=int, help="seed of the mesh perturbation")
    common.add_argument("--ti", help="integrator: lw<order>, rk<r> or hybrid<r>")
    common.add_argument("--cfl", type=float, help="CFL number")
    common.add_argument("--dt", type=float, help="explicit time step")
    common.add_argument("--tfinal", type=float, help="final time")
    common.add_argument("--alpha", type=float, help="stabilization of the 1D acoustics flux")
    common.add_argument("--supersonic", action="store_true", default=None,
                        help="single-system supersonic 1D acoustics flux")
    common.add_argument("--out", help="output directory for CSV files")
    common.add_argument("--verbose", action="store_true", help="log progress")
    common.add_argument("--debug", action="store_true", help="log everything")
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {"run": "single run with final-time errors", "converge": "spatial convergence table",
             "energy": "energy time series", "longtime": "long-time dissipation and phase metrics",
             "list": "list examples, systems and fluxes"}
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=helps[command])
    return parser


def _configure_logging(args):
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")


def _load_config(args) -> RunConfig:
    config = RunConfig.read(args.config) if args.config else RunConfig()
    sizes = None if args.n is None else RunConfig.PARSERS["n"](args.n)
    config = config.merged(command=args.command, example=args.example, flux=args.flux, k=args.k, n=sizes,
                           mesh=args.mesh, mesh_file=args.mesh_file, perturb=args.perturb,
                           mesh_seed=args.mesh_seed, ti=args.ti, cfl=args.cfl, dt=args.dt,
                           tfinal=args.tfinal, alpha=args.alpha, supersonic=args.supersonic, out=args.out)
    return config.validate()


def _output(config: RunConfig, name: str):
    if not config.out:
        return None
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def _tag(config: RunConfig):
    return f"{config.example}_{config.flux}".replace(".", "_")


def _run(config: RunConfig):
    sc = harness.scenario(config.example)
    k = sc.degree if config.k is None else config.k
    mesh = harness.build_mesh(sc, (config.n or sc.sizes)[0], config.mesh, config.perturb, config.mesh_seed,
                              config.mesh_file)
    spec = IntegratorSpec.parse(config.ti or DEFAULT_INTEGRATORS["run"], config.dt,
                                sc.cfl if config.cfl is None else config.cfl)
    result = harness.simulate(sc, config.flux, k, mesh, spec, config.tfinal, config.alpha, config.supersonic)
    for name, error in result.errors().items():
        print(f"{name}\t{error:.6e}")


def _converge(config: RunConfig):
    if config.mesh_file:
        raise ValidationError("converge builds one mesh per size; --mesh-file needs run, energy or longtime")
    sc = harness.scenario(config.example)
    k = sc.degree if config.k is None else config.k
    table = harness.run_convergence(config.example, config.flux, k, config.n or None,
                                    integrator=config.ti or DEFAULT_INTEGRATORS["converge"],
                                    seed=config.mesh_seed, perturb=config.perturb, mesh_kind=config.mesh,
                                    cfl=config.cfl, t_final=config.tfinal, dt=config.dt, alpha=config.alpha,
                                    supersonic=config.supersonic)
    filename = _output(config, f"convergence_{_tag(config)}_k{k}.csv")
    text = table.to_csv(filename)
    if filename:
        print(table)
    else:
        print(text, end="")


def _energy(config: RunConfig):
    _, series = harness.run_energy(config.example, config.flux, config.k, (config.n or [None])[0],
                                   config.ti or DEFAULT_INTEGRATORS["energy"], cfl=config.cfl, dt=config.dt,
                                   t_final=config.tfinal, seed=config.mesh_seed, perturb=config.perturb,
                                   mesh_kind=config.mesh, alpha=config.alpha, supersonic=config.supersonic,
                                   mesh_file=config.mesh_file)
    filename = _output(config, f"energy_{_tag(config)}.csv")
    text = series.to_csv(filename)
    if not filename:
        print(text, end="")
    print(f"energy drift {series.energy_drift:.3e}, bilinear drift {series.bilinear_drift:.3e}",
          file=sys.stderr if not filename else sys.stdout)


def _longtime(config: RunConfig):
    result = harness.run_longtime(config.example, config.flux, config.ti or DEFAULT_INTEGRATORS["longtime"],
                                  config.tfinal, config.k, (config.n or [None])[0], config.cfl, config.mesh,
                                  seed=config.mesh_seed, perturb=config.perturb, dt=config.dt,
                                  alpha=config.alpha, supersonic=config.supersonic,
                                  mesh_file=config.mesh_file)
    result.cut.to_csv(_output(config, f"cut_{_tag(config)}.csv"))
    result.series.to_csv(_output(config, f"energy_{_tag(config)}.csv"))
    metrics = result.metrics
    print(f"amplitude_ratio\t{metrics.amplitude_ratio:.6f}")
    print(f"phase_shift\t{metrics.phase_shift:.6e}")
    print(f"energy_drift\t{metrics.energy_drift:.6e}")


def _list(_config: RunConfig):
    for section, entries in harness.describe_catalog().items():
        print(f"{section}:")
        for entry in entries:
            print(f"  {entry}")


COMMAND_HANDLERS = {"run": _run, "converge": _converge, "energy": _energy, "longtime": _longtime,
                    "list": _list}


def dispatch(config: RunConfig):
    """Runs the handler of {config.command}, reporting numpy failures as NumericalError."""
    try:
        COMMAND_HANDLERS[config.command](config)
    except (np.linalg.LinAlgError, FloatingPointError) as e:
        raise NumericalError(f"{type(e).__name__}: {e}") from e


def main(argv=None) -> int:
    """Runs one subcommand; returns 0 on success, 1 on failures, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    _configure_logging(args)
    try:
        config = _load_config(args)
        dispatch(config)
    except (EcdgError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
