"""Command-line entry point.

    gmsurf solve CONFIG [--out DIR]
    gmsurf converge CONFIG --ladder 10 20 40 80 --reference 100 [--out DIR]
    gmsurf curvature-study [--out DIR] [--resolution N]
    gmsurf validate CONFIG

Outputs go to ``--out``, else ``$GMSURF_OUTPUT_DIR``, else ``./gmsurf_out``.
Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ..assembly import SolverError
from ..linsolve import SingularMatrixError
from ..nurbs import DomainError, GeometryError
from ..quadrature import AssemblyError
from .config import GridSpec, load_config, nondimensionalize
from .presets import ConfigError
from .studies import convergence_study, curvature_study, run_case

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "GMSURF_OUTPUT_DIR"

log = logging.getLogger("gmsurf")


def output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or "gmsurf_out")


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    inp = nondimensionalize(cfg)
    print(json.dumps({"name": cfg.name, "n_control_points": inp.curve.n,
                      "curve_length": inp.curve.length, "ell": inp.ell,
                      "surface_stiffness": inp.surface.stiffness,
                      "sigma0": inp.surface.sigma0}, indent=2))
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    res = run_case(cfg, output_dir(args.out))
    d = res.manifest["diagnostics"]
    log.info("%s: residual %.2e, condition %.2e", cfg.name, d["residual"],
             d["condition_1norm"])
    for k, v in res.files.items():
        print(f"{k}: {v}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    cfg = load_config(args.config)
    rep = convergence_study(cfg, args.ladder, args.reference, args.samples,
                            output_dir(args.out))
    for n, dof, es, ew in zip(rep.ladder, rep.dofs, rep.e_sigma, rep.e_omega):
        print(f"N_e={n:4d} dofs={dof:4d} E_sigma={es:.6e} E_omega={ew:.6e}")
    if rep.error:
        print(f"aborted: {rep.error}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_curvature(args) -> int:
    grid = GridSpec(args.half_width, args.resolution) if args.resolution > 0 else None
    res = curvature_study(output_dir(args.out), args.elements, grid=grid)
    for label, r in res.items():
        print(f"case {label}: {r.files['profile']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmsurf", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one case and write its outputs")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_solve)

    c = sub.add_parser("converge", help="mesh-convergence ladder against a reference mesh")
    c.add_argument("config")
    c.add_argument("--ladder", type=int, nargs="+", default=[10, 20, 40, 80])
    c.add_argument("--reference", type=int, default=100)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_converge)

    k = sub.add_parser("curvature-study", help="the four built-in surfaces of equal length")
    k.add_argument("--out")
    k.add_argument("--elements", type=int, default=50)
    k.add_argument("--resolution", type=int, default=201,
                   help="field grid points per side (0 skips the grid)")
    k.add_argument("--half-width", type=float, default=2.0)
    k.set_defaults(func=_cmd_curvature)

    v = sub.add_parser("validate", help="check a config and print the derived inputs")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GeometryError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SingularMatrixError, AssemblyError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
