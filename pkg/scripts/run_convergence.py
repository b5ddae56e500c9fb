"""Mesh-convergence ladder for the circular-arc benchmark, plus the
normalised residual of both integral equations at 50 off-collocation
points for each mesh."""
import argparse
from pathlib import Path

import numpy as np

from gmsurf import solve
from gmsurf.assembly import Discretization
from gmsurf.fields import bie_residual
from gmsurf.harness.config import nondimensionalize
from gmsurf.harness.studies import benchmark_arc, convergence_study, write_csv


def residuals(n_elements, grading, points):
    inp = nondimensionalize(benchmark_arc(n_elements, grading))
    sol = solve(inp.curve, inp.bulk, inp.surface, inp.load, inp.quad)
    disc = Discretization(sol.curve, sol.bulk, sol.surface, sol.load, sol.quad)
    r = np.abs([bie_residual(sol, x, disc) for x in points])
    return r.max(axis=0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--ladder", type=int, nargs="+", default=[10, 20, 40, 80])
    ap.add_argument("--reference", type=int, default=100)
    ap.add_argument("--grading", type=float, default=1.2)
    args = ap.parse_args()
    cfg = benchmark_arc(grading=args.grading)
    rep = convergence_study(cfg, args.ladder, args.reference, outdir=args.out)
    points = (np.arange(50) + 0.5) / 50
    res = np.array([residuals(n, args.grading, points) for n in args.ladder])
    print(" N_e  dofs    E_sigma     E_omega    res_sigma   res_omega")
    for n, dof, es, ew, (rs, rw) in zip(rep.ladder, rep.dofs, rep.e_sigma, rep.e_omega, res):
        print(f"{n:4d} {dof:5d}  {es:.3e}  {ew:.3e}  {rs:.3e}  {rw:.3e}")
    write_csv(Path(args.out) / "benchmark_arc_residuals.csv",
              ("n_elements", "res_sigma", "res_omega"),
              {"n_elements": np.array(args.ladder), "res_sigma": res[:, 0],
               "res_omega": res[:, 1]})


if __name__ == "__main__":
    main()
