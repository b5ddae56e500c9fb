"""Four surfaces of equal length: segment, flat ellipse arc, circular arc
and steep ellipse arc. Writes profiles, relative Von Mises grids and a
combined profile table, and prints the profile extrema."""
import argparse

import numpy as np

from gmsurf.harness.config import GridSpec
from gmsurf.harness.studies import curvature_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/curvature")
    ap.add_argument("--elements", type=int, default=50)
    ap.add_argument("--resolution", type=int, default=201)
    args = ap.parse_args()
    res = curvature_study(args.out, args.elements, grid=GridSpec(2.0, args.resolution))
    for label, r in res.items():
        s = r.profile["sigma_s_tilde"]
        d = np.sign(np.diff(s))
        turns = np.nonzero(d[1:] != d[:-1])[0] + 1
        where = ", ".join(f"{r.profile['s_tilde'][i]:.3f}" for i in turns)
        print(f"case {label}: sigma_tilde in [{s.min():.4f}, {s.max():.4f}], "
              f"extrema at s = {where}; max |omega_S| {abs(r.profile['omega_s']).max():.4f}")


if __name__ == "__main__":
    main()
