"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line; the lines
are repeated in the pytest terminal summary."""
import math
import sys
from dataclasses import replace

import numpy as np
import pytest

from gmsurf import solve
from gmsurf.assembly import Discretization, assemble
from gmsurf.fields import FieldEvaluator, bie_residual, surface_fields, surface_profile
from gmsurf.harness.config import GridSpec, nondimensionalize
from gmsurf.harness.presets import refine, circular_arc
from gmsurf.harness.studies import (benchmark_arc, convergence_study, curvature_case,
                                    grid_table, profile_table)
from gmsurf.kernels import BulkMaterial, FarFieldLoad, SurfaceMaterial, farfield_gradient
from gmsurf.nurbs import frame
from gmsurf.quadrature import SingularPolicy, integrate_singular

import conftest
from conftest import rotation, solve_config
from test_quadrature import excision_oracle, random_density

pytestmark = pytest.mark.slow


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def mirrored(sol, m=200):
    """Profiles at m uniform parameters and at their mirror images."""
    xi = np.linspace(0.0, 1.0, m)
    return surface_profile(sol, xi), surface_profile(sol, 1.0 - xi)


def interior_extrema(values):
    d = np.sign(np.diff(values))
    d = d[d != 0]
    return np.nonzero(d[1:] != d[:-1])[0] + 1


def test_c1_degenerate_surface():
    bulk = BulkMaterial(2.0, 0.35)
    bare = SurfaceMaterial(0.0, 0.0, 0.0)
    curve = refine(circular_arc(2.0, math.pi / 4, 3 * math.pi / 4), 20, 1.2, 20.0)
    # hydrostatic remote load: no shear strain along the curve, so X = 0
    hyd = solve(curve, bulk, bare, FarFieldLoad(0.1, 0.0, 0.1))
    x_hyd = max(np.abs(hyd.d).max(), np.abs(hyd.q).max())
    # general load: d = 0 and omega_S is the remote shear strain n . eps . t
    load = FarFieldLoad(0.05, 0.03, 0.1)
    gen = solve(curve, bulk, bare, load)
    G = farfield_gradient(load, bulk)
    col = Discretization(curve, bulk, bare, load).mesh.collocation
    q_err = max(abs(surface_fields(gen, x).omega_s - frame(curve, x).normal @ G @ frame(curve, x).tangent)
                for x in col)
    rng = np.random.default_rng(1)
    ang = rng.uniform(0, 2 * np.pi, 100)
    rad = rng.uniform(0.2, 6.0, 100)
    X = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    X = X[np.abs(np.hypot(*X.T) - 2.0) > 0.1]
    s_err = 0.0
    for sol, ld in ((hyd, hyd.load), (gen, load)):
        sig = FieldEvaluator(sol).stress(X)["sigma"]
        s_err = max(s_err, np.abs(sig - ld.tensor).max())
    ok = x_hyd < 1e-12 and np.abs(gen.d).max() < 1e-12 and q_err < 1e-12 and s_err < 1e-12
    report(1, ok, f"hydrostatic max|X|={x_hyd:.1e}; general load max|d|={np.abs(gen.d).max():.1e}, "
                  f"omega_S - remote shear strain {q_err:.1e}; bulk stress - remote "
                  f"{s_err:.1e} at {len(X)} points (tol 1e-12)")


def test_c2_straight_segment_symmetry():
    inp, sol = solve_config(curvature_case("i", 50))
    a, b = mirrored(sol)
    sig = a["sigma_s"] / (inp.bulk.mu * inp.ell)
    sig_m = b["sigma_s"] / (inp.bulk.mu * inp.ell)
    w = np.abs(a["omega_s"]).max() / np.abs(sig).max()
    asym = np.abs(sig - sig_m).max()
    report(2, w < 1e-6 and asym < 1e-6,
           f"max|omega_S|/max|sigma_tilde|={w:.1e}, max sigma_tilde asymmetry={asym:.1e} "
           f"at 200 samples (tol 1e-6)")


def test_c3_tip_conditions():
    worst = []
    for cfg in (benchmark_arc(50), replace(curvature_case("iii", 50),
                                           surface=replace(curvature_case("iii").surface,
                                                           sigma0_tilde=0.0))):
        inp, sol = solve_config(cfg)
        p = surface_profile(sol, np.linspace(0, 1, 401))
        tips = [surface_fields(sol, x) for x in (0.0, 1.0)]
        rs = max(abs(t.sigma_s) for t in tips) / np.abs(p["sigma_s"]).max()
        rw = max(abs(t.omega_s) for t in tips) / np.abs(p["omega_s"]).max()
        worst.append((inp.surface.sigma0 != 0, rs, rw))
    ok = all(rs < 1e-10 and (rw < 1e-10 or not tension) for tension, rs, rw in worst)
    (_, rs1, rw1), (_, rs2, _) = worst
    report(3, ok, f"sigma0 != 0: tip |sigma_S|/max={rs1:.1e}, |omega_S|/max={rw1:.1e}; "
                  f"sigma0 = 0: tip |sigma_S|/max={rs2:.1e} (tol 1e-10)")


def test_c4_circular_arc_benchmark_shape():
    inp, sol = solve_config(benchmark_arc(50))
    a, b = mirrored(sol)
    scale = inp.bulk.mu * inp.ell
    sym = np.abs(a["sigma_s"] - b["sigma_s"]).max() / scale
    anti = np.abs(a["omega_s"] + b["omega_s"]).max()
    # continuity to zero at the tips: values shrink along parameters approaching each tip
    eps = 10.0 ** -np.arange(1, 7)
    near = [[abs(getattr(surface_fields(sol, x), k)) for x in np.concatenate([eps, 1 - eps])]
            for k in ("sigma_s", "omega_s")]
    cont = all(max(v[5], v[11]) < 1e-2 * max(v) and np.all(np.diff(v[:6]) < 0)
               and np.all(np.diff(v[6:]) < 0) for v in near)
    # sign pattern of the circular arc of the curvature study: compressive inside
    inp3, sol3 = solve_config(curvature_case("iii", 50))
    p3 = profile_table(sol3, inp3.ell, 201)
    s3 = p3["sigma_s_tilde"]
    inner = (p3["s_tilde"] > 0.0) & (p3["s_tilde"] < 1.0)
    compressive = bool(np.all(s3[inner] < 0)) and abs(p3["s_tilde"][s3.argmin()] - 0.5) < 1e-9
    mid = profile_table(sol, inp.ell, 201)["sigma_s_tilde"][100]
    ok = sym < 1e-6 and anti < 1e-6 and cont and compressive and mid < 0
    report(4, ok, f"sigma_tilde symmetry {sym:.1e}, omega_S antisymmetry {anti:.1e} (tol 1e-6); "
                  f"continuous to zero at tips: {cont}; circular arc sigma_tilde < 0 inside with "
                  f"minimum at s=0.5: {compressive}; benchmark midpoint sigma_tilde={mid:.3f}")


def test_c5_convergence():
    rep = convergence_study(benchmark_arc(), [10, 20, 40, 80], 100, n_samples=200)
    es, ew = np.array(rep.e_sigma), np.array(rep.e_omega)
    ok = (rep.complete and np.all(np.diff(es) < 0) and np.all(np.diff(ew) < 0)
          and es[-1] < 1e-3 and np.all(ew >= es))
    report(5, ok, "E_sigma=" + ", ".join(f"{v:.2e}" for v in es) + "; E_omega="
           + ", ".join(f"{v:.2e}" for v in ew) + " for N_e=10, 20, 40, 80 vs 100")


def test_c6_singular_quadrature():
    from scipy.special import shichi
    rng = np.random.default_rng(2024)
    pol = SingularPolicy()
    worst = 0.0
    for _ in range(100):
        h = random_density(rng)
        a = rng.uniform(-1, 0)
        b = a + rng.uniform(0.5, 2)
        xs = rng.uniform(a + 0.05 * (b - a), b - 0.05 * (b - a))
        v = integrate_singular(lambda x: h(x) / (x - xs), a, b, xs, pol, h(xs))
        ref = excision_oracle(h, a, b, xs)
        worst = max(worst, abs(v - ref) / abs(ref))
    shi = integrate_singular(lambda x: np.exp(x) / x, -1.0, 1.0, 0.0, pol, 1.0)
    shi_ref = excision_oracle(np.exp, -1.0, 1.0, 0.0)
    e_shi = abs(shi - shi_ref) / shi_ref
    ok = worst < 1e-6 and e_shi < 1e-6 and abs(shi - 2.1145018) < 1e-7
    report(6, ok, f"100 random densities: worst relative difference {worst:.1e}; "
                  f"e^x/x over [-1,1] = {shi:.7f} (2 Shi(1) = {2 * shichi(1.0)[0]:.7f}), "
                  f"vs excision {e_shi:.1e} (tol 1e-6)")


def test_c7_bie_self_consistency():
    # 50 cell-centred uniform parameters; none is a collocation point
    xs = (np.arange(50) + 0.5) / 50
    res = {}
    for n in (10, 20, 40, 50):
        inp, sol = solve_config(benchmark_arc(n))
        disc = Discretization(sol.curve, sol.bulk, sol.surface, sol.load, sol.quad)
        assert np.abs(xs[:, None] - disc.mesh.collocation[None]).min() > 1e-5
        r = np.array([bie_residual(sol, x, disc) for x in xs])
        res[n] = np.abs(r).max()
    seq = [res[n] for n in (10, 20, 40, 50)]
    ok = res[50] < 1e-3 and all(b < a for a, b in zip(seq[:-1], seq[1:]))
    report(7, ok, "max normalised residual at 50 off-collocation points: "
           + ", ".join(f"N_e={n}: {v:.2e}" for n, v in res.items()) + " (tol 1e-3 at N_e=50)")


def test_c8_field_correctness():
    inp, sol = solve_config(benchmark_arc(50))
    ev = FieldEvaluator(sol)
    ell = inp.ell
    rng = np.random.default_rng(8)
    ang = rng.uniform(0, 2 * np.pi, 50)
    rad = 1 + rng.choice([-1, 1], 50) * rng.uniform(0.15, 0.6, 50)
    X = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    h = 1e-4 * ell
    G = ev.gradient(X)
    g_err = 0.0
    div = np.zeros((len(X), 2))
    for m in range(2):
        e = np.eye(2)[m] * h
        fd = (ev.displacement(X + e) - ev.displacement(X - e)) / (2 * h)
        g_err = max(g_err, (np.abs(G[:, :, m] - fd).max(axis=1) / np.abs(G).max(axis=(1, 2))).max())
        div += ((ev.stress(X + e)["sigma"] - ev.stress(X - e)["sigma"]) / (2 * h))[:, :, m]
    norm = np.linalg.norm(sol.load.tensor)
    eq = np.abs(div).max() / norm
    far = 0.0
    for a in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        x = 100 * ell * np.array([[np.cos(a), np.sin(a)]])
        far = max(far, np.linalg.norm(ev.stress(x)["sigma"][0] - sol.load.tensor) / norm)
    report(8, g_err < 1e-5 and eq < 1e-5 and far < 1e-2,
           f"gradient vs finite differences {g_err:.1e} (tol 1e-5); equilibrium {eq:.1e} "
           f"(tol 1e-5); far field at 100 ell {far:.1e} (tol 1e-2)")


def test_c9_invariance():
    inp, base = solve_config(benchmark_arc(30))
    curve, bulk, surf = inp.curve, inp.bulk, inp.surface
    # surface tension makes the response affine in the load; the load-driven
    # part X(L) - X(0) must be linear
    L1, L2 = FarFieldLoad(0.3, 0.1, 0.0), FarFieldLoad(0.0, -0.2, 0.7)
    s0, s1, s2, s12 = (solve(curve, bulk, surf, L) for L in
                       (FarFieldLoad(), L1, L2, L1.scaled(2.0) + L2.scaled(-0.5)))
    X = np.array([[0.2, 1.7], [1.4, -0.3], [0.0, 0.2]])
    lin = 0.0
    for k in ("d", "q"):
        v0, v1, v2, v12 = (getattr(s, k) for s in (s0, s1, s2, s12))
        lin = max(lin, np.abs((v12 - v0) - 2 * (v1 - v0) + 0.5 * (v2 - v0)).max()
                  / np.abs(v12).max())
    sig0, sig1, sig2, sig12 = (FieldEvaluator(s).stress(X)["sigma"] for s in (s0, s1, s2, s12))
    lin = max(lin, np.abs((sig12 - sig0) - 2 * (sig1 - sig0) + 0.5 * (sig2 - sig0)).max()
              / np.abs(sig12).max())
    xs = np.linspace(0, 1, 101)
    pa = surface_profile(base, xs)
    rot = 0.0
    for th in (math.pi / 6, math.pi / 2):
        Q = rotation(th)
        r = solve(curve.transformed(Q), bulk, surf, inp.load.rotated(th))
        pr = surface_profile(r, xs)
        rot = max(rot, *(np.abs(pa[k] - pr[k]).max() / np.abs(pa[k]).max()
                         for k in ("sigma_s", "omega_s")))
        sa = FieldEvaluator(base).stress(X)["sigma"]
        sb = FieldEvaluator(r).stress(X @ Q.T)["sigma"]
        rot = max(rot, np.abs(sb - Q @ sa @ Q.T).max() / np.abs(sa).max())
    lam = 7.0
    big_cfg = replace(benchmark_arc(30), geometry=replace(
        benchmark_arc().geometry, params={**benchmark_arc().geometry.params, "radius": lam}))
    ib, big = solve_config(big_cfg)
    pb = profile_table(big, ib.ell, 101)
    pa_t = profile_table(base, inp.ell, 101)
    scale = max(np.abs(pa_t[k] - pb[k]).max() / np.abs(pa_t[k]).max()
                for k in ("sigma_s_tilde", "omega_s"))
    A1 = assemble(curve, bulk, surf, inp.load, inp.quad)
    A2 = assemble(curve, bulk, surf, inp.load, inp.quad)
    det = np.array_equal(A1.matrix, A2.matrix) and np.array_equal(A1.rhs, A2.rhs)
    det = det and np.array_equal(solve_config(benchmark_arc(30))[1].d, base.d)
    ok = lin < 1e-10 and rot < 1e-8 and scale < 1e-8 and det
    report(9, ok, f"linearity {lin:.1e} (tol 1e-10); rotation {rot:.1e} (tol 1e-8); "
                  f"scale x{lam:g} {scale:.1e} (tol 1e-8); bit-identical assembly and solve: {det}")


def test_c10_curvature_study():
    grid = GridSpec(2.0, 41)
    lines, ok = [], True
    asym = {}
    for label in ("i", "ii", "iii", "iv"):
        inp, sol = solve_config(curvature_case(label, 50))
        p = profile_table(sol, inp.ell, 201)
        s = p["sigma_s_tilde"]
        ext = interior_extrema(s)
        where = p["s_tilde"][ext]
        if label == "iv":
            good = (len(ext) == 3 and abs(where[1] - 0.5) < 1e-9 and s[ext[1]] < 0
                    and s[ext[0]] > 0 and s[ext[2]] > 0)
            lines.append(f"(iv) {len(ext)} extrema at s=" + ", ".join(f"{w:.3f}" for w in where))
        else:
            good = (len(ext) == 1 and abs(where[0] - 0.5) < 1e-9 and np.all(s[1:-1] < 0)
                    and np.abs(s[[0, -1]]).max() < 1e-10)
            lines.append(f"({label}) {len(ext)} extremum, min {s.min():.4f} at s={where[0]:.3f}")
        ok &= good
        g = grid_table(sol, inp.ell, grid)
        R = g["relative_von_mises"].reshape(grid.resolution, grid.resolution)

        def diff(M):
            m = np.isfinite(R) & np.isfinite(M)
            return np.abs(R - M)[m].max()
        asym[label] = (diff(R[:, ::-1]), diff(R[::-1, :]))
    sym_i = max(asym["i"])
    breaks = min(asym[k][1] for k in ("ii", "iii", "iv"))
    ok &= sym_i < 1e-6 and breaks > 1e-3
    lines.append(f"case (i) Von Mises mirror error {sym_i:.1e} (tol 1e-6)")
    lines.append("cases (ii)-(iv) y-reflection asymmetry "
                 + ", ".join(f"{asym[k][1]:.2f}" for k in ("ii", "iii", "iv"))
                 + f" (> 1e-3), x-reflection {max(asym[k][0] for k in ('ii', 'iii', 'iv')):.1e}")
    report(10, ok, "; ".join(lines))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
