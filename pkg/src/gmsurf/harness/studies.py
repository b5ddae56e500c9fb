"""Study drivers: single cases, the mesh-convergence ladder and the
four-surface curvature comparison. All outputs are CSV plus a JSON manifest."""
from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..assembly import SurfaceSolution, solve
from ..fields import NEAR_FIELD_FRACTION, FieldEvaluator, surface_profile
from .config import (SCHEMA_VERSION, CaseConfig, GeometrySpec, GridSpec, LoadSpec,
                     MeshSpec, OutputSpec, SolverInputs, SurfaceSpec, as_plain,
                     config_to_dict, nondimensionalize, surface_groups)
from .presets import ConfigError

PROFILE_COLUMNS = ("s_tilde", "xi", "x1", "x2", "sigma_s_tilde", "omega_s", "dt_l", "dt_n")
GRID_COLUMNS = ("x1", "x2", "u1", "u2", "s11", "s12", "s22", "s33", "von_mises",
                "relative_von_mises")
RADIAL_COLUMNS = ("angle", "r", "x1", "x2", "s11_tilde", "s12_tilde", "s22_tilde")
CONVERGENCE_COLUMNS = ("n_elements", "dofs", "e_sigma", "e_omega")
COMBINED_COLUMNS = ("case", "s_tilde", "xi", "sigma_s_tilde", "omega_s")


def write_csv(path, columns, data) -> None:
    """Comma-separated, header row, 17 significant digits; NaN becomes an
    empty field."""
    cols = [np.asarray(data[c]) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in zip(*cols):
            w.writerow(["" if isinstance(v, float) and math.isnan(v) else
                        (format(v, ".17g") if isinstance(v, float) else v)
                        for v in (x.item() if hasattr(x, "item") else x for x in row)])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(head):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) if v != "" else math.nan for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out


# ---------------------------------------------------------------------------
# single case

@dataclass
class CaseResult:
    config: CaseConfig
    inputs: SolverInputs
    solution: SurfaceSolution
    profile: dict
    grid: dict | None = None
    radial: dict | None = None
    files: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


def profile_table(sol: SurfaceSolution, ell: float, n: int) -> dict:
    a, b = sol.curve.domain
    p = surface_profile(sol, np.linspace(a, b, n))
    mu = sol.bulk.mu
    return {"s_tilde": p["s_tilde"], "xi": p["xi"], "x1": p["x1"], "x2": p["x2"],
            "sigma_s_tilde": p["sigma_s"] / (mu * ell), "omega_s": p["omega_s"],
            "dt_l": p["dt_l"], "dt_n": p["dt_n"]}


def centroid(sol: SurfaceSolution) -> np.ndarray:
    ev = FieldEvaluator(sol, order=16)
    w = ev._dsw
    return np.einsum("eq,eqi->i", w, ev._y) / w.sum()


def _masked_eval(ev: FieldEvaluator, X: np.ndarray):
    """Fields at X; points inside the near-field threshold come back NaN."""
    dist = ev._distances(X)
    ok = ~np.any(dist < NEAR_FIELD_FRACTION * ev._elem_len[None], axis=1)
    m = len(X)
    u = np.full((m, 2), np.nan)
    sig = np.full((m, 2, 2), np.nan)
    s33 = np.full(m, np.nan)
    vm = np.full(m, np.nan)
    rel = np.full(m, np.nan)
    if ok.any():
        u[ok] = ev.displacement(X[ok])
        f = ev.stress(X[ok])
        sig[ok], s33[ok], vm[ok], rel[ok] = (f["sigma"], f["sigma33"], f["von_mises"],
                                             f["relative_von_mises"])
    return u, sig, s33, vm, rel


def grid_table(sol: SurfaceSolution, ell: float, spec: GridSpec, center=None) -> dict:
    c = centroid(sol) if center is None else np.asarray(center, float)
    t = np.linspace(-spec.half_width * ell, spec.half_width * ell, spec.resolution)
    # exact mirror pairs about the centre
    t = 0.5 * (t - t[::-1])
    X1, X2 = np.meshgrid(c[0] + t, c[1] + t, indexing="xy")
    X = np.column_stack([X1.ravel(), X2.ravel()])
    u, sig, s33, vm, rel = _masked_eval(FieldEvaluator(sol), X)
    return {"x1": X[:, 0], "x2": X[:, 1], "u1": u[:, 0], "u2": u[:, 1],
            "s11": sig[:, 0, 0], "s12": sig[:, 0, 1], "s22": sig[:, 1, 1], "s33": s33,
            "von_mises": vm, "relative_von_mises": rel}


def radial_table(sol: SurfaceSolution, ell: float, spec) -> dict:
    rows = {k: [] for k in RADIAL_COLUMNS}
    ev = FieldEvaluator(sol)
    r = np.linspace(spec.r_min * ell, spec.r_max * ell, spec.n)
    r = r[r > 0] if spec.r_min <= 0 else r
    mu = sol.bulk.mu
    for a in spec.angles:
        X = np.column_stack([r * math.cos(a), r * math.sin(a)])
        _, sig, _, _, _ = _masked_eval(ev, X)
        rows["angle"].append(np.full(len(r), a))
        rows["r"].append(r)
        rows["x1"].append(X[:, 0])
        rows["x2"].append(X[:, 1])
        rows["s11_tilde"].append(sig[:, 0, 0] / mu)
        rows["s12_tilde"].append(sig[:, 0, 1] / mu)
        rows["s22_tilde"].append(sig[:, 1, 1] / mu)
    return {k: np.concatenate(v) if v else np.empty(0) for k, v in rows.items()}


def _derived(inp: SolverInputs) -> dict:
    S = inp.surface.stiffness
    return {"ell": inp.ell, "surface_stiffness": S, "sigma0": inp.surface.sigma0,
            "curve_length": inp.curve.length, "n_control_points": inp.curve.n,
            "load_gpa": [inp.load.s11, inp.load.s12, inp.load.s22],
            **surface_groups(inp.bulk.mu, inp.ell, S, inp.surface.sigma0)}


def _base_manifest(cfg: CaseConfig) -> dict:
    from .. import __version__
    return {"schema_version": SCHEMA_VERSION, "package_version": __version__,
            "python": platform.python_version(), "numpy": np.__version__,
            "config": config_to_dict(cfg),
            "columns": {"profile": list(PROFILE_COLUMNS), "grid": list(GRID_COLUMNS),
                        "radial": list(RADIAL_COLUMNS)}}


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(as_plain(manifest), indent=2, sort_keys=True,
                                     allow_nan=True) + "\n")


def run_case(cfg: CaseConfig, outdir=None) -> CaseResult:
    """Solve one case, evaluate the requested outputs and (if ``outdir`` is
    given) write them. On a solver failure the manifest is still written
    with ``status = "failed"`` before the exception propagates."""
    manifest = _base_manifest(cfg)
    out = Path(outdir) if outdir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    inp = nondimensionalize(cfg)
    manifest["derived"] = _derived(inp)
    try:
        sol = solve(inp.curve, inp.bulk, inp.surface, inp.load, inp.quad)
    except Exception as exc:
        manifest.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        if out is not None:
            write_manifest(out / f"{cfg.name}_manifest.json", manifest)
        raise
    t_solve = time.perf_counter()
    res = CaseResult(cfg, inp, sol, profile_table(sol, inp.ell, cfg.output.profile_samples))
    if cfg.output.grid is not None:
        res.grid = grid_table(sol, inp.ell, cfg.output.grid)
    if cfg.output.radial is not None and cfg.output.radial.angles:
        res.radial = radial_table(sol, inp.ell, cfg.output.radial)
    t_post = time.perf_counter()
    diag = dict(sol.diagnostics)
    timings = diag.pop("timings", {})
    timings.update(total_solve=t_solve - t0, post_processing=t_post - t_solve)
    manifest.update(status="ok", diagnostics=diag, timings=timings)
    if out is not None:
        files = {"profile": f"{cfg.name}_profile.csv"}
        write_csv(out / files["profile"], PROFILE_COLUMNS, res.profile)
        if res.grid is not None:
            files["grid"] = f"{cfg.name}_grid.csv"
            write_csv(out / files["grid"], GRID_COLUMNS, res.grid)
        if res.radial is not None:
            files["radial"] = f"{cfg.name}_radial.csv"
            write_csv(out / files["radial"], RADIAL_COLUMNS, res.radial)
        manifest["files"] = files
        res.files = {k: out / v for k, v in files.items()}
        write_manifest(out / f"{cfg.name}_manifest.json", manifest)
    res.manifest = manifest
    return res


# ---------------------------------------------------------------------------
# convergence

@dataclass
class ConvergenceReport:
    ladder: list
    reference: int
    n_samples: int
    dofs: list = field(default_factory=list)
    e_sigma: list = field(default_factory=list)
    e_omega: list = field(default_factory=list)
    error: str | None = None

    @property
    def complete(self) -> bool:
        return self.error is None and len(self.e_sigma) == len(self.ladder)

    def table(self) -> dict:
        k = len(self.e_sigma)
        return {"n_elements": np.array(self.ladder[:k]), "dofs": np.array(self.dofs),
                "e_sigma": np.array(self.e_sigma), "e_omega": np.array(self.e_omega)}


def relative_l2(values, reference) -> float:
    den = math.sqrt(float(np.sum(np.square(reference))))
    num = math.sqrt(float(np.sum(np.square(np.asarray(values) - reference))))
    return num / den if den > 0 else num


def _profile_at(cfg: CaseConfig, n_elements: int, xi) -> tuple[np.ndarray, np.ndarray, int]:
    inp = nondimensionalize(replace(cfg, mesh=replace(cfg.mesh, n_elements=n_elements)))
    sol = solve(inp.curve, inp.bulk, inp.surface, inp.load, inp.quad)
    p = surface_profile(sol, xi)
    return p["sigma_s"] / (inp.bulk.mu * inp.ell), p["omega_s"], sol.curve.n


def convergence_study(cfg: CaseConfig, ladder, reference: int, n_samples: int = 200,
                      outdir=None) -> ConvergenceReport:
    """Relative L2 errors of sigma_s_tilde and omega_s at ``n_samples``
    uniform parameters against the ``reference`` mesh."""
    ladder = [int(n) for n in ladder]
    if any(n > reference for n in ladder):
        raise ConfigError("reference mesh must be at least as fine as every ladder entry")
    rep = ConvergenceReport(ladder, int(reference), int(n_samples))
    xi = np.linspace(0.0, 1.0, n_samples)
    s_ref, w_ref, _ = _profile_at(cfg, reference, xi)
    for n in ladder:
        try:
            s, w, dof = _profile_at(cfg, n, xi)
        except Exception as exc:
            rep.error = f"N_e={n}: {type(exc).__name__}: {exc}"
            break
        rep.dofs.append(dof)
        rep.e_sigma.append(relative_l2(s, s_ref))
        rep.e_omega.append(relative_l2(w, w_ref))
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / f"{cfg.name}_convergence.csv", CONVERGENCE_COLUMNS, rep.table())
        man = _base_manifest(cfg)
        man.update(status="ok" if rep.error is None else "failed", error=rep.error,
                   ladder=ladder, reference=reference, n_samples=n_samples,
                   files={"convergence": f"{cfg.name}_convergence.csv"})
        write_manifest(out / f"{cfg.name}_convergence_manifest.json", man)
    return rep


# ---------------------------------------------------------------------------
# built-in cases

def benchmark_segment(n_elements: int = 50, grading: float = 1.2, angle: float = math.pi / 6,
                      half_length: float = 5.0) -> CaseConfig:
    """Inclined straight segment, gamma = 0.12, sigma0_tilde = 0.025,
    sigma11_tilde = 0.05, mu = 2 GPa, nu = 0.35."""
    return CaseConfig(
        name="benchmark_segment",
        geometry=GeometrySpec("segment", {"half_length": half_length, "angle": angle}),
        surface=SurfaceSpec(gamma=0.12, sigma0_tilde=0.025),
        load=LoadSpec(s11=0.05, dimensionless=True),
        mesh=MeshSpec(n_elements, grading))


def benchmark_arc(n_elements: int = 50, grading: float = 1.2) -> CaseConfig:
    """Unit circular arc over normal angles [pi/4, 3pi/4], gamma = 1,
    sigma0_tilde = 0.01, nu = 0.33, sigma22_tilde = 1."""
    return CaseConfig(
        name="benchmark_arc",
        geometry=GeometrySpec("circular_arc", {"radius": 1.0, "beta1": math.pi / 4,
                                               "beta2": 3 * math.pi / 4}),
        bulk=replace(CaseConfig().bulk, mu=1.0, nu=0.33),
        surface=SurfaceSpec(gamma=1.0, sigma0_tilde=0.01),
        load=LoadSpec(s22=1.0, dimensionless=True),
        mesh=MeshSpec(n_elements, grading))


CURVATURE_CASES = {
    "i": ("segment", {"tip_a": [math.pi / 2, 0.0], "tip_b": [-math.pi / 2, 0.0]}),
    "ii": ("ellipse_arc", {"a": 2.0, "b": 1.0, "length": math.pi}),
    "iii": ("circular_arc", {"radius": 2.0, "beta1": math.pi / 4, "beta2": 3 * math.pi / 4}),
    "iv": ("ellipse_arc", {"a": 2.0, "b": 4.0, "length": math.pi}),
}


def curvature_case(label: str, n_elements: int = 50, grading: float = 1.2,
                   grid: GridSpec | None = None) -> CaseConfig:
    """Surfaces of length pi nm, gamma = 0.12, sigma0_tilde = 0.025,
    sigma22 = 100 MPa, mu = 2 GPa, nu = 0.35."""
    kind, params = CURVATURE_CASES[label]
    return CaseConfig(
        name=f"curvature_{label}",
        geometry=GeometrySpec(kind, dict(params)),
        surface=SurfaceSpec(gamma=0.12, sigma0_tilde=0.025),
        load=LoadSpec(s22=0.1),
        mesh=MeshSpec(n_elements, grading),
        output=OutputSpec(grid=grid))


def curvature_study(outdir=None, n_elements: int = 50, grading: float = 1.2,
                    grid: GridSpec | None = GridSpec()) -> dict[str, CaseResult]:
    results = {}
    for label in CURVATURE_CASES:
        results[label] = run_case(curvature_case(label, n_elements, grading, grid), outdir)
    if outdir is not None:
        comb = {k: [] for k in COMBINED_COLUMNS}
        for label, r in results.items():
            m = len(r.profile["xi"])
            comb["case"].append(np.full(m, label, dtype=object))
            for k in COMBINED_COLUMNS[1:]:
                comb[k].append(r.profile[k])
        write_csv(Path(outdir) / "curvature_profiles.csv", COMBINED_COLUMNS,
                  {k: np.concatenate(v) for k, v in comb.items()})
    return results
