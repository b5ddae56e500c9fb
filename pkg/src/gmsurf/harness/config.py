"""Case configuration: dataclasses, TOML loading and the dimensionless
parameter conversion.

Dimensionless groups use the half-length of the surface, ell, as reference:

    gamma = 2 mu ell / (lambda_s + 2 mu_s)
    sigma_s_tilde = sigma_s / (mu ell),  sigma0_tilde = sigma0 / (mu ell)
    sigma_ij_tilde = sigma_ij / mu

Units are GPa for bulk moduli and stresses, nm for lengths and N/m for
surface quantities; GPa * nm = N/m, so no conversion factors appear.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..assembly import QuadratureSettings
from ..kernels import BulkMaterial, FarFieldLoad, SurfaceMaterial
from ..nurbs import NurbsCurve
from ..quadrature import SingularPolicy
from .presets import ConfigError, preset_geometry

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GeometrySpec:
    kind: str = "segment"
    params: dict = field(default_factory=lambda: {"half_length": 1.0})


@dataclass(frozen=True)
class BulkSpec:
    mu: float = 2.0
    nu: float = 0.35


@dataclass(frozen=True)
class SurfaceSpec:
    """Either dimensional (mu_s, lambda_s, sigma0 in N/m) or dimensionless
    (gamma, sigma0_tilde); set exactly one group."""
    mu_s: float | None = None
    lambda_s: float | None = None
    sigma0: float | None = None
    gamma: float | None = None
    sigma0_tilde: float | None = None

    @property
    def dimensionless(self) -> bool:
        return self.gamma is not None

    def validate(self) -> None:
        dim = [self.mu_s, self.lambda_s, self.sigma0]
        nd = [self.gamma, self.sigma0_tilde]
        if any(v is not None for v in dim) and any(v is not None for v in nd):
            raise ConfigError("surface: give either (mu_s, lambda_s, sigma0) or "
                              "(gamma, sigma0_tilde), not both")
        if self.dimensionless:
            if self.gamma <= 0 or not math.isfinite(self.gamma):
                raise ConfigError("surface: gamma must be positive and finite "
                                  "(gamma = 0 means infinite stiffness)")
        elif self.mu_s is None or self.lambda_s is None:
            raise ConfigError("surface: need mu_s and lambda_s, or gamma")


@dataclass(frozen=True)
class LoadSpec:
    """Remote stress, dimensional (GPa) unless ``dimensionless`` is set, in
    which case the components are sigma_ij / mu."""
    s11: float = 0.0
    s12: float = 0.0
    s22: float = 0.0
    dimensionless: bool = False


@dataclass(frozen=True)
class MeshSpec:
    """``grading`` is the length ratio of neighbouring elements going from a
    tip toward the middle (1 = uniform); ``max_grading`` caps the ratio of
    any element to the tip element (0 or negative = no cap)."""
    n_elements: int = 50
    grading: float = 1.2
    max_grading: float = 20.0
    degree: int = 2

    def validate(self) -> None:
        if self.n_elements < 4:
            raise ConfigError("mesh: n_elements must be >= 4")
        if self.degree < 2:
            raise ConfigError("mesh: degree must be >= 2")
        if self.grading < 1:
            raise ConfigError("mesh: grading must be >= 1")


@dataclass(frozen=True)
class QuadSpec:
    regular_order: int = 200
    singular_order: int = 64
    delta_fraction: float = 1.0
    near_levels: int = 3

    def settings(self) -> QuadratureSettings:
        try:
            pol = SingularPolicy(self.delta_fraction, self.singular_order, self.near_levels)
        except ValueError as exc:
            raise ConfigError(f"quadrature: {exc}") from None
        if self.regular_order < 1:
            raise ConfigError("quadrature: regular_order must be positive")
        return QuadratureSettings(self.regular_order, pol)


@dataclass(frozen=True)
class GridSpec:
    """Bulk field grid; the window is ``[-half_width, half_width]^2`` around
    the surface centroid, in units of ell."""
    half_width: float = 2.0
    resolution: int = 201


@dataclass(frozen=True)
class RadialSpec:
    """Radial lines from the origin at angles ``angles`` (rad), sampled on
    ``[r_min, r_max]`` (in units of ell)."""
    angles: tuple = ()
    r_min: float = 0.0
    r_max: float = 4.0
    n: int = 101


@dataclass(frozen=True)
class OutputSpec:
    profile_samples: int = 201
    grid: GridSpec | None = None
    radial: RadialSpec | None = None


@dataclass(frozen=True)
class CaseConfig:
    name: str = "case"
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    bulk: BulkSpec = field(default_factory=BulkSpec)
    surface: SurfaceSpec = field(default_factory=lambda: SurfaceSpec(gamma=0.12,
                                                                     sigma0_tilde=0.025))
    load: LoadSpec = field(default_factory=LoadSpec)
    mesh: MeshSpec = field(default_factory=MeshSpec)
    quadrature: QuadSpec = field(default_factory=QuadSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    # overrides the half-length as reference length when set
    reference_length: float | None = None

    def validate(self) -> None:
        self.surface.validate()
        self.mesh.validate()
        if self.bulk.mu <= 0 or not -1 < self.bulk.nu < 0.5:
            raise ConfigError("bulk: need mu > 0 and -1 < nu < 0.5")


@dataclass(frozen=True)
class SolverInputs:
    curve: NurbsCurve
    bulk: BulkMaterial
    surface: SurfaceMaterial
    load: FarFieldLoad
    quad: QuadratureSettings
    ell: float


# ---------------------------------------------------------------------------
# dict / TOML conversion

def _build(cls, data, path):
    if data is None:
        return None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a table")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kw = {}
    for k, v in data.items():
        sub = _NESTED.get((cls, k))
        if sub is not None:
            kw[k] = _build(sub, v, f"{path}.{k}")
        elif k == "angles":
            kw[k] = tuple(float(a) for a in v)
        else:
            kw[k] = v
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


_NESTED = {
    (CaseConfig, "geometry"): GeometrySpec,
    (CaseConfig, "bulk"): BulkSpec,
    (CaseConfig, "surface"): SurfaceSpec,
    (CaseConfig, "load"): LoadSpec,
    (CaseConfig, "mesh"): MeshSpec,
    (CaseConfig, "quadrature"): QuadSpec,
    (CaseConfig, "output"): OutputSpec,
    (OutputSpec, "grid"): GridSpec,
    (OutputSpec, "radial"): RadialSpec,
}


def config_from_dict(data: dict) -> CaseConfig:
    data = dict(data)
    data.pop("schema_version", None)
    cfg = _build(CaseConfig, data, "config")
    cfg.validate()
    return cfg


def config_to_dict(cfg: CaseConfig) -> dict:
    out = asdict(cfg)
    out["schema_version"] = SCHEMA_VERSION
    return out


def load_config(path) -> CaseConfig:
    """Read a case from a TOML file, or from a JSON run manifest (its
    ``config`` entry)."""
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            data = data.get("config", data)
        else:
            data = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# dimensionless conversion

def nondimensionalize(cfg: CaseConfig) -> SolverInputs:
    """Build the geometry and dimensional solver inputs from a config."""
    cfg.validate()
    g = cfg.geometry
    m = cfg.mesh
    curve = preset_geometry(g.kind, g.params, m.n_elements, m.grading, m.degree,
                            m.max_grading if m.max_grading > 0 else None)
    ell = cfg.reference_length or 0.5 * curve.length
    bulk = BulkMaterial(cfg.bulk.mu, cfg.bulk.nu)
    mu = bulk.mu
    s = cfg.surface
    if s.dimensionless:
        surface = SurfaceMaterial.from_stiffness(2 * mu * ell / s.gamma,
                                                 (s.sigma0_tilde or 0.0) * mu * ell)
    else:
        try:
            surface = SurfaceMaterial(s.mu_s, s.lambda_s, s.sigma0 or 0.0)
        except ValueError as exc:
            raise ConfigError(f"surface: {exc}") from None
    ld = cfg.load
    f = mu if ld.dimensionless else 1.0
    load = FarFieldLoad(f * ld.s11, f * ld.s12, f * ld.s22)
    return SolverInputs(curve, bulk, surface, load, cfg.quadrature.settings(), ell)


def surface_groups(mu: float, ell: float, stiffness: float, sigma0: float) -> dict:
    """(gamma, sigma0_tilde) from dimensional surface data."""
    gamma = math.inf if stiffness == 0 else 2 * mu * ell / stiffness
    return {"gamma": gamma, "sigma0_tilde": sigma0 / (mu * ell)}


def redimensionalize(mu: float, ell: float, sigma_s=None, stress=None) -> dict:
    """Dimensionless reporting: sigma_s / (mu ell) and stress / mu."""
    out = {}
    if sigma_s is not None:
        out["sigma_s_tilde"] = sigma_s / (mu * ell)
    if stress is not None:
        out["stress_tilde"] = stress / mu
    return out


def as_plain(obj):
    """JSON-ready copy of nested dataclasses / numpy values."""
    import numpy as np
    if is_dataclass(obj):
        return {k: as_plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): as_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [as_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
