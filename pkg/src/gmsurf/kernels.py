"""Plane-strain elastic building blocks.

Units used by the solver core: stresses and moduli in GPa, lengths in nm,
surface quantities in N/m. N/m divided by GPa*nm is dimensionless, so no
conversion factors appear anywhere below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nurbs import LocalFrame

# distances below this (nm) are rejected as coincident
SINGULAR_TOL = 1e-12


class SingularityError(ValueError):
    """Kernel evaluated at (numerically) coincident points."""


@dataclass(frozen=True)
class BulkMaterial:
    mu: float
    nu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("shear modulus must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ValueError("Poisson ratio must lie in (-1, 0.5)")

    @property
    def kappa(self) -> float:
        return 3.0 - 4.0 * self.nu

    @property
    def lame_lambda(self) -> float:
        return (3.0 - self.kappa) * self.mu / (self.kappa - 1.0)

    @property
    def kelvin_factor(self) -> float:
        """1 / (2 pi mu (kappa + 1))."""
        return 1.0 / (2.0 * math.pi * self.mu * (self.kappa + 1.0))


@dataclass(frozen=True)
class SurfaceMaterial:
    mu_s: float
    lambda_s: float
    sigma0: float = 0.0

    def __post_init__(self):
        if self.stiffness < 0:
            raise ValueError("lambda_s + 2 mu_s must be non-negative")
        if self.stiffness == 0 and self.sigma0 != 0:
            raise ValueError("a surface without stiffness cannot carry surface tension")

    @property
    def stiffness(self) -> float:
        """lambda_s + 2 mu_s."""
        return self.lambda_s + 2.0 * self.mu_s

    @classmethod
    def from_stiffness(cls, stiffness: float, sigma0: float = 0.0) -> "SurfaceMaterial":
        # only the combination lambda_s + 2 mu_s enters the plane-strain model
        return cls(mu_s=0.5 * stiffness, lambda_s=0.0, sigma0=sigma0)


@dataclass(frozen=True)
class FarFieldLoad:
    s11: float = 0.0
    s12: float = 0.0
    s22: float = 0.0

    @property
    def tensor(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    def scaled(self, factor: float) -> "FarFieldLoad":
        return FarFieldLoad(self.s11 * factor, self.s12 * factor, self.s22 * factor)

    def rotated(self, theta: float) -> "FarFieldLoad":
        c, s = math.cos(theta), math.sin(theta)
        Q = np.array([[c, -s], [s, c]])
        S = Q @ self.tensor @ Q.T
        return FarFieldLoad(S[0, 0], S[0, 1], S[1, 1])

    def __add__(self, other: "FarFieldLoad") -> "FarFieldLoad":
        return FarFieldLoad(self.s11 + other.s11, self.s12 + other.s12, self.s22 + other.s22)


@dataclass(frozen=True)
class KernelEval:
    phi1: float
    phi2: float
    phi3: float
    r1: float
    r2: float
    r: float


def kelvin(x, y, bulk: BulkMaterial) -> np.ndarray:
    """Displacement at ``x`` due to a unit point force at ``y``; 2x2, symmetric."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = math.hypot(d[0], d[1])
    if r < SINGULAR_TOL:
        raise SingularityError("Kelvin kernel at coincident points")
    e = d / r
    k = bulk.kappa
    return bulk.kelvin_factor * (-k * math.log(r) * np.eye(2) + np.outer(e, e))


def farfield_gradient(load: FarFieldLoad, bulk: BulkMaterial) -> np.ndarray:
    """Constant (symmetric) displacement gradient of the remote field."""
    k, mu = bulk.kappa, bulk.mu
    a = ((k + 1) * load.s11 + (k - 3) * load.s22) / (8 * mu)
    b = ((k - 3) * load.s11 + (k + 1) * load.s22) / (8 * mu)
    c = load.s12 / (2 * mu)
    return np.array([[a, c], [c, b]])


def farfield_displacement(load: FarFieldLoad, bulk: BulkMaterial, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x @ farfield_gradient(load, bulk).T


def hooke(eps: np.ndarray, bulk: BulkMaterial) -> np.ndarray:
    """Plane-strain stress from a (..., 2, 2) strain array."""
    eps = np.asarray(eps, dtype=float)
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    return 2 * bulk.mu * eps + bulk.lame_lambda * tr[..., None, None] * np.eye(2)


def farfield_rhs_sigma(load: FarFieldLoad, bulk: BulkMaterial, beta0: float) -> tuple[float, float]:
    """Remote displacement derivative along the tangent at a point whose
    normal makes angle ``beta0`` with the x1 axis, as (Sigma1, Sigma2)."""
    G = farfield_gradient(load, bulk)
    s, c = math.sin(beta0), math.cos(beta0)
    return (-G[0, 0] * s + G[0, 1] * c, -G[1, 0] * s + G[1, 1] * c)


def farfield_rhs_parametric(load: FarFieldLoad, bulk: BulkMaterial, surface: SurfaceMaterial,
                            frame0: LocalFrame) -> tuple[float, float]:
    """(Sigma3, Sigma4): the same load data built from d(u_inf)/d(xi) and J1.

    Independent route to the one in :func:`farfield_rhs_sigma`; used as a
    cross-check.
    """
    du = farfield_gradient(load, bulk) @ frame0.first_deriv
    s, c = math.sin(frame0.normal_angle), math.cos(frame0.normal_angle)
    J = frame0.jacobian
    sigma3 = surface.stiffness / J * (-s * du[0] + c * du[1])
    sigma4 = (c * du[0] + s * du[1]) / J
    return sigma3, sigma4


def _phis(r1, r2, sb, cb):
    rr = r1 * r1 + r2 * r2
    r4 = rr * rr
    phi1 = (-r1 * sb + r2 * cb) / rr
    phi2 = 2 * r1 * r2 * (-r2 * sb - r1 * cb) / r4
    phi3 = (-(r2 / rr - 2 * r1 * r1 * r2 / r4) * sb
            + (r1 / rr - 2 * r1 * r2 * r2 / r4) * cb)
    return phi1, phi2, phi3


def phi_kernels(frame0: LocalFrame, y) -> KernelEval:
    """Kernels phi1..phi3 for relative position ``r = y - y0``."""
    y = np.asarray(y, dtype=float)
    r1, r2 = y - frame0.point
    r = math.hypot(r1, r2)
    if r < SINGULAR_TOL:
        raise SingularityError("phi kernels at coincident points")
    b = frame0.normal_angle
    p1, p2, p3 = _phis(r1, r2, math.sin(b), math.cos(b))
    return KernelEval(p1, p2, p3, r1, r2, r)


def bie_kernel_vectors(r: np.ndarray, beta0: float, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Kernel vectors k_sigma, k_omega such that the tangential derivative of
    the single-layer potential at y0 projected on the tangent / normal is
    ``kelvin_factor * integral(k . dt ds)``.

    ``r`` has shape (..., 2) and holds ``y - y0``. The phi kernels take the
    relative position measured from the source to the field point, hence
    the sign flip on ``r``.
    """
    sb, cb = math.sin(beta0), math.cos(beta0)
    p1, p2, p3 = _phis(-r[..., 0], -r[..., 1], sb, cb)
    k_sig = np.stack([kappa * p1 * sb - p2 * sb + p3 * cb,
                      -kappa * p1 * cb - p2 * cb - p3 * sb], axis=-1)
    k_om = np.stack([-kappa * p1 * cb + p2 * cb + p3 * sb,
                     -kappa * p1 * sb - p2 * sb + p3 * cb], axis=-1)
    return k_sig, k_om


def density_g(frame_y: LocalFrame, sigma_s: float, omega_s: float, dsigma_ds: float,
              domega_ds: float, sigma0: float) -> tuple[float, float]:
    """Cartesian traction jump (g1, g2) from the surface stress state."""
    inv_r = frame_y.inv_radius
    dt_l = dsigma_ds + sigma0 * omega_s * inv_r
    dt_n = -sigma_s * inv_r + sigma0 * domega_ds
    b = frame_y.normal_angle
    sb, cb = math.sin(b), math.cos(b)
    return -sb * dt_l + cb * dt_n, cb * dt_l + sb * dt_n


def kelvin_gradient(rho: np.ndarray, kappa: float) -> np.ndarray:
    """d G_kj / d x_m times 2 pi mu (kappa + 1), for ``rho = x - y``.

    Shape (..., 2, 2, 2) indexed [k, j, m].
    """
    rr = np.einsum("...i,...i->...", rho, rho)
    I = np.eye(2)
    t1 = -kappa * np.einsum("kj,...m->...kjm", I, rho) / rr[..., None, None, None]
    t2 = (np.einsum("km,...j->...kjm", I, rho) + np.einsum("jm,...k->...kjm", I, rho)) \
        / rr[..., None, None, None]
    t3 = -2 * np.einsum("...k,...j,...m->...kjm", rho, rho, rho) / (rr * rr)[..., None, None, None]
    return t1 + t2 + t3
