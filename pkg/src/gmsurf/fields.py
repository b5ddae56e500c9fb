"""Post-processing of a solved surface: surface-stress profiles, traction
jumps, and displacement / strain / stress fields in the matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .assembly import Discretization, SurfaceSolution
from .kernels import farfield_gradient, hooke
from .nurbs import find_span, make_mesh, nurbs_basis_derivs, span_samples
from .quadrature import gauss_legendre

# bulk points closer than this fraction of the nearest element's length are refused
NEAR_FIELD_FRACTION = 1e-2


class NearSurfaceError(ValueError):
    """Bulk evaluation requested (numerically) on the surface."""


@dataclass(frozen=True)
class SurfaceFieldSample:
    xi: float
    s_tilde: float
    point: np.ndarray
    sigma_s: float
    omega_s: float
    dsigma_ds: float
    domega_ds: float
    eps_s: float
    jump_l: float
    jump_n: float


@dataclass(frozen=True)
class FieldSample:
    point: np.ndarray
    u: np.ndarray
    eps: np.ndarray
    sigma: np.ndarray
    sigma33: float
    von_mises: float
    relative_von_mises: float


def _coefficient_values(sol: SurfaceSolution, span: int, R, dR, J):
    """sigma_S, omega_S and their arc-length derivatives from basis tables."""
    p = sol.curve.degree
    d = sol.d[span - p: span + 1]
    q = sol.q[span - p: span + 1]
    return (np.tensordot(d, R, 1), np.tensordot(q, R, 1),
            np.tensordot(d, dR, 1) / J, np.tensordot(q, dR, 1) / J)


def surface_fields(sol: SurfaceSolution, xi: float) -> SurfaceFieldSample:
    curve = sol.curve
    span, tab = nurbs_basis_derivs(curve, xi, 1)
    s = span_samples(curve, span, np.array([float(xi)]))
    sig, om, dsig, dom = (float(v[0]) for v in _coefficient_values(sol, span, tab[:, 0:1],
                                                                    tab[:, 1:2], s.jacobian))
    k = float(s.inv_radius[0])
    s0 = sol.surface.sigma0
    jl = dsig + s0 * om * k
    jn = -sig * k + s0 * dom
    stiff = sol.surface.stiffness
    eps = (sig - s0) / stiff if stiff > 0 else math.nan
    s_t = curve.arc_length(xi) / curve.length
    return SurfaceFieldSample(float(xi), s_t, s.point[0], sig, om, dsig, dom, eps, jl, jn)


def surface_profile(sol: SurfaceSolution, xi) -> dict[str, np.ndarray]:
    """Column arrays of :func:`surface_fields` over many parameters."""
    rows = [surface_fields(sol, float(x)) for x in np.asarray(xi, dtype=float)]
    return {
        "xi": np.array([r.xi for r in rows]),
        "s_tilde": np.array([r.s_tilde for r in rows]),
        "x1": np.array([r.point[0] for r in rows]),
        "x2": np.array([r.point[1] for r in rows]),
        "sigma_s": np.array([r.sigma_s for r in rows]),
        "omega_s": np.array([r.omega_s for r in rows]),
        "dt_l": np.array([r.jump_l for r in rows]),
        "dt_n": np.array([r.jump_n for r in rows]),
    }


def von_mises(sigma: np.ndarray, sigma33) -> np.ndarray:
    """Plane-strain Von Mises value from (..., 2, 2) in-plane stresses."""
    s11, s22, s12 = sigma[..., 0, 0], sigma[..., 1, 1], sigma[..., 0, 1]
    return np.sqrt(0.5 * ((s11 - s22) ** 2 + (s22 - sigma33) ** 2 + (sigma33 - s11) ** 2)
                   + 3 * s12 ** 2)


def farfield_von_mises(load, nu: float) -> float:
    S = load.tensor
    return float(von_mises(S, nu * (S[0, 0] + S[1, 1])))


def relative_von_mises(sigma: np.ndarray, load, nu: float) -> np.ndarray:
    ref = farfield_von_mises(load, nu)
    if ref == 0:
        raise ValueError("far-field Von Mises stress is zero; relative value undefined")
    s33 = nu * (sigma[..., 0, 0] + sigma[..., 1, 1])
    return von_mises(sigma, s33) / ref


class FieldEvaluator:
    """Single-layer potential of the solved traction jump.

    Elements use ``order``-point Gauss rules; for points within two element
    lengths of an element, that element is integrated with pieces refined
    toward the point until each piece is shorter than its distance.
    """

    def __init__(self, sol: SurfaceSolution, order: int = 32, max_depth: int = 30):
        self.sol = sol
        self.order = order
        self.max_depth = max_depth
        self.bulk = sol.bulk
        self.mesh = make_mesh(sol.curve)
        rule = gauss_legendre(order)
        ys, wts, jumps = [], [], []
        for (a, b), span in zip(self.mesh.elements, self.mesh.spans):
            x, w = rule.mapped(a, b)
            y, dsw, dt = self._nodes(int(span), x, w)
            ys.append(y)
            wts.append(dsw)
            jumps.append(dt)
        self._y = np.array(ys)       # (Ne, Q, 2)
        self._dsw = np.array(wts)    # (Ne, Q)
        self._dt = np.array(jumps)   # (Ne, Q, 2)
        self._elem_len = self._dsw.sum(axis=1)
        self._near_cache: dict = {}

    def _nodes(self, span, x, w):
        sol = self.sol
        s = span_samples(sol.curve, span, x)
        sig, om, dsig, dom = _coefficient_values(sol, span, s.basis, s.dbasis, s.jacobian)
        s0 = sol.surface.sigma0
        jl = dsig + s0 * om * s.inv_radius
        jn = -sig * s.inv_radius + s0 * dom
        dt = jl[:, None] * s.tangent + jn[:, None] * s.normal
        return s.point, w * s.jacobian, dt

    @cached_property
    def _polyline(self):
        """Chords of 16 sub-intervals per element, for distance checks."""
        curve = self.sol.curve
        pts = []
        for (a, b), span in zip(self.mesh.elements, self.mesh.spans):
            pts.append(span_samples(curve, int(span), np.linspace(a, b, 17)).point)
        P = np.array(pts)
        return P[:, :-1], P[:, 1:]

    def _distances(self, X):
        """Distance from each point to each element, shape (m, Ne); exact
        for straight elements, within the chord sag otherwise."""
        P0, P1 = self._polyline
        D = P1 - P0
        dd = np.einsum("esi,esi->es", D, D)
        out = np.empty((len(X), len(P0)))
        step = max(1, 400000 // P0[..., 0].size)
        for start in range(0, len(X), step):
            xs = X[start:start + step]
            R = xs[:, None, None, :] - P0[None]
            t = np.clip(np.einsum("mesi,esi->mes", R, D) / dd, 0.0, 1.0)
            E = R - t[..., None] * D
            out[start:start + step] = np.sqrt(np.einsum("mesi,mesi->mes", E, E)).min(axis=2)
        return out

    def _refined(self, x, e, lo, hi, depth):
        """Adaptive nodes for element e on [lo, hi] around point x."""
        span = int(self.mesh.spans[e])
        xs = np.linspace(lo, hi, 9)
        s = span_samples(self.sol.curve, span, xs)
        plen = np.sum(np.linalg.norm(np.diff(s.point, axis=0), axis=1))
        dist = np.linalg.norm(s.point - x, axis=1).min()
        if dist > plen or depth >= self.max_depth:
            xg, wg = gauss_legendre(self.order).mapped(lo, hi)
            return [self._nodes(span, xg, wg)]
        mid = 0.5 * (lo + hi)
        return self._refined(x, e, lo, mid, depth + 1) + self._refined(x, e, mid, hi, depth + 1)

    def _check_near(self, X, dist):
        bad = dist < NEAR_FIELD_FRACTION * self._elem_len[None]
        if np.any(bad):
            i = int(np.nonzero(bad.any(axis=1))[0][0])
            raise NearSurfaceError(f"point {X[i]} lies within the near-field threshold of the surface")

    def _integrate(self, X, kernel, check=True):
        """Sum of kernel(rho, dt) * ds over the curve for each point in X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dist = self._distances(X)
        if check:
            self._check_near(X, dist)
        near = dist < 2.0 * self._elem_len[None]
        parts = []
        chunk = max(1, 200000 // self._dsw.size)
        for start in range(0, len(X), chunk):
            xs = X[start:start + chunk]
            mask = ~near[start:start + chunk]            # (c, Ne)
            rho = xs[:, None, None, :] - self._y[None]   # (c, Ne, Q, 2)
            w = self._dsw[None] * mask[:, :, None]
            parts.append(kernel(rho, self._dt[None], w))
        out = np.concatenate(parts)
        for i, e in zip(*np.nonzero(near)):
            key = (X[i, 0], X[i, 1], int(e))
            nodes = self._near_cache.get(key)
            if nodes is None:
                a, b = self.mesh.elements[e]
                y, dsw, dt = (np.concatenate(v) for v in zip(*self._refined(X[i], e, a, b, 0)))
                nodes = self._near_cache[key] = (y, dsw, dt)
                if len(self._near_cache) > 200000:
                    self._near_cache.clear()
            y, dsw, dt = nodes
            rho = (X[i] - y)[None, None]
            out[i] += kernel(rho, dt[None, None], dsw[None, None])[0]
        return out

    def displacement(self, X) -> np.ndarray:
        """u(x) for points X of shape (m, 2)."""
        kap = self.bulk.kappa

        def kern(rho, dt, w):
            r1, r2 = rho[..., 0], rho[..., 1]
            rr = r1 * r1 + r2 * r2
            a = w / rr
            rd = (r1 * dt[..., 0] + r2 * dt[..., 1]) * a
            lg = -0.5 * kap * np.log(rr) * w
            u1 = (lg * dt[..., 0] + rd * r1).sum(axis=(-1, -2))
            u2 = (lg * dt[..., 1] + rd * r2).sum(axis=(-1, -2))
            return np.stack([u1, u2], axis=-1)

        X = np.atleast_2d(np.asarray(X, dtype=float))
        u = self._integrate(X, kern) * self.bulk.kelvin_factor
        G = farfield_gradient(self.sol.load, self.bulk)
        return X @ G.T + u

    def gradient(self, X) -> np.ndarray:
        """Displacement gradient du_k/dx_m, shape (m, 2, 2).

        Closed-form contraction of the Kelvin kernel derivative with the
        traction jump: for rho = x - y,
        dG_kj/dx_m dt_j ~ (-kappa dt_k rho_m + delta_km (rho.dt) + rho_k dt_m) / rho^2
        - 2 rho_k rho_m (rho.dt) / rho^4.
        """
        kap = self.bulk.kappa

        def kern(rho, dt, w):
            r = (rho[..., 0], rho[..., 1])
            t = (dt[..., 0], dt[..., 1])
            rr = r[0] * r[0] + r[1] * r[1]
            a = w / rr
            rd = r[0] * t[0] + r[1] * t[1]
            b = -2.0 * rd * a / rr
            out = np.empty(rho.shape[:-3] + (2, 2))
            for k in range(2):
                for m in range(2):
                    v = a * (r[k] * t[m] - kap * t[k] * r[m]) + b * r[k] * r[m]
                    if k == m:
                        v = v + a * rd
                    out[..., k, m] = v.sum(axis=(-1, -2))
            return out

        X = np.atleast_2d(np.asarray(X, dtype=float))
        g = self._integrate(X, kern) * self.bulk.kelvin_factor
        return g + farfield_gradient(self.sol.load, self.bulk)

    def stress(self, X) -> dict[str, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        g = self.gradient(X)
        eps = 0.5 * (g + np.swapaxes(g, -1, -2))
        sig = hooke(eps, self.bulk)
        nu = self.bulk.nu
        s33 = nu * (sig[:, 0, 0] + sig[:, 1, 1])
        vm = von_mises(sig, s33)
        ref = farfield_von_mises(self.sol.load, nu)
        rel = vm / ref if ref > 0 else np.full_like(vm, np.nan)
        return {"eps": eps, "sigma": sig, "sigma33": s33, "von_mises": vm,
                "relative_von_mises": rel}


def _evaluator(sol: SurfaceSolution) -> FieldEvaluator:
    ev = sol.__dict__.get("_field_evaluator")
    if ev is None:
        ev = FieldEvaluator(sol)
        sol.__dict__["_field_evaluator"] = ev
    return ev


def displacement_at(sol: SurfaceSolution, x) -> np.ndarray:
    return _evaluator(sol).displacement(np.asarray(x, dtype=float)[None])[0]


def stress_at(sol: SurfaceSolution, x) -> FieldSample:
    ev = _evaluator(sol)
    x = np.asarray(x, dtype=float)
    u = ev.displacement(x[None])[0]
    f = ev.stress(x[None])
    ref = farfield_von_mises(sol.load, sol.bulk.nu)
    if ref == 0:
        raise ValueError("far-field Von Mises stress is zero; relative value undefined")
    return FieldSample(x, u, f["eps"][0], f["sigma"][0], float(f["sigma33"][0]),
                       float(f["von_mises"][0]), float(f["relative_von_mises"][0]))


def bie_residual(sol: SurfaceSolution, xi: float, disc: Discretization | None = None,
                 n_scale: int = 200) -> tuple[float, float]:
    """Defect of both continuous equations at ``xi`` for the solved densities,
    normalised by the maximum magnitude of sigma_S and omega_S."""
    disc = disc or Discretization(sol.curve, sol.bulk, sol.surface, sol.load, sol.quad)
    rs, rw, bs, bw = disc.rows(float(xi))
    X = np.concatenate([sol.d, sol.q])
    a, b = sol.curve.domain
    prof = surface_profile(sol, np.linspace(a, b, n_scale))
    smax = np.abs(prof["sigma_s"]).max()
    wmax = np.abs(prof["omega_s"]).max()
    res_s = (rs @ X - bs) / smax if smax > 0 else rs @ X - bs
    res_w = (rw @ X - bw) / wmax if wmax > 0 else rw @ X - bw
    return float(res_s), float(res_w)
