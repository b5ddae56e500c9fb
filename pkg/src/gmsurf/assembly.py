"""Collocation discretisation of the surface-stress integral equations.

Unknowns are the control coefficients ``d`` (surface stress sigma_S) and ``q``
(the rotation-like component omega_S), both expanded in the curve's own
NURBS basis. At a curve point y0 with unit tangent t0 and normal n0 the
equations read

    sigma_S(y0) = sigma0 + S * t0 . du/ds(y0)
    omega_S(y0) = n0 . du/ds(y0)

where ``S = lambda_s + 2 mu_s`` and ``du/ds`` is the tangential derivative of
the far-field displacement plus the single-layer potential of the traction
jump (a Cauchy principal value on the curve).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import (BulkMaterial, FarFieldLoad, SurfaceMaterial, bie_kernel_vectors,
                      farfield_rhs_sigma)
from .linsolve import SingularMatrixError, lu_factor, lu_solve, relative_residual
from .nurbs import (ElementMesh, LocalFrame, NurbsCurve, find_span, frame, make_mesh,
                    nurbs_basis_derivs, span_samples, validate_for_solver)
from .quadrature import (AssemblyError, SingularPolicy, gauss_legendre, graded_pieces)


# relative distance below which a collocation parameter is treated as a knot
KNOT_SNAP = 1e-12


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    regular_order: int = 200
    policy: SingularPolicy = field(default_factory=SingularPolicy)
    # J1 at the collocation point instead of at the source point in the
    # curvature terms of the density (kept for comparison only)
    literal_jacobian: bool = False


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    n: int
    replaced_rows: tuple[int, ...] = ()


@dataclass(frozen=True)
class SurfaceSolution:
    curve: NurbsCurve
    d: np.ndarray
    q: np.ndarray
    bulk: BulkMaterial
    surface: SurfaceMaterial
    load: FarFieldLoad
    quad: QuadratureSettings = field(default_factory=QuadratureSettings)
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("d", "q"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


class Discretization:
    """Curve, mesh, materials and per-element quadrature samples.

    Holds everything needed to build a collocation row at any parameter.
    Construction validates the curve for the solver.
    """

    def __init__(self, curve: NurbsCurve, bulk: BulkMaterial, surface: SurfaceMaterial,
                 load: FarFieldLoad, quad: QuadratureSettings | None = None):
        validate_for_solver(curve)
        self.curve = curve
        self.mesh: ElementMesh = make_mesh(curve)
        self.bulk, self.surface, self.load = bulk, surface, load
        self.quad = quad or QuadratureSettings()
        self.n = curve.n
        self.p = curve.degree
        rule = gauss_legendre(self.quad.regular_order)
        self.rule = rule
        ws, pts, jac, parts = [], [], [], []
        for (a, b), span in zip(self.mesh.elements, self.mesh.spans):
            x, w = rule.mapped(a, b)
            s = span_samples(curve, int(span), x)
            ws.append(w)
            pts.append(s.point)
            jac.append(s.jacobian)
            parts.append(self._density_parts(s))
        self._w = np.array(ws)            # (Ne, Q)
        self._pts = np.array(pts)         # (Ne, Q, 2)
        self._jac = np.array(jac)         # (Ne, Q)
        # (4, Ne, p+1, Q, 2): d-part, d-curvature part, q-part, q-curvature part
        self._parts = np.array(parts).transpose(1, 0, 2, 3, 4)

    # -- density vectors -------------------------------------------------
    def _density_parts(self, s):
        """Traction-jump vectors per unit coefficient, times ds/dxi, split so
        that the coefficient-d vector is ``a_d + J b_d`` and the q vector is
        ``a_q + J b_q``:

            d_l:  R'_l t - (J/R) R_l n
            q_l:  sigma0 ((J/R) R_l t + R'_l n)
        """
        t, nrm = s.tangent, s.normal
        R, dR = s.basis, s.dbasis
        kR = s.inv_radius * R
        s0 = self.surface.sigma0
        return np.stack([dR[..., None] * t[None], -kR[..., None] * nrm[None],
                         s0 * dR[..., None] * nrm[None], s0 * kR[..., None] * t[None]])

    def _combine(self, parts, jac, jac0):
        j = jac0 if self.quad.literal_jacobian else jac
        j = np.asarray(j)[None, ..., None]
        return parts[0] + j * parts[1], parts[2] + j * parts[3]

    def _samples_densities(self, span, x, jac0):
        s = span_samples(self.curve, int(span), x)
        vd, vq = self._combine(self._density_parts(s), s.jacobian, jac0)
        return s, vd, vq

    # -- row construction -------------------------------------------------
    def _kernel_values(self, f0: LocalFrame, pts, vd, vq):
        """Integrand values with shape (4, p+1, ...) ordered
        (sigma-row d, sigma-row q, omega-row d, omega-row q)."""
        r = pts - f0.point
        ks, kw = bie_kernel_vectors(r, f0.normal_angle, self.bulk.kappa)
        return np.stack([np.einsum("...c,l...c->l...", ks, vd),
                         np.einsum("...c,l...c->l...", ks, vq),
                         np.einsum("...c,l...c->l...", kw, vd),
                         np.einsum("...c,l...c->l...", kw, vq)])

    def singular_limits(self, f0: LocalFrame, span: int) -> np.ndarray:
        """Pole strengths lim (xi - xi0) * integrand at xi0, shape (4, p+1),
        for the local bases of ``span``."""
        s, vd, vq = self._samples_densities(span, np.array([f0.xi]), f0.jacobian)
        k = self.bulk.kappa / f0.jacobian
        t0, n0 = f0.tangent, f0.normal
        return k * np.stack([vd[:, 0] @ t0, vq[:, 0] @ t0, vd[:, 0] @ n0, vq[:, 0] @ n0])

    def _piece(self, f0, span, lo, hi, rule, pole=None):
        x, w = rule.mapped(lo, hi)
        s, vd, vq = self._samples_densities(span, x, f0.jacobian)
        vals = self._kernel_values(f0, s.point, vd, vq)
        if pole is not None:
            vals = vals - pole[..., None] / (x - f0.xi)
        if not np.all(np.isfinite(vals)):
            raise AssemblyError(f"non-finite integrand on span {span}, xi0={f0.xi}")
        return vals @ w

    def _snap(self, xi0: float) -> float:
        """Move a parameter within rounding distance of a knot onto it, so
        that a point sitting on an element boundary touches both elements."""
        k = self.mesh.elements.ravel()
        a, b = self.curve.domain
        j = int(np.argmin(np.abs(k - xi0)))
        return float(k[j]) if abs(k[j] - xi0) <= KNOT_SNAP * (b - a) else float(xi0)

    def integrals(self, xi0: float) -> tuple[LocalFrame, np.ndarray]:
        """Boundary integrals at ``xi0``: array (4, n) of coefficients
        multiplying d and q in the sigma- and omega-rows (kelvin factor not
        applied)."""
        mesh, p = self.mesh, self.p
        xi0 = self._snap(xi0)
        f0 = frame(self.curve, xi0)
        el = mesh.elements
        lo_d = el[:, 0] - xi0
        hi_d = xi0 - el[:, 1]
        gap = np.maximum(np.maximum(lo_d, hi_d), 0.0)
        touching = gap == 0.0
        length = el[:, 1] - el[:, 0]
        near = (~touching) & (gap < length)
        regular = ~(touching | near)

        out = np.zeros((4, self.n))
        # regular elements: cached samples
        idx = np.nonzero(regular)[0]
        if idx.size:
            parts = self._parts[:, idx].transpose(0, 2, 1, 3, 4)
            vd, vq = self._combine(parts, self._jac[idx], f0.jacobian)
            vals = self._kernel_values(f0, self._pts[idx], vd, vq)
            if not np.all(np.isfinite(vals)):
                raise AssemblyError(f"non-finite regular integrand at xi0={xi0}")
            loc = np.einsum("klep,ep->kel", vals, self._w[idx])
            for j, e in enumerate(idx):
                out[:, mesh.connectivity[e]] += loc[:, j]
        rule = self.rule
        for e in np.nonzero(near)[0]:
            a, b = el[e]
            for lo, hi in graded_pieces(a, b, xi0, self.quad.policy.near_levels):
                out[:, mesh.connectivity[e]] += self._piece(f0, mesh.spans[e], lo, hi, rule)
        sing = np.nonzero(touching)[0]
        if sing.size:
            self._singular_part(f0, sing, out)
        return f0, out

    def _singular_part(self, f0, elems, out):
        mesh, pol = self.mesh, self.quad.policy
        srule = gauss_legendre(pol.gauss_order_singular)
        xi0 = f0.xi
        el = mesh.elements
        A, B = el[elems, 0].min(), el[elems, 1].max()
        # pole strengths per global basis
        pole = np.zeros((4, self.n))
        span0 = find_span(self.curve.knot_vector, xi0)
        pole[:, np.arange(span0 - self.p, span0 + 1)] = self.singular_limits(f0, span0)
        if xi0 <= A or xi0 >= B:
            # collocation at a tip: one-sided finite part over the tip element
            (e,) = elems
            a, b = el[e]
            conn = mesh.connectivity[e]
            pl = pole[:, conn]
            out[:, conn] += self._piece(f0, mesh.spans[e], a, b, srule, pl)
            far = b if xi0 <= a else a
            out[:, conn] += pl * np.sign(far - xi0) * math.log(abs(far - xi0))
            return
        delta = pol.delta_fraction * min(xi0 - A, B - xi0)
        lo_s, hi_s = xi0 - delta, xi0 + delta
        for e in elems:
            a, b = el[e]
            conn = mesh.connectivity[e]
            span = mesh.spans[e]
            # part of the symmetric interval inside this element
            slo, shi = max(a, lo_s), min(b, hi_s)
            if shi > slo:
                out[:, conn] += self._piece(f0, span, slo, shi, srule, pole[:, conn])
            for lo, hi in ((a, min(b, lo_s)), (max(a, hi_s), b)):
                if hi - lo > 0:
                    for plo, phi in graded_pieces(lo, hi, xi0, pol.near_levels):
                        out[:, conn] += self._piece(f0, span, plo, phi, self.rule)

    def rows(self, xi0: float) -> tuple[np.ndarray, np.ndarray, float, float]:
        """Sigma- and omega-rows (length 2n each) and their right-hand sides."""
        f0, I = self.integrals(xi0)
        n = self.n
        kf = self.bulk.kelvin_factor
        S = self.surface.stiffness
        span, tab = nurbs_basis_derivs(self.curve, f0.xi, 0)
        Rv = np.zeros(n)
        Rv[span - self.p: span + 1] = tab[:, 0]
        row_s = np.concatenate([Rv - S * kf * I[0], -S * kf * I[1]])
        row_w = np.concatenate([-kf * I[2], Rv - kf * I[3]])
        s1, s2 = farfield_rhs_sigma(self.load, self.bulk, f0.normal_angle)
        sb, cb = math.sin(f0.normal_angle), math.cos(f0.normal_angle)
        rhs_s = self.surface.sigma0 + S * (-sb * s1 + cb * s2)
        rhs_w = cb * s1 + sb * s2
        return row_s, row_w, rhs_s, rhs_w


def assemble(curve: NurbsCurve, bulk: BulkMaterial, surface: SurfaceMaterial,
             load: FarFieldLoad, quad: QuadratureSettings | None = None,
             disc: Discretization | None = None) -> LinearSystem:
    """Collocate both equations at every Greville point (no tip constraints)."""
    disc = disc or Discretization(curve, bulk, surface, load, quad)
    n = disc.n
    A = np.zeros((2 * n, 2 * n))
    B = np.zeros(2 * n)
    for a, xi in enumerate(disc.mesh.collocation):
        rs, rw, bs, bw = disc.rows(float(xi))
        A[a], A[n + a] = rs, rw
        B[a], B[n + a] = bs, bw
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(B)):
        raise AssemblyError("assembled system has non-finite entries")
    return LinearSystem(A, B, n)


def apply_tip_conditions(system: LinearSystem, curve: NurbsCurve, sigma0: float) -> LinearSystem:
    """Replace tip rows by the constraints sigma_S = 0 (and omega_S = 0 when
    sigma0 != 0)."""
    n = system.n
    A = system.matrix.copy()
    B = system.rhs.copy()
    a, b = curve.domain
    tips = []
    for idx, xi in ((0, a), (n - 1, b)):
        span, tab = nurbs_basis_derivs(curve, xi, 0)
        vals = np.zeros(n)
        vals[span - curve.degree: span + 1] = tab[:, 0]
        tips.append((idx, vals))
    replaced = []
    for idx, vals in tips:
        A[idx] = 0.0
        A[idx, :n] = vals
        B[idx] = 0.0
        replaced.append(idx)
    if sigma0 != 0:
        for idx, vals in tips:
            A[n + idx] = 0.0
            A[n + idx, n:] = vals
            B[n + idx] = 0.0
            replaced.append(n + idx)
    return LinearSystem(A, B, n, tuple(replaced))


def solve_dense(system: LinearSystem) -> tuple[np.ndarray, dict]:
    try:
        fact = lu_factor(system.matrix)
    except SingularMatrixError as exc:
        raise SolverError(str(exc)) from exc
    x = lu_solve(fact, system.rhs)
    res = relative_residual(system.matrix, x, system.rhs)
    cond = fact.condition_estimate()
    diag = {"residual": res, "condition_1norm": cond, "pivot_growth": fact.growth}
    if not res < 1e-10 and np.linalg.norm(system.rhs) > 0:
        raise SolverError(f"relative residual {res:.3e} too large (condition {cond:.3e})")
    return x, diag


def solve(curve: NurbsCurve, bulk: BulkMaterial, surface: SurfaceMaterial, load: FarFieldLoad,
          quad: QuadratureSettings | None = None) -> SurfaceSolution:
    """Assemble, constrain the tips and solve."""
    t0 = time.perf_counter()
    disc = Discretization(curve, bulk, surface, load, quad)
    system = assemble(curve, bulk, surface, load, disc=disc)
    t1 = time.perf_counter()
    system = apply_tip_conditions(system, curve, surface.sigma0)
    x, diag = solve_dense(system)
    t2 = time.perf_counter()
    diag.update(assembly_seconds=t1 - t0, solve_seconds=t2 - t1, n_control=curve.n,
                n_elements=disc.mesh.n_elements)
    n = curve.n
    return SurfaceSolution(curve, x[:n], x[n:], bulk, surface, load, disc.quad, diag)
