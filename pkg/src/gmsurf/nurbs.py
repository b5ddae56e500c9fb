"""Open-knot B-spline / NURBS curves in the plane.

Basis functions use the triangular Cox-de Boor scheme; all evaluation
routines accept either a scalar parameter or an array of parameters lying in
one knot span, which is how the assembly code samples an element.

Indices are 0-based throughout. A curve with ``n`` control points and degree
``p`` has ``n + p + 1`` knots; basis function ``i`` is supported on
``[knots[i], knots[i + p + 1])``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

# slack for parameters that drift past the domain ends by roundoff
_DOMAIN_SLACK = 1e-12
# J1 below this (in length per unit parameter) is treated as a cusp
_CUSP_TOL = 1e-12


class DomainError(ValueError):
    """Parameter outside the knot-vector domain."""


class GeometryError(ValueError):
    """Invalid or degenerate curve geometry."""


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float).copy()
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)
        p = int(self.degree)
        object.__setattr__(self, "degree", p)
        if p < 1:
            raise GeometryError(f"degree must be >= 1, got {p}")
        if k.ndim != 1 or k.size < 2 * (p + 1):
            raise GeometryError("knot vector too short for the degree")
        if np.any(np.diff(k) < 0):
            raise GeometryError("knots must be non-decreasing")
        if np.any(k[: p + 1] != k[0]) or np.any(k[-p - 1:] != k[-1]):
            raise GeometryError("knot vector must be open (clamped)")
        if not k[-1] > k[0]:
            raise GeometryError("knot vector has no span of positive length")

    @property
    def n_basis(self) -> int:
        return self.knots.size - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def unique_knots(self) -> np.ndarray:
        return np.unique(self.knots)

    def interior_multiplicities(self) -> dict[float, int]:
        vals, counts = np.unique(self.knots[self.degree + 1: -self.degree - 1],
                                 return_counts=True)
        return {float(v): int(c) for v, c in zip(vals, counts)}


@dataclass(frozen=True)
class NurbsCurve:
    knot_vector: KnotVector
    control_points: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        P = np.asarray(self.control_points, dtype=float).copy()
        if P.ndim != 2 or P.shape[1] != 2:
            raise GeometryError("control points must be an (n, 2) array")
        w = np.ones(len(P)) if self.weights is None else np.asarray(self.weights, dtype=float).copy()
        if w.shape != (len(P),):
            raise GeometryError("one weight per control point required")
        if len(P) != self.knot_vector.n_basis:
            raise GeometryError(
                f"{len(P)} control points but the knot vector defines {self.knot_vector.n_basis}")
        if np.any(w <= 0):
            raise GeometryError("weights must be strictly positive")
        P.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "control_points", P)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_arrays(cls, degree, knots, control_points, weights=None) -> "NurbsCurve":
        return cls(KnotVector(knots, degree), control_points, weights)

    @property
    def degree(self) -> int:
        return self.knot_vector.degree

    @property
    def knots(self) -> np.ndarray:
        return self.knot_vector.knots

    @property
    def n(self) -> int:
        return len(self.control_points)

    @property
    def domain(self) -> tuple[float, float]:
        return self.knot_vector.domain

    def transformed(self, matrix=None, shift=(0.0, 0.0), scale: float = 1.0) -> "NurbsCurve":
        """Affine image of the curve (exact for NURBS: act on control points)."""
        A = np.eye(2) if matrix is None else np.asarray(matrix, dtype=float)
        P = scale * self.control_points @ A.T + np.asarray(shift, dtype=float)
        return NurbsCurve(self.knot_vector, P, self.weights)

    @cached_property
    def arc_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Element breakpoints and cumulative arc length at each (64-point
        Gauss per element)."""
        from .quadrature import gauss_legendre
        mesh = make_mesh(self)
        rule = gauss_legendre(64)
        lengths = []
        for (a, b), span in zip(mesh.elements, mesh.spans):
            x, w = rule.mapped(a, b)
            lengths.append(float(span_samples(self, int(span), x).jacobian @ w))
        breaks = np.concatenate([mesh.elements[:, 0], mesh.elements[-1:, 1]])
        return breaks, np.concatenate([[0.0], np.cumsum(lengths)])

    @property
    def length(self) -> float:
        return float(self.arc_table[1][-1])

    def arc_length(self, xi: float) -> float:
        """Arc length from tip a to parameter ``xi``."""
        from .quadrature import gauss_legendre
        xi = float(_check_param(self.knot_vector, xi))
        breaks, cum = self.arc_table
        e = min(int(np.searchsorted(breaks, xi, side="right")) - 1, len(breaks) - 2)
        lo = breaks[e]
        if xi == lo:
            return float(cum[e])
        x, w = gauss_legendre(64).mapped(lo, xi)
        span = find_span(self.knot_vector, 0.5 * (lo + breaks[e + 1]))
        return float(cum[e] + span_samples(self, span, x).jacobian @ w)

    def reversed(self) -> "NurbsCurve":
        """Same point set traversed from the other tip."""
        a, b = self.domain
        knots = (a + b) - self.knots[::-1]
        return NurbsCurve(KnotVector(knots, self.degree), self.control_points[::-1],
                          self.weights[::-1])


@dataclass(frozen=True)
class CurvePoint:
    point: np.ndarray
    first_deriv: np.ndarray
    second_deriv: np.ndarray


@dataclass(frozen=True)
class LocalFrame:
    """Geometry at one curve parameter.

    ``tangent = (cos alpha, sin alpha)``, ``normal = (sin alpha, -cos alpha)``
    and ``normal_angle = alpha - pi/2``. ``inv_radius`` is the signed curvature
    d(alpha)/ds for the curve traversed in increasing parameter.
    """
    xi: float
    point: np.ndarray
    first_deriv: np.ndarray
    second_deriv: np.ndarray
    jacobian: float
    tangent_angle: float
    normal_angle: float
    inv_radius: float

    @property
    def tangent(self) -> np.ndarray:
        return np.array([math.cos(self.tangent_angle), math.sin(self.tangent_angle)])

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.sin(self.tangent_angle), -math.cos(self.tangent_angle)])


@dataclass(frozen=True)
class ElementMesh:
    """Knot spans of positive length, their active basis functions, and the
    Greville collocation parameters."""
    elements: np.ndarray      # (Ne, 2) parametric bounds
    spans: np.ndarray         # (Ne,) knot-span index of each element
    connectivity: np.ndarray  # (Ne, p + 1) global basis indices
    collocation: np.ndarray   # (n,) Greville abscissae

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def conn(self, e: int, l: int) -> int:
        return int(self.connectivity[e, l])

    def element_of(self, xi: float) -> int:
        """Index of the element whose half-open span holds ``xi`` (last element
        for the right end)."""
        e = int(np.searchsorted(self.elements[:, 1], xi, side="right"))
        return min(e, self.n_elements - 1)


# ---------------------------------------------------------------------------
# B-spline basis

def _check_param(kv: KnotVector, xi):
    a, b = kv.domain
    xi = np.asarray(xi, dtype=float)
    slack = _DOMAIN_SLACK * (b - a)
    if np.any(xi < a - slack) or np.any(xi > b + slack) or np.any(~np.isfinite(xi)):
        raise DomainError(f"parameter outside [{a}, {b}]")
    return np.clip(xi, a, b)


def find_span(kv: KnotVector, xi: float) -> int:
    """Index ``i`` with ``knots[i] <= xi < knots[i+1]``; the right end maps to
    the last span of positive length."""
    xi = float(_check_param(kv, xi))
    k, p = kv.knots, kv.degree
    n = kv.n_basis
    if xi >= k[n]:
        return n - 1
    return int(np.searchsorted(k, xi, side="right") - 1)


def _ders_basis(knots: np.ndarray, p: int, span: int, xi: np.ndarray, k: int) -> np.ndarray:
    """Nonzero basis functions and derivatives at parameters in one span.

    Returns an array of shape ``(k + 1, p + 1) + xi.shape``; entry ``[j, r]`` is
    the j-th derivative of basis ``span - p + r``.
    """
    xi = np.asarray(xi, dtype=float)
    shape = xi.shape
    ndu = np.zeros((p + 1, p + 1) + shape)
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1,) + shape)
    right = np.zeros((p + 1,) + shape)
    for j in range(1, p + 1):
        left[j] = xi - knots[span + 1 - j]
        right[j] = knots[span + j] - xi
        saved = np.zeros(shape)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            tmp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        ndu[j, j] = saved

    ders = np.zeros((k + 1, p + 1) + shape)
    for j in range(p + 1):
        ders[0, j] = ndu[j, p]
    kk = min(k, p)
    a = np.zeros((2, p + 1) + shape)
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for m in range(1, kk + 1):
            d = np.zeros(shape)
            rk, pk = r - m, p - m
            if r >= m:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = m - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, m] = -a[s1, m - 1] / ndu[pk + 1, r]
                d = d + a[s2, m] * ndu[r, pk]
            ders[m, r] = d
            s1, s2 = s2, s1
    fac = p
    for m in range(1, kk + 1):
        ders[m] *= fac
        fac *= p - m
    return ders


def bspline_basis(kv: KnotVector, xi: float) -> np.ndarray:
    """The ``p + 1`` nonzero B-spline basis values at ``xi``."""
    span = find_span(kv, xi)
    x = _check_param(kv, xi)
    return _ders_basis(kv.knots, kv.degree, span, x, 0)[0]


def bspline_basis_derivs(kv: KnotVector, xi: float, order: int) -> np.ndarray:
    """Table of shape ``(p + 1, order + 1)``: column ``j`` holds the j-th
    derivatives of the nonzero basis functions."""
    if order > kv.degree:
        warnings.warn(f"derivative order {order} exceeds degree {kv.degree}; "
                      "higher columns are zero", RuntimeWarning, stacklevel=2)
    span = find_span(kv, xi)
    x = _check_param(kv, xi)
    return _ders_basis(kv.knots, kv.degree, span, x, order).T.copy()


# ---------------------------------------------------------------------------
# NURBS basis and curve evaluation

def _rational(curve: NurbsCurve, span: int, xi, k: int) -> np.ndarray:
    """Rational basis derivatives, shape ``(k + 1, p + 1) + xi.shape``."""
    p = curve.degree
    N = _ders_basis(curve.knots, p, span, xi, k)
    w = curve.weights[span - p: span + 1]
    A = N * w.reshape((1, p + 1) + (1,) * (N.ndim - 2))
    W = A.sum(axis=1)  # W^(j)
    R = np.empty_like(N)
    for j in range(k + 1):
        acc = A[j].copy()
        for b in range(1, j + 1):
            acc -= math.comb(j, b) * W[b] * R[j - b]
        R[j] = acc / W[0]
    return R


def nurbs_basis_derivs(curve: NurbsCurve, xi: float, order: int = 0) -> tuple[int, np.ndarray]:
    """Span index and rational basis table of shape ``(p + 1, order + 1)``.

    Row ``r`` belongs to global basis ``span - p + r``.
    """
    if order > 2:
        raise ValueError("derivatives above second order are not needed here")
    span = find_span(curve.knot_vector, xi)
    x = _check_param(curve.knot_vector, xi)
    return span, _rational(curve, span, x, order).T.copy()


def _curve_ders(curve: NurbsCurve, span: int, xi, k: int = 2) -> np.ndarray:
    R = _rational(curve, span, xi, k)
    P = curve.control_points[span - curve.degree: span + 1]
    return np.einsum("jr...,rc->j...c", R, P)


def curve_eval(curve: NurbsCurve, xi: float) -> CurvePoint:
    span = find_span(curve.knot_vector, xi)
    x = float(_check_param(curve.knot_vector, xi))
    D = _curve_ders(curve, span, x, 2)
    return CurvePoint(D[0], D[1], D[2])


def curve_points(curve: NurbsCurve, xi: Iterable[float]) -> np.ndarray:
    """Points C(xi) for an arbitrary array of parameters, shape ``(m, 2)``."""
    xi = np.atleast_1d(_check_param(curve.knot_vector, xi))
    out = np.empty((xi.size, 2))
    for i, x in enumerate(xi):
        span = find_span(curve.knot_vector, x)
        out[i] = _curve_ders(curve, span, x, 0)[0]
    return out


def frame(curve: NurbsCurve, xi: float) -> LocalFrame:
    c = curve_eval(curve, xi)
    d1, d2 = c.first_deriv, c.second_deriv
    J = math.hypot(d1[0], d1[1])
    if J < _CUSP_TOL:
        raise GeometryError(f"vanishing parametric speed at xi={xi}")
    alpha = math.atan2(d1[1], d1[0])
    curv = (d1[0] * d2[1] - d1[1] * d2[0]) / J ** 3
    return LocalFrame(float(xi), c.point, d1, d2, J, alpha, alpha - math.pi / 2, curv)


@dataclass(frozen=True)
class SpanSamples:
    """Vectorised geometry and basis data at parameters inside one span."""
    span: int
    xi: np.ndarray
    point: np.ndarray      # (..., 2)
    tangent: np.ndarray    # (..., 2)
    normal: np.ndarray     # (..., 2)
    jacobian: np.ndarray   # (...)
    inv_radius: np.ndarray
    basis: np.ndarray      # (p+1, ...)
    dbasis: np.ndarray     # (p+1, ...)


def span_samples(curve: NurbsCurve, span: int, xi) -> SpanSamples:
    xi = np.asarray(xi, dtype=float)
    R = _rational(curve, span, xi, 1)
    P = curve.control_points[span - curve.degree: span + 1]
    D = np.einsum("jr...,rc->j...c", _rational(curve, span, xi, 2), P)
    d1, d2 = D[1], D[2]
    J = np.hypot(d1[..., 0], d1[..., 1])
    if np.any(J < _CUSP_TOL):
        raise GeometryError("vanishing parametric speed inside a span")
    t = d1 / J[..., None]
    n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    curv = (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / J ** 3
    return SpanSamples(span, xi, D[0], t, n, J, curv, R[0], R[1])


# ---------------------------------------------------------------------------
# mesh

def greville(curve: NurbsCurve) -> np.ndarray:
    k, p = curve.knots, curve.degree
    # a-th abscissa averages knots a+1 .. a+p (1-based) = k[a : a+p] 0-based, a from 1
    return np.array([k[a + 1: a + p + 1].mean() for a in range(curve.n)])


def make_mesh(curve: NurbsCurve) -> ElementMesh:
    k, p = curve.knots, curve.degree
    spans = [i for i in range(p, curve.n) if k[i + 1] > k[i]]
    elements = np.array([[k[i], k[i + 1]] for i in spans])
    conn = np.array([[i - p + l for l in range(p + 1)] for i in spans], dtype=int)
    return ElementMesh(elements, np.array(spans, dtype=int), conn, greville(curve))


def validate_for_solver(curve: NurbsCurve) -> None:
    """Entry checks for the integral-equation solver: degree >= 2, no interior
    knot of multiplicity >= p (C0 or worse), no cusp at sampled points."""
    p = curve.degree
    if p < 2:
        raise GeometryError("the solver needs degree >= 2")
    bad = {v: m for v, m in curve.knot_vector.interior_multiplicities().items() if m >= p}
    if bad:
        raise GeometryError(f"interior knots with C0 continuity: {sorted(bad)}")
    if np.allclose(curve.control_points[0], curve.control_points[-1]):
        raise GeometryError("tips coincide; only open curves are supported")
    mesh = make_mesh(curve)
    for (a, b), span in zip(mesh.elements, mesh.spans):
        span_samples(curve, int(span), np.linspace(a, b, 7))


# ---------------------------------------------------------------------------
# plain-text curve files

def read_curve(path) -> NurbsCurve:
    """Parse a curve file::

        # comment
        degree 2
        knots 0 0 0 1 1 1
        cp 1.0 0.0 1.0
        cp 1.0 1.0 0.7071067811865476
        cp 0.0 1.0 1.0
    """
    degree = None
    knots = None
    cps = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        try:
            if key == "degree":
                degree = int(vals[0])
            elif key == "knots":
                knots = [float(v) for v in vals]
            elif key == "cp":
                if len(vals) not in (2, 3):
                    raise ValueError("cp needs x y [w]")
                x, y, *w = (float(v) for v in vals)
                cps.append((x, y, w[0] if w else 1.0))
            else:
                raise ValueError(f"unknown keyword {key!r}")
        except (ValueError, IndexError) as exc:
            raise GeometryError(f"{path}:{lineno}: {exc}") from None
    if degree is None or knots is None or not cps:
        raise GeometryError(f"{path}: needs 'degree', 'knots' and at least one 'cp' line")
    arr = np.array(cps)
    return NurbsCurve.from_arrays(degree, knots, arr[:, :2], arr[:, 2])


def write_curve(curve: NurbsCurve, path) -> None:
    lines = [f"degree {curve.degree}",
             "knots " + " ".join(repr(float(k)) for k in curve.knots)]
    for (x, y), w in zip(curve.control_points, curve.weights):
        lines.append(f"cp {float(x)!r} {float(y)!r} {float(w)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
