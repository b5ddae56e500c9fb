"""Exact NURBS representations of the study geometries, h-refined to a
requested number of elements."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from ..nurbs import GeometryError, KnotVector, NurbsCurve, read_curve


class ConfigError(ValueError):
    pass


def insert_knot(curve: NurbsCurve, u: float) -> NurbsCurve:
    """Boehm insertion of one knot, done on homogeneous control points."""
    k, p = curve.knots, curve.degree
    a, b = curve.domain
    if not a < u < b:
        raise GeometryError("knot to insert must be interior")
    span = int(np.searchsorted(k, u, side="right") - 1)
    Pw = np.column_stack([curve.control_points * curve.weights[:, None], curve.weights])
    Q = np.empty((len(Pw) + 1, 3))
    Q[: span - p + 1] = Pw[: span - p + 1]
    Q[span + 1:] = Pw[span:]
    for i in range(span - p + 1, span + 1):
        alpha = (u - k[i]) / (k[i + p] - k[i])
        Q[i] = alpha * Pw[i] + (1 - alpha) * Pw[i - 1]
    new_k = np.insert(k, span + 1, u)
    return NurbsCurve(KnotVector(new_k, p), Q[:, :2] / Q[:, 2:], Q[:, 2])


def graded_breaks(n_elements: int, ratio: float = 1.0, max_ratio: float | None = None) -> np.ndarray:
    """Element boundaries on [0, 1]; lengths grow geometrically by ``ratio``
    from each tip toward the middle (``ratio = 1`` is uniform). With
    ``max_ratio`` set, growth stops once an element is ``max_ratio`` times
    the tip element, so refinement also reaches the middle of the curve."""
    if n_elements < 1:
        raise ConfigError("need at least one element")
    if ratio < 1:
        raise ConfigError("grading ratio must be >= 1")
    if max_ratio is not None and max_ratio < 1:
        raise ConfigError("max_ratio must be >= 1")
    cap = math.inf if max_ratio is None else max_ratio
    m, odd = divmod(n_elements, 2)
    half = np.minimum(ratio ** np.arange(m), cap)
    mid = [min(ratio ** m, cap)] if odd else []
    lengths = np.concatenate([half, mid, half[::-1]])
    x = np.concatenate([[0.0], np.cumsum(lengths)])
    x /= x[-1]
    x[-1] = 1.0
    return x


def refine(curve: NurbsCurve, n_elements: int, ratio: float = 1.0,
           max_ratio: float | None = None) -> NurbsCurve:
    """Insert knots so that the parameter domain [0, 1] is split per
    :func:`graded_breaks`; existing interior knots must be among the breaks
    or are kept as extra element boundaries."""
    for u in graded_breaks(n_elements, ratio, max_ratio)[1:-1]:
        if not np.any(np.isclose(curve.knots, u, rtol=0, atol=1e-14)):
            curve = insert_knot(curve, float(u))
    return curve


def _bezier(p0, p1, p2, w1) -> NurbsCurve:
    return NurbsCurve.from_arrays(2, [0, 0, 0, 1, 1, 1], np.array([p0, p1, p2], dtype=float),
                                  [1.0, w1, 1.0])


def segment(tip_a, tip_b) -> NurbsCurve:
    """Straight segment as a degree-2 curve with collinear, evenly spaced
    control points (linear parametrisation)."""
    a, b = np.asarray(tip_a, float), np.asarray(tip_b, float)
    if np.allclose(a, b):
        raise ConfigError("segment tips coincide")
    return _bezier(a, 0.5 * (a + b), b, 1.0)


def centered_segment(half_length: float, angle: float = 0.0, center=(0.0, 0.0)) -> NurbsCurve:
    """Segment of length ``2 * half_length`` from ``center - h e`` to
    ``center + h e`` with ``e = (cos angle, sin angle)``."""
    e = np.array([math.cos(angle), math.sin(angle)])
    c = np.asarray(center, float)
    return segment(c - half_length * e, c + half_length * e)


def ellipse_arc(a: float, b: float, t1: float, t2: float, center=(0.0, 0.0)) -> NurbsCurve:
    """Arc of ``(a cos t, b sin t)`` for t from t1 to t2 (counter-clockwise),
    as one rational quadratic Bezier segment, so the outward normal is
    ``(sin alpha, -cos alpha)``.

    A single conic segment is exact for any sweep below pi and keeps the curve
    C-infinity in the parameter.
    """
    if a <= 0 or b <= 0:
        raise ConfigError("ellipse axes must be positive")
    th = t2 - t1
    if not 0 < th < math.pi:
        raise ConfigError("arc sweep must lie in (0, pi)")
    tm = 0.5 * (t1 + t2)
    c = math.cos(th / 2)
    unit = [(math.cos(t1), math.sin(t1)), (math.cos(tm) / c, math.sin(tm) / c),
            (math.cos(t2), math.sin(t2))]
    P = np.array(unit) * [a, b] + np.asarray(center, float)
    return _bezier(P[0], P[1], P[2], c)


def circular_arc(radius: float, beta1: float, beta2: float, center=(0.0, 0.0)) -> NurbsCurve:
    """Arc whose outward normal angle runs from beta1 (tip a) to beta2 (tip b)."""
    if radius <= 0:
        raise ConfigError("radius must be positive")
    if beta2 <= beta1:
        raise ConfigError("need beta2 > beta1")
    return ellipse_arc(radius, radius, beta1, beta2, center)


def ellipse_arc_length(a: float, b: float, t1: float, t2: float) -> float:
    return quad(lambda t: math.hypot(a * math.sin(t), b * math.cos(t)), t1, t2,
                epsabs=0.0, epsrel=1e-13, limit=200)[0]


def symmetric_ellipse_arc(a: float, b: float, length: float) -> tuple[float, float]:
    """Parametric angles (t, pi - t) of the arc centred on the top of the
    ellipse with the given arc length."""
    def f(t):
        return ellipse_arc_length(a, b, t, math.pi - t) - length
    if f(1e-9) < 0:
        raise ConfigError("requested arc length exceeds half the ellipse")
    t = brentq(f, 1e-9, math.pi / 2 - 1e-12, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return t, math.pi - t


def preset_geometry(kind: str, params: dict, n_elements: int = 50, grading: float = 1.0,
                    degree: int = 2, max_grading: float | None = None) -> NurbsCurve:
    """Build a study curve and h-refine it.

    kind is one of ``segment``, ``circular_arc``, ``ellipse_arc`` or
    ``custom_file``; see the README for the parameters each accepts.
    """
    params = dict(params)
    try:
        if kind == "segment":
            if "tip_a" in params:
                curve = segment(params["tip_a"], params["tip_b"])
            else:
                curve = centered_segment(params["half_length"], params.get("angle", 0.0),
                                         params.get("center", (0.0, 0.0)))
        elif kind == "circular_arc":
            curve = circular_arc(params["radius"], params["beta1"], params["beta2"],
                                 params.get("center", (0.0, 0.0)))
        elif kind == "ellipse_arc":
            a, b = params["a"], params["b"]
            if "length" in params:
                t1, t2 = symmetric_ellipse_arc(a, b, params["length"])
            else:
                t1, t2 = params["t1"], params["t2"]
            curve = ellipse_arc(a, b, t1, t2, params.get("center", (0.0, 0.0)))
        elif kind == "custom_file":
            curve = read_curve(params["path"])
            if params.get("refine", False):
                a, b = curve.domain
                curve = NurbsCurve(KnotVector((curve.knots - a) / (b - a), curve.degree),
                                   curve.control_points, curve.weights)
                curve = refine(curve, n_elements, grading, max_grading)
            return curve
        else:
            raise ConfigError(f"unknown geometry kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"geometry {kind!r} is missing parameter {exc}") from None
    if degree != 2:
        raise ConfigError("built-in presets are quadratic")
    return refine(curve, n_elements, grading, max_grading)
