"""Gauss-Legendre rules and the singular-integral treatment used in assembly."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


class AssemblyError(RuntimeError):
    """Non-finite integrand or an invalid singular-integration request."""


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return len(self.points)

    def mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on [a, b]; the weights include J2 = (b - a) / 2."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.points, half * self.weights


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> QuadratureRule:
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w)


@dataclass(frozen=True)
class SingularPolicy:
    delta_fraction: float = 1.0
    gauss_order_singular: int = 64
    near_levels: int = 3

    def __post_init__(self):
        if not 0 < self.delta_fraction <= 1:
            raise ValueError("delta_fraction must lie in (0, 1]")
        if self.gauss_order_singular % 2:
            # keeps the collocation point off the node set
            raise ValueError("gauss_order_singular must be even")


def integrate_regular(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                      rule: QuadratureRule, element=None):
    x, w = rule.mapped(a, b)
    v = np.asarray(f(x))
    if not np.all(np.isfinite(v)):
        raise AssemblyError(f"non-finite integrand on element {element}")
    return np.tensordot(w, v, axes=(0, 0))


def graded_pieces(a: float, b: float, xs: float, levels: int) -> list[tuple[float, float]]:
    """Split [a, b] by repeated bisection toward whichever end is nearer to
    ``xs`` (a point outside or on the boundary of the interval)."""
    pieces = []
    lo, hi = a, b
    toward_lo = abs(xs - a) <= abs(xs - b)
    for _ in range(levels):
        mid = 0.5 * (lo + hi)
        if toward_lo:
            pieces.append((mid, hi))
            hi = mid
        else:
            pieces.append((lo, mid))
            lo = mid
    pieces.append((lo, hi))
    return sorted(pieces)


def integrate_singular(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, xs: float,
                       policy: SingularPolicy, h_limit, rule: QuadratureRule | None = None,
                       element=None):
    """Principal value of ``int_a^b f`` where ``f ~ h_limit / (xi - xs)``.

    The interval is split into ``[a, xs - d) U [xs - d, xs + d] U (xs + d, b]``
    with ``d = delta_fraction * min(xs - a, b - xs)``. Outer pieces use Gauss
    quadrature with bisection toward ``xs``; on the middle piece the pole is
    subtracted, the bounded remainder is integrated by Gauss, and the
    subtracted term integrates to zero. When ``xs`` sits on an end of the
    interval the one-sided finite part is returned (the ``log 0`` term is
    dropped, leaving ``h_limit * log(length)``).
    """
    if not a <= xs <= b:
        raise AssemblyError(f"singular point {xs} outside element [{a}, {b}] ({element})")
    rule = rule or gauss_legendre(policy.gauss_order_singular)
    h = np.asarray(h_limit, dtype=float)

    def regularised(lo, hi):
        x, w = rule.mapped(lo, hi)
        v = np.asarray(f(x))
        shape = (-1,) + (1,) * (v.ndim - 1)
        g = v - h[None, ...] / (x - xs).reshape(shape)
        if not np.all(np.isfinite(g)):
            raise AssemblyError(f"non-finite regularised integrand ({element})")
        return np.tensordot(w, g, axes=(0, 0))

    if xs == a or xs == b:
        far = b if xs == a else a
        total = regularised(a, b)
        # finite part of int h/(xi - xs) over the interval
        return total + h * np.sign(far - xs) * np.log(abs(far - xs))

    d = policy.delta_fraction * min(xs - a, b - xs)
    total = regularised(xs - d, xs + d)
    outer_rule = rule
    for lo, hi in ((a, xs - d), (xs + d, b)):
        if hi - lo <= 0:
            continue
        for plo, phi in graded_pieces(lo, hi, xs, policy.near_levels):
            total = total + integrate_regular(f, plo, phi, outer_rule, element)
    return total
