"""Algebraic constraint polynomials of the optimization problems.

The singularity variety V (linear dependence of the three leg lines'
Plucker coordinates), the two collinearity varieties C_B and C_P, the
rigid-platform distance constraint E, and the point-based expression of
the sixth anchor for rigid platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .energy import FREE_COORDS
from .model import ManipulatorDesign
from .polysys import Polynomial

__all__ = [
    "VarietyPolynomial",
    "singularity_expr",
    "singularity_polynomial",
    "singularity_value",
    "collinearity",
    "platform_constraint",
    "point_based_k6",
    "point_based_k6_expr",
]


@dataclass(frozen=True)
class VarietyPolynomial:
    """A constraint polynomial tagged with which variety it cuts out."""

    kind: str  # "V", "C_B", "C_P" or "E"
    poly: Polynomial


def singularity_expr(points):
    """Determinant of the three legs' Plucker coordinates.

    ``points`` is a list of six (x, y) pairs of any scalar type (numbers,
    polynomials, batched arrays).  Leg i joins point i and point i+3; its
    Plucker vector is (direction, moment) with moment = cross(base, tip).
    """
    cols = []
    for i in range(3):
        bx, by = points[i]
        px, py = points[i + 3]
        ux = px - bx
        uy = py - by
        m = bx * py - by * px
        cols.append((ux, uy, m))
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2) = cols
    return (
        a0 * (b1 * c2 - b2 * c1)
        - b0 * (a1 * c2 - a2 * c1)
        + c0 * (a1 * b2 - a2 * b1)
    )


def _free_point_exprs():
    var = lambda name: Polynomial.variable(FREE_COORDS, name)
    zero = Polynomial.zero(FREE_COORDS)
    return [
        (zero, zero),
        (var("c2"), zero),
        (var("c3"), var("d3")),
        (var("c4"), var("d4")),
        (var("c5"), var("d5")),
        (var("c6"), var("d6")),
    ]


def singularity_polynomial() -> VarietyPolynomial:
    """V over the nine free coordinates (degree 4)."""
    return VarietyPolynomial("V", singularity_expr(_free_point_exprs()))


def singularity_value(points: np.ndarray) -> float:
    """Numeric V at a 6x2 configuration array."""
    p = np.asarray(points, dtype=float).reshape(6, 2)
    return float(singularity_expr([(p[r, 0], p[r, 1]) for r in range(6)]))


def collinearity(which: str) -> VarietyPolynomial:
    """Collinearity of the base (C_B) or platform (C_P) anchor triangle.

    In the normalized frame the base condition collapses to c2*d3; the
    platform condition is the full 3x3 determinant.
    """
    var = lambda name: Polynomial.variable(FREE_COORDS, name)
    if which == "base":
        return VarietyPolynomial("C_B", var("c2") * var("d3"))
    if which == "platform":
        c4, c5, c6 = var("c4"), var("c5"), var("c6")
        d4, d5, d6 = var("d4"), var("d5"), var("d6")
        det = (c5 * d6 - c6 * d5) - (c4 * d6 - c6 * d4) + (c4 * d5 - c5 * d4)
        return VarietyPolynomial("C_P", det)
    raise ValueError("which must be 'base' or 'platform'")


def platform_constraint(design: ManipulatorDesign) -> VarietyPolynomial:
    """E = |k'_5 - k'_4|^2 - |p_5 - p_4|^2 for a rigid platform."""
    var = lambda name: Polynomial.variable(FREE_COORDS, name)
    dx = var("c5") - var("c4")
    dy = var("d5") - var("d4")
    return VarietyPolynomial("E", dx * dx + dy * dy - design.x5**2)


def point_based_k6_expr(k4, k5, x5, x6, y6):
    """Sixth anchor of a rigid platform from anchors four and five.

    Generic over the scalar type of ``k4``/``k5``; the shape parameters may
    be complex in the generic instance.  When |k5 - k4| equals x5 this is
    the unique orientation-preserving rigid placement of the third point.
    """
    c4, d4 = k4
    c5, d5 = k5
    inv = 1.0 / x5
    c6 = ((c5 - c4) * x6 + (d4 - d5) * y6) * inv + c4
    d6 = ((d5 - d4) * x6 + (c5 - c4) * y6) * inv + d4
    return c6, d6


def point_based_k6(
    k4: Sequence[float], k5: Sequence[float], design: ManipulatorDesign
) -> tuple[float, float]:
    """Numeric point-based sixth anchor (x5 = 0 is rejected at design
    construction, so the expression is total here)."""
    c6, d6 = point_based_k6_expr(
        (k4[0], k4[1]), (k5[0], k5[1]), design.x5, design.x6, design.y6
    )
    return float(c6), float(d6)
