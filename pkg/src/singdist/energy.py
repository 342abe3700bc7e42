"""Green-Lagrange strain energies and the nine intrinsic density metrics.

Bars carry the classic quartic GL bar energy; triangular plates carry the
plane-strain GL energy of the affine deformation of the triangle.  Summing
over the structural members of a framework interpretation and dividing by
the total material volume yields the density used as the intrinsic
distance function.

All evaluators are written generically over the scalar type of the
deformed coordinates, so the same code produces numbers (floats/complex)
and sparse polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    BAR_INDEX_SETS,
    ConfigurationVector,
    Interpretation,
    SideKind,
)
from .polysys import Polynomial

__all__ = [
    "EnergyConventions",
    "bar_energy",
    "plate_energy",
    "plate_energy_expr",
    "triangle_volume",
    "omega",
    "density",
    "density_polynomial",
    "interpretation_members",
    "FREE_COORDS",
]

# the nine free coordinates once k'_1 = origin and k'_2 is on the x-axis
FREE_COORDS: tuple[str, ...] = ("c2", "c3", "d3", "c4", "d4", "c5", "d5", "c6", "d6")


@dataclass(frozen=True)
class EnergyConventions:
    """Material constants; every shipped computation uses area = modulus = 1."""

    area: float = 1.0
    young_modulus: float = 1.0

    def __post_init__(self):
        if self.area <= 0 or self.young_modulus <= 0:
            raise ValueError("area and Young modulus must be positive")


_DEFAULT = EnergyConventions()


def bar_energy(length: float, deformed_sq, conv: EnergyConventions = _DEFAULT):
    """GL strain energy of one bar.

    ``length`` is the undeformed length; ``deformed_sq`` the squared
    deformed length (a number or a polynomial).  Returns
    E*A*(deformed_sq - length^2)^2 / (8 length^3).
    """
    if length <= 0:
        raise ValueError("undeformed bar length must be positive")
    diff = deformed_sq - length * length
    return diff * diff * (conv.young_modulus * conv.area / (8.0 * length**3))


def triangle_volume(tri: Sequence[Sequence[float]], conv: EnergyConventions = _DEFAULT) -> float:
    """Material volume of a triangular plate: area constant times the
    perimeter (the same amount of material as the three bars)."""
    p = np.asarray(tri, dtype=float)
    per = (
        float(np.hypot(*(p[0] - p[1])))
        + float(np.hypot(*(p[0] - p[2])))
        + float(np.hypot(*(p[1] - p[2])))
    )
    return conv.area * per


def plate_energy_expr(
    tri: Sequence[Sequence[float]],
    deformed_coords,
    conv: EnergyConventions = _DEFAULT,
    volume: float | None = None,
):
    """Plate energy with deformed vertex coordinates of any scalar type.

    ``deformed_coords`` is ((x_i, y_i), (x_j, y_j), (x_k, y_k)); entries may
    be numbers or polynomials.  The undeformed triangle must be
    non-degenerate.  ``volume`` overrides the material volume (used by the
    homotopy machinery, where the volume interpolates separately).
    """
    p = np.asarray(tri, dtype=float)
    u1 = p[1] - p[0]
    u2 = p[2] - p[0]
    det = u1[0] * u2[1] - u1[1] * u2[0]
    if abs(det) < 1e-14:
        raise ValueError("degenerate undeformed triangle")
    # inverse of the undeformed edge matrix G = [u1 u2]
    g00, g01 = u2[1] / det, -u2[0] / det
    g10, g11 = -u1[1] / det, u1[0] / det

    (xi, yi), (xj, yj), (xk, yk) = deformed_coords
    e1x, e1y = xj - xi, yj - yi
    e2x, e2y = xk - xi, yk - yi
    # F = [e1 e2] @ G^{-1}
    f11 = e1x * g00 + e2x * g10
    f12 = e1x * g01 + e2x * g11
    f21 = e1y * g00 + e2y * g10
    f22 = e1y * g01 + e2y * g11
    n11 = f11 * f11 + f21 * f21
    n12 = f11 * f12 + f21 * f22
    n22 = f12 * f12 + f22 * f22
    ex = (n11 - 1.0) * 0.5
    ey = (n22 - 1.0) * 0.5
    gxy = n12 * 0.5
    quad = (ex * ex + ex * ey + ey * ey + gxy * gxy) * (2.0 / 3.0)
    vol = triangle_volume(tri, conv) if volume is None else volume
    return quad * (conv.young_modulus * vol)


def plate_energy(
    tri: Sequence[Sequence[float]],
    tri_def: Sequence[Sequence[float]],
    conv: EnergyConventions = _DEFAULT,
) -> float:
    """GL strain energy of a deformed triangular plate (numbers in/out)."""
    q = np.asarray(tri_def, dtype=float)
    return float(plate_energy_expr(tri, tuple((q[r, 0], q[r, 1]) for r in range(3)), conv))


def omega(
    config: ConfigurationVector, index: str, conv: EnergyConventions = _DEFAULT
) -> float:
    """Total material volume over one bar index set: A times the length sum."""
    if index not in BAR_INDEX_SETS:
        raise ValueError(f"unknown index set {index!r}")
    pts = config.as_array()
    total = sum(
        float(np.hypot(*(pts[i - 1] - pts[j - 1]))) for i, j in BAR_INDEX_SETS[index]
    )
    return conv.area * total


def interpretation_members(
    interp: Interpretation,
) -> tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int, int], ...], str]:
    """Structural members of an interpretation: (bars, plates, omega set)."""
    p, b = interp.platform, interp.base
    R, P, T = SideKind.RIGID, SideKind.PLATE, SideKind.BAR_TRIANGLE
    table = {
        (R, R): ("I1", (), "I1"),
        (P, R): ("I1", ((4, 5, 6),), "I2"),
        (T, R): ("I2", (), "I2"),
        (R, P): ("I1", ((1, 2, 3),), "I3"),
        (R, T): ("I3", (), "I3"),
        (P, P): ("I1", ((1, 2, 3), (4, 5, 6)), "I4"),
        (T, P): ("I2", ((1, 2, 3),), "I4"),
        (P, T): ("I3", ((4, 5, 6),), "I4"),
        (T, T): ("I4", (), "I4"),
    }
    bars_key, plates, omega_key = table[(p, b)]
    return BAR_INDEX_SETS[bars_key], plates, omega_key


def _density_expr(interp, K, deformed, conv):
    """Shared assembly of the density over generic deformed coordinates.

    ``deformed`` is a list of six (x, y) pairs of any scalar type.
    """
    bars, plates, omega_key = interpretation_members(interp)
    pts = K.as_array()
    total = 0.0
    for i, j in bars:
        ell = float(np.hypot(*(pts[i - 1] - pts[j - 1])))
        dx = deformed[i - 1][0] - deformed[j - 1][0]
        dy = deformed[i - 1][1] - deformed[j - 1][1]
        total = total + bar_energy(ell, dx * dx + dy * dy, conv)
    for tri_idx in plates:
        tri = [pts[t - 1] for t in tri_idx]
        coords = tuple(deformed[t - 1] for t in tri_idx)
        total = total + plate_energy_expr(tri, coords, conv)
    return total * (1.0 / omega(K, omega_key, conv))


def density(
    interp: Interpretation,
    K: ConfigurationVector,
    K_def: ConfigurationVector | np.ndarray,
    conv: EnergyConventions = _DEFAULT,
) -> float:
    """Strain-energy density of deforming K into K_def under one of the
    nine interpretations."""
    q = K_def.as_array() if isinstance(K_def, ConfigurationVector) else np.asarray(K_def, dtype=float)
    q = q.reshape(6, 2)
    deformed = [(q[r, 0], q[r, 1]) for r in range(6)]
    return float(_density_expr(interp, K, deformed, conv))


def density_polynomial(
    interp: Interpretation,
    K: ConfigurationVector,
    conv: EnergyConventions = _DEFAULT,
) -> Polynomial:
    """The density as a sparse polynomial in the nine free coordinates of
    the deformed configuration (normalization c1 = d1 = d2 = 0)."""
    var = lambda name: Polynomial.variable(FREE_COORDS, name)
    zero = Polynomial.zero(FREE_COORDS)
    deformed = [
        (zero, zero),
        (var("c2"), zero),
        (var("c3"), var("d3")),
        (var("c4"), var("d4")),
        (var("c5"), var("d5")),
        (var("c6"), var("d6")),
    ]
    return _density_expr(interp, K, deformed, conv)
