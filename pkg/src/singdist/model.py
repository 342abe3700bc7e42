"""Manipulator geometry, framework interpretations and motions.

A planar 3-RPR manipulator is described by six shape parameters (three
base anchors, three platform anchors in their normalized frames) plus a
one-parameter rigid motion of the platform.  Each pose yields a planar
framework on six points; the framework can be read in nine ways depending
on whether platform and base are an elastic plate, a pin-jointed bar
triangle, or an undeformable body.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SideKind",
    "Interpretation",
    "ALL_INTERPRETATIONS",
    "ManipulatorDesign",
    "MotionSpec",
    "ConfigurationVector",
    "InnerMetric",
    "BAR_INDEX_SETS",
    "CANONICAL_BARS",
    "anchor_positions",
    "discretize_motion",
    "inner_metric",
    "invert_interpretation",
    "normalize_to_frame",
]


class SideKind(enum.Enum):
    """How one side (platform or base) of the framework is modelled."""

    PLATE = "plate"          # deformable triangular plate
    BAR_TRIANGLE = "triangle"  # pin-jointed triangular bar structure
    RIGID = "rigid"          # undeformable body

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Interpretation:
    """One of the nine framework readings: a kind for platform and base."""

    platform: SideKind
    base: SideKind

    def inverted(self) -> "Interpretation":
        return Interpretation(platform=self.base, base=self.platform)

    @property
    def label(self) -> str:
        return f"{self.platform.value}-{self.base.value}"

    @classmethod
    def parse(cls, text: str) -> "Interpretation":
        try:
            p, b = text.strip().lower().split("-")
            return cls(SideKind(p), SideKind(b))
        except Exception as exc:
            raise ValueError(
                f"bad interpretation {text!r}; expected '<platform>-<base>' with "
                f"kinds rigid/plate/triangle"
            ) from exc

    def __str__(self):
        return self.label


ALL_INTERPRETATIONS: tuple[Interpretation, ...] = tuple(
    Interpretation(p, b) for p in SideKind for b in SideKind
)


def invert_interpretation(interp: Interpretation) -> Interpretation:
    """Swap platform and base kinds (the inverse-motion reading)."""
    return interp.inverted()


# canonical bar order of the 9-dimensional inner metric
CANONICAL_BARS: tuple[tuple[int, int], ...] = (
    (1, 2), (2, 3), (1, 3), (1, 4), (2, 5), (3, 6), (4, 5), (5, 6), (4, 6),
)

BAR_INDEX_SETS: dict[str, tuple[tuple[int, int], ...]] = {
    "I1": ((1, 4), (2, 5), (3, 6)),
    "I2": ((1, 4), (2, 5), (3, 6), (4, 5), (4, 6), (5, 6)),
    "I3": ((1, 4), (2, 5), (3, 6), (1, 2), (2, 3), (1, 3)),
    "I4": CANONICAL_BARS,
    "I5": ((4, 5), (4, 6), (5, 6)),
    "I6": ((1, 2), (2, 3), (1, 3)),
}


@dataclass(frozen=True)
class ManipulatorDesign:
    """Shape parameters of base and platform in their normalized frames.

    Base anchors: (0,0), (x2,0), (x3,y3).  Platform anchors in the moving
    frame: (0,0), (x5,0), (x6,y6).  Collinear anchor triangles (y3*y6 = 0)
    are rejected; x2, x5 > 0 fixes the orientation convention.
    """

    x2: float
    x3: float
    y3: float
    x5: float
    x6: float
    y6: float

    def __post_init__(self):
        if self.y3 == 0.0 or self.y6 == 0.0:
            raise ValueError("collinear anchor triangle (y3*y6 must be nonzero)")
        if self.x2 <= 0.0 or self.x5 <= 0.0:
            raise ValueError("x2 and x5 must be positive")

    def base_points(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.x2, 0.0], [self.x3, self.y3]])

    def platform_points_moving(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.x5, 0.0], [self.x6, self.y6]])

    def inverted(self) -> "ManipulatorDesign":
        """Swap base and platform shapes (inverse-motion manipulator)."""
        return ManipulatorDesign(
            x2=self.x5, x3=self.x6, y3=self.y6,
            x5=self.x2, x6=self.x3, y6=self.y3,
        )


EXAMPLE_DESIGN = ManipulatorDesign(x2=11.0, x3=5.0, y3=7.0, x5=3.0, x6=1.0, y6=2.0)

# a trig-polynomial term: coeff * cos(phi)^a * sin(phi)^b * phi^c
TrigTerm = tuple[int, int, int, float]


def _eval_trig_terms(terms: Sequence[TrigTerm], phi: float) -> float:
    c, s = math.cos(phi), math.sin(phi)
    total = 0.0
    for a, b, k, coeff in terms:
        total += coeff * (c**a) * (s**b) * (phi**k)
    return total


def _mul_trig(u: Sequence[TrigTerm], v: Sequence[TrigTerm]) -> tuple[TrigTerm, ...]:
    acc: dict[tuple[int, int, int], float] = {}
    for a1, b1, k1, c1 in u:
        for a2, b2, k2, c2 in v:
            key = (a1 + a2, b1 + b2, k1 + k2)
            acc[key] = acc.get(key, 0.0) + c1 * c2
    return tuple((a, b, k, c) for (a, b, k), c in acc.items() if c != 0.0)


@dataclass(frozen=True)
class MotionSpec:
    """One-parameter motion: rotation R(phi) and translation t(phi).

    R(phi) = [[A, -B], [B, A]] with A, B linear combinations of
    {cos phi, sin phi, 1}; the translation components are trig-polynomial
    term tables.  A^2 + B^2 = 1 is checked on samples so R stays a proper
    rotation over the whole interval.
    """

    # (cos coeff, sin coeff, constant) for the two rotation entries
    rot_a: tuple[float, float, float] = (1.0, 0.0, 0.0)
    rot_b: tuple[float, float, float] = (0.0, 1.0, 0.0)
    trans_x: tuple[TrigTerm, ...] = ()
    trans_y: tuple[TrigTerm, ...] = ()
    interval: tuple[float, float] = (0.0, 2.0 * math.pi)

    def __post_init__(self):
        u, v = self.interval
        if not (v > u):
            raise ValueError("empty motion interval")
        for phi in np.linspace(u, v, 17):
            a = self._entry(self.rot_a, phi)
            b = self._entry(self.rot_b, phi)
            if abs(a * a + b * b - 1.0) > 1e-9:
                raise ValueError("rotation law is not orthogonal on the interval")

    @staticmethod
    def _entry(coeffs: tuple[float, float, float], phi: float) -> float:
        cc, cs, c1 = coeffs
        return cc * math.cos(phi) + cs * math.sin(phi) + c1

    def rotation(self, phi: float) -> np.ndarray:
        a = self._entry(self.rot_a, phi)
        b = self._entry(self.rot_b, phi)
        return np.array([[a, -b], [b, a]])

    def translation(self, phi: float) -> np.ndarray:
        return np.array(
            [_eval_trig_terms(self.trans_x, phi), _eval_trig_terms(self.trans_y, phi)]
        )

    def inverted(self) -> "MotionSpec":
        """The inverse motion: R' = R^T, t' = -R^T t.

        Stays inside the trig-polynomial term-table representation.
        """
        a_terms: tuple[TrigTerm, ...] = tuple(
            t for t in (
                (1, 0, 0, self.rot_a[0]), (0, 1, 0, self.rot_a[1]), (0, 0, 0, self.rot_a[2])
            ) if t[3] != 0.0
        )
        b_terms: tuple[TrigTerm, ...] = tuple(
            t for t in (
                (1, 0, 0, self.rot_b[0]), (0, 1, 0, self.rot_b[1]), (0, 0, 0, self.rot_b[2])
            ) if t[3] != 0.0
        )
        neg = lambda terms: tuple((a, b, k, -c) for a, b, k, c in terms)
        # t' = -(A tx + B ty, -B tx + A ty)
        tx = neg(_mul_trig(a_terms, self.trans_x) + _mul_trig(b_terms, self.trans_y))
        ty = neg(_mul_trig(neg(b_terms), self.trans_x) + _mul_trig(a_terms, self.trans_y))
        return MotionSpec(
            rot_a=self.rot_a,
            rot_b=(-self.rot_b[0], -self.rot_b[1], -self.rot_b[2]),
            trans_x=tx,
            trans_y=ty,
            interval=self.interval,
        )


def example_motion() -> MotionSpec:
    """The shipped benchmark motion: R a plain rotation by phi and
    t = ((11 - 6 sin phi)/2, (3 - 3 cos phi)/2) over [0, 2*pi]."""
    return MotionSpec(
        rot_a=(1.0, 0.0, 0.0),
        rot_b=(0.0, 1.0, 0.0),
        trans_x=((0, 0, 0, 5.5), (0, 1, 0, -3.0)),
        trans_y=((0, 0, 0, 1.5), (1, 0, 0, -1.5)),
        interval=(0.0, 2.0 * math.pi),
    )


@dataclass(frozen=True)
class ConfigurationVector:
    """Fixed-frame coordinates of the six anchor points k'_1 ... k'_6."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) != 6:
            raise ValueError("a configuration has exactly six points")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ConfigurationVector":
        arr = np.asarray(arr, dtype=float).reshape(6, 2)
        return cls(tuple((float(x), float(y)) for x, y in arr))

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def point(self, i: int) -> np.ndarray:
        """1-based anchor index, matching the bar index sets."""
        return np.array(self.points[i - 1], dtype=float)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        (c1, d1), (_, d2) = self.points[0], self.points[1]
        return abs(c1) <= tol and abs(d1) <= tol and abs(d2) <= tol

    def flat(self) -> np.ndarray:
        """Interleaved (c1, d1, c2, d2, ..., c6, d6)."""
        return self.as_array().reshape(-1)

    def swapped_sides(self) -> "ConfigurationVector":
        """Relabel platform anchors as base anchors and vice versa."""
        p = self.points
        return ConfigurationVector((p[3], p[4], p[5], p[0], p[1], p[2]))


@dataclass(frozen=True)
class InnerMetric:
    """The nine bar lengths, ordered by the canonical bar list."""

    lengths: tuple[float, ...]

    def __post_init__(self):
        if len(self.lengths) != 9:
            raise ValueError("inner metric has nine entries")
        if any(v < 0 for v in self.lengths):
            raise ValueError("bar lengths must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array(self.lengths, dtype=float)

    def length(self, i: int, j: int) -> float:
        pair = (i, j) if i < j else (j, i)
        return self.lengths[CANONICAL_BARS.index(pair)]


def anchor_positions(
    design: ManipulatorDesign, motion: MotionSpec, phi: float
) -> ConfigurationVector:
    """Anchor coordinates at motion parameter phi.

    Base anchors come straight from the design; platform anchors are the
    moving-frame shape mapped through R(phi), t(phi).
    """
    base = design.base_points()
    R = motion.rotation(phi)
    t = motion.translation(phi)
    plat = design.platform_points_moving() @ R.T + t
    return ConfigurationVector.from_array(np.vstack([base, plat]))


def discretize_motion(
    motion: MotionSpec, n: int, extra: Iterable[float] = ()
) -> np.ndarray:
    """n uniform samples over the motion interval (endpoints included),
    merged and sorted with the extra values, duplicates removed."""
    if n < 2:
        raise ValueError("need at least two poses")
    u, v = motion.interval
    grid = np.linspace(u, v, n)
    allvals = np.concatenate([grid, np.fromiter(extra, dtype=float)])
    return np.unique(allvals)


def inner_metric(config: ConfigurationVector) -> InnerMetric:
    """Euclidean bar lengths of a configuration, in canonical order."""
    pts = config.as_array()
    lengths = tuple(
        float(np.hypot(*(pts[i - 1] - pts[j - 1]))) for i, j in CANONICAL_BARS
    )
    return InnerMetric(lengths)


def normalize_to_frame(points: np.ndarray) -> np.ndarray:
    """Rigidly move six points so point 1 is the origin and point 2 lies on
    the positive x-axis (the frame every optimization problem works in).

    Orientation is preserved (no reflection).
    """
    pts = np.asarray(points, dtype=float).reshape(6, 2)
    origin = pts[0]
    shifted = pts - origin
    v = shifted[1]
    r = float(np.hypot(*v))
    if r == 0.0:
        raise ValueError("first two points coincide; frame undefined")
    co, si = v[0] / r, v[1] / r
    rot = np.array([[co, si], [-si, co]])
    return shifted @ rot.T
