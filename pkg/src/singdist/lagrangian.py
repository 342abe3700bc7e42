"""Assembly of every constrained/unconstrained critical-point problem.

Each framework interpretation spawns a family of optimization problems:
the closest regular point on the singularity variety, the closest regular
point on a collinearity variety (pin-jointed sides only), and the
singular strata of those varieties (all anchors collinear; a side
degenerating to a point).  Problems with a rigid platform are always
rewritten as rigid-base problems of the inverse motion.

An assembled problem carries the structural system description (for the
fast evaluator), the parameter map that produces pose and generic
instances, the published variable grouping, and enough metadata to
expand solutions back to full configurations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .energy import density, interpretation_members
from .evaluation import (
    BarSpec,
    ConstraintSpec,
    EnergySystemSpec,
    PlateSpec,
    PtConst,
    PtParam,
    PtPointBased,
    PtVar,
    PtVarOffset,
    materialize_system,
)
from .model import (
    ConfigurationVector,
    Interpretation,
    ManipulatorDesign,
    SideKind,
    normalize_to_frame,
)
from .polysys import PolynomialSystem

__all__ = [
    "ProblemKind",
    "AssembledProblem",
    "EmptyStratum",
    "build_regular_V",
    "build_singular_V",
    "build_regular_coll",
    "build_singular_coll",
    "strata_problems",
]


PLATE = SideKind.PLATE
TRI = SideKind.BAR_TRIANGLE
RIGID = SideKind.RIGID


@dataclass(frozen=True)
class ProblemKind:
    """Which stratum of which interpretation a problem belongs to."""

    stratum: str                       # regular-V | singular-V | regular-coll | singular-coll
    interpretation: Interpretation     # as requested (before inverse-motion rewriting)
    side: str | None = None            # for collinearity strata: base | platform
    branch: int = 0                    # +-1 for the rigid/rigid collinear stratum

    @property
    def tag(self) -> str:
        bits = [self.stratum, self.interpretation.label]
        if self.side:
            bits.append(self.side)
        if self.branch:
            bits.append("plus" if self.branch > 0 else "minus")
        return ":".join(bits)


# parameter slot descriptors: ("len", i, j) | ("coord", i, comp) |
# ("evec", i, j, comp) | ("x5",) | ("x6",) | ("y6",)
Descriptor = tuple


def _theta_from_points(descriptors: Sequence[Descriptor], pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=complex).reshape(6, 2)

    def length(i, j):
        d = pts[i - 1] - pts[j - 1]
        return np.sqrt(d[0] * d[0] + d[1] * d[1])

    out = np.empty(len(descriptors), dtype=complex)
    for s, desc in enumerate(descriptors):
        kind = desc[0]
        if kind == "len":
            out[s] = length(desc[1], desc[2])
        elif kind == "coord":
            out[s] = pts[desc[1] - 1, desc[2]]
        elif kind == "evec":
            out[s] = pts[desc[2] - 1, desc[3]] - pts[desc[1] - 1, desc[3]]
        elif kind == "x5":
            out[s] = length(4, 5)
        elif kind == "x6":
            u = pts[4] - pts[3]
            w = pts[5] - pts[3]
            out[s] = (u[0] * w[0] + u[1] * w[1]) / length(4, 5)
        elif kind == "y6":
            u = pts[4] - pts[3]
            w = pts[5] - pts[3]
            out[s] = (u[0] * w[1] - u[1] * w[0]) / length(4, 5)
        else:
            raise ValueError(f"unknown descriptor {desc!r}")
    return out


class _SlotTable:
    """Deduplicating registry of parameter slots."""

    def __init__(self):
        self.descriptors: list[Descriptor] = []
        self._index: dict[Descriptor, int] = {}

    def slot(self, *desc) -> int:
        desc = tuple(desc)
        if desc not in self._index:
            self._index[desc] = len(self.descriptors)
            self.descriptors.append(desc)
        return self._index[desc]

    def names(self) -> tuple[str, ...]:
        return tuple("_".join(str(x) for x in d) for d in self.descriptors)


@dataclass
class EmptyStratum:
    """Explicit marker: the stratum is empty for this design at real poses."""

    kind: ProblemKind
    reason: str

    applicable: bool = False


@dataclass
class AssembledProblem:
    """A square critical-point system ready for tracking and post-processing."""

    kind: ProblemKind
    interp_solved: Interpretation
    inverted: bool
    spec: EnergySystemSpec
    descriptors: tuple[Descriptor, ...]
    pose_config: ConfigurationVector       # in the solved frame
    design_solved: ManipulatorDesign
    grouping: list[list[str]] | None = None
    applicable: bool = True
    note: str = ""

    @property
    def unknowns(self) -> tuple[str, ...]:
        return self.spec.unknowns

    @property
    def n_coords(self) -> int:
        return self.spec.n_coords

    def pose_theta(self) -> np.ndarray:
        return _theta_from_points(self.descriptors, self.pose_config.as_array())

    def generic_theta(self, generic_points: np.ndarray) -> np.ndarray:
        return _theta_from_points(self.descriptors, generic_points)

    def system_at(self, theta: np.ndarray) -> PolynomialSystem:
        return materialize_system(self.spec, theta, grouping=self.grouping)

    def expand(self, z: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
        """Full six-point configuration (complex 6x2) for one solution vector."""
        from .evaluation import _eval_point  # internal reuse

        theta = self.pose_theta() if theta is None else np.asarray(theta, dtype=complex)
        Z = np.asarray(z, dtype=complex)[None, :]
        th = lambda s: theta[s]
        dth = lambda s: 0.0
        pts = np.empty((6, 2), dtype=complex)
        for a, spc in enumerate(self.spec.points):
            pe = _eval_point(spc, Z, th, dth, need_dh=False)
            pts[a, 0] = np.asarray(pe.x).reshape(-1)[0] if np.ndim(pe.x) else pe.x
            pts[a, 1] = np.asarray(pe.y).reshape(-1)[0] if np.ndim(pe.y) else pe.y
        return pts

    def density_at(self, z: np.ndarray) -> float:
        """True (volume-normalized) density of an expanded real solution."""
        pts = self.expand(z)
        return density(self.interp_solved, self.pose_config, pts.real)

    def fingerprint(self) -> str:
        text = "|".join(
            [
                self.kind.stratum,
                self.interp_solved.label,
                self.kind.side or "",
                str(self.kind.branch),
                ",".join(self.spec.unknowns),
                repr(self.spec.points),
                repr(self.spec.bars),
                repr(self.spec.plates),
                repr(self.spec.constraints),
                ",".join("_".join(map(str, d)) for d in self.descriptors),
            ]
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# shared construction helpers
# ---------------------------------------------------------------------------


def _design_from_config(K: ConfigurationVector) -> ManipulatorDesign:
    pts = K.as_array()
    x2, x3, y3 = pts[1, 0], pts[2, 0], pts[2, 1]
    u = pts[4] - pts[3]
    x5 = float(np.hypot(*u))
    w = pts[5] - pts[3]
    x6 = float(u @ w) / x5
    y6 = float(u[0] * w[1] - u[1] * w[0]) / x5
    return ManipulatorDesign(x2=float(x2), x3=float(x3), y3=float(y3), x5=x5, x6=x6, y6=y6)


def _invert_config(K: ConfigurationVector) -> ConfigurationVector:
    swapped = K.swapped_sides().as_array()
    return ConfigurationVector.from_array(normalize_to_frame(swapped))


def _normalize_rigid_base(interp: Interpretation, K: ConfigurationVector):
    """Rewrite so the rigid side (if exactly one) is the base."""
    if interp.platform is RIGID and interp.base is not RIGID:
        return interp.inverted(), _invert_config(K), True
    return interp, K, False


def _base_pins(slots: _SlotTable, with_d3=True):
    pins = {
        "c2": slots.slot("coord", 2, 0),
        "c3": slots.slot("coord", 3, 0),
    }
    if with_d3:
        pins["d3"] = slots.slot("coord", 3, 1)
    return pins


def _leg_bars(slots: _SlotTable) -> list[BarSpec]:
    return [BarSpec(i, i + 3, slots.slot("len", i, i + 3)) for i in (1, 2, 3)]


def _platform_edge_bars(slots: _SlotTable) -> list[BarSpec]:
    return [BarSpec(i, j, slots.slot("len", i, j)) for i, j in ((4, 5), (4, 6), (5, 6))]


def _base_edge_bars(slots: _SlotTable) -> list[BarSpec]:
    return [BarSpec(i, j, slots.slot("len", i, j)) for i, j in ((1, 2), (2, 3), (1, 3))]


def _plate(slots: _SlotTable, tri: tuple[int, int, int]) -> PlateSpec:
    i, j, k = tri
    g = (
        slots.slot("evec", i, j, 0),
        slots.slot("evec", i, j, 1),
        slots.slot("evec", i, k, 0),
        slots.slot("evec", i, k, 1),
    )
    vol = (
        slots.slot("len", i, j),
        slots.slot("len", i, k),
        slots.slot("len", j, k),
    )
    return PlateSpec(tri=tri, g_slots=g, vol_slots=vol)


def _members_bars_plates(interp: Interpretation, slots: _SlotTable, skip_base_bars=False):
    """Bars and plates of the deformation energy for one interpretation."""
    bars_set, plates_idx, _ = interpretation_members(interp)
    bars: list[BarSpec] = []
    for i, j in bars_set:
        if skip_base_bars and j <= 3:
            continue  # both endpoints collapsed to constants: no gradient
        bars.append(BarSpec(i, j, slots.slot("len", i, j)))
    plates = tuple(_plate(slots, tri) for tri in plates_idx)
    return tuple(bars), plates


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_regular_V(interp: Interpretation, K: ConfigurationVector) -> AssembledProblem:
    """Critical points of the density on the smooth part of V = 0."""
    kind = ProblemKind("regular-V", interp)
    interp2, K2, inverted = _normalize_rigid_base(interp, K)
    design = _design_from_config(K2)
    slots = _SlotTable()

    if interp2.base is RIGID and interp2.platform is RIGID:
        pins = _base_pins(slots)
        x5s, x6s, y6s = slots.slot("x5"), slots.slot("x6"), slots.slot("y6")
        points = (
            PtConst(),
            PtParam(pins["c2"]),
            PtParam(pins["c3"], pins["d3"]),
            PtVar(0, 1),
            PtVar(2, 3),
            PtPointBased(0, 1, 2, 3, x5s, x6s, y6s),
        )
        bars = tuple(_leg_bars(slots))
        spec = EnergySystemSpec(
            unknowns=("c4", "d4", "c5", "d5", "kappa", "lambda"),
            n_coords=4,
            points=points,
            bars=bars,
            plates=(),
            constraints=(
                ConstraintSpec("E", mult_var=4, x5_slot=x5s),
                ConstraintSpec("V", mult_var=5),
            ),
            param_names=slots.names(),
        )
        grouping = [["c4", "d4", "c5", "d5"], ["kappa", "lambda"]]
    elif interp2.base is RIGID:
        pins = _base_pins(slots)
        points = (
            PtConst(),
            PtParam(pins["c2"]),
            PtParam(pins["c3"], pins["d3"]),
            PtVar(0, 1),
            PtVar(2, 3),
            PtVar(4, 5),
        )
        bars, plates = _members_bars_plates(interp2, slots)
        spec = EnergySystemSpec(
            unknowns=("c4", "d4", "c5", "d5", "c6", "d6", "lambda"),
            n_coords=6,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(ConstraintSpec("V", mult_var=6),),
            param_names=slots.names(),
        )
        grouping = None  # total degree is the published minimal choice
    else:
        points = (
            PtConst(),
            PtVar(0, -1),
            PtVar(1, 2),
            PtVar(3, 4),
            PtVar(5, 6),
            PtVar(7, 8),
        )
        bars, plates = _members_bars_plates(interp2, slots)
        coords = ("c2", "c3", "d3", "c4", "d4", "c5", "d5", "c6", "d6")
        spec = EnergySystemSpec(
            unknowns=coords + ("lambda",),
            n_coords=9,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(ConstraintSpec("V", mult_var=9),),
            param_names=slots.names(),
        )
        grouping = [list(coords), ["lambda"]]

    return AssembledProblem(
        kind=kind,
        interp_solved=interp2,
        inverted=inverted,
        spec=spec,
        descriptors=tuple(slots.descriptors),
        pose_config=K2,
        design_solved=design,
        grouping=grouping,
    )


def build_singular_V(
    interp: Interpretation, K: ConfigurationVector, branch: int = 1
) -> AssembledProblem:
    """The all-anchors-collinear stratum (the singular points of V = 0).

    For rigid sides the stratum is empty unless that side's anchor triangle
    is itself collinear; such designs are rejected at construction, so the
    returned problem is then flagged not applicable (its generic instance
    can still be solved ab initio).
    """
    kind = ProblemKind("singular-V", interp, branch=branch if _both_rigid(interp) else 0)
    interp2, K2, inverted = _normalize_rigid_base(interp, K)
    design = _design_from_config(K2)
    slots = _SlotTable()

    if interp2.base is RIGID and interp2.platform is RIGID:
        pins = _base_pins(slots, with_d3=False)
        x5s, x6s = slots.slot("x5"), slots.slot("x6")
        sign = 1.0 if branch >= 0 else -1.0
        points = (
            PtConst(),
            PtParam(pins["c2"]),
            PtParam(pins["c3"]),
            PtVar(0, -1),
            PtVarOffset(0, x5s, sign),
            PtVarOffset(0, x6s, sign),
        )
        spec = EnergySystemSpec(
            unknowns=("c4",),
            n_coords=1,
            points=points,
            bars=tuple(_leg_bars(slots)),
            plates=(),
            constraints=(),
            param_names=slots.names(),
        )
        applicable = False
        note = "collinear-legs stratum empty: both sides rigid with non-collinear design"
    elif interp2.base is RIGID:
        pins = _base_pins(slots, with_d3=False)
        points = (
            PtConst(),
            PtParam(pins["c2"]),
            PtParam(pins["c3"]),
            PtVar(0, -1),
            PtVar(1, -1),
            PtVar(2, -1),
        )
        bars, plates = _members_bars_plates(interp2, slots)
        spec = EnergySystemSpec(
            unknowns=("c4", "c5", "c6"),
            n_coords=3,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(),
            param_names=slots.names(),
        )
        applicable = False
        note = "collinear-legs stratum empty: rigid base with non-collinear design"
    else:
        points = (
            PtConst(),
            PtVar(0, -1),
            PtVar(1, -1),
            PtVar(2, -1),
            PtVar(3, -1),
            PtVar(4, -1),
        )
        bars, plates = _members_bars_plates(interp2, slots)
        spec = EnergySystemSpec(
            unknowns=("c2", "c3", "c4", "c5", "c6"),
            n_coords=5,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(),
            param_names=slots.names(),
        )
        applicable = True
        note = ""

    return AssembledProblem(
        kind=kind,
        interp_solved=interp2,
        inverted=inverted,
        spec=spec,
        descriptors=tuple(slots.descriptors),
        pose_config=K2,
        design_solved=design,
        grouping=None,
        applicable=applicable,
        note=note,
    )


def _both_rigid(interp: Interpretation) -> bool:
    return interp.platform is RIGID and interp.base is RIGID


def build_regular_coll(
    which: str, interp: Interpretation, K: ConfigurationVector
) -> AssembledProblem:
    """Critical points of the density on a collinearity variety.

    ``which`` names the side (base/platform) whose pin-jointed triangle is
    driven collinear; that side must be a bar triangle.
    """
    if which not in ("base", "platform"):
        raise ValueError("which must be 'base' or 'platform'")
    side_kind = interp.base if which == "base" else interp.platform
    if side_kind is not TRI:
        raise ValueError("collinearity variety needs a pin-jointed bar triangle side")

    kind = ProblemKind("regular-coll", interp, side=which)
    interp2, K2, which2 = interp, K, which
    inverted = False
    # rewrite so that either (platform collapses, base rigid) or
    # (base collapses, platform deformable)
    if which == "platform" and interp.base is not RIGID:
        interp2, K2, inverted = interp.inverted(), _invert_config(K), True
        which2 = "base"
    elif which == "base" and interp.platform is RIGID:
        interp2, K2, inverted = interp.inverted(), _invert_config(K), True
        which2 = "platform"
    design = _design_from_config(K2)
    slots = _SlotTable()

    if which2 == "platform":
        # rigid base pinned, platform bar triangle driven collinear
        pins = _base_pins(slots)
        points = (
            PtConst(),
            PtParam(pins["c2"]),
            PtParam(pins["c3"], pins["d3"]),
            PtVar(0, 1),
            PtVar(2, 3),
            PtVar(4, 5),
        )
        bars, plates = _members_bars_plates(interp2, slots)
        spec = EnergySystemSpec(
            unknowns=("c4", "d4", "c5", "d5", "c6", "d6", "lambda"),
            n_coords=6,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(ConstraintSpec("C_P", mult_var=6),),
            param_names=slots.names(),
        )
        grouping = None
    else:
        points = (
            PtConst(),
            PtVar(0, -1),
            PtVar(1, 2),
            PtVar(3, 4),
            PtVar(5, 6),
            PtVar(7, 8),
        )
        bars, plates = _members_bars_plates(interp2, slots)
        coords = ("c2", "c3", "d3", "c4", "d4", "c5", "d5", "c6", "d6")
        spec = EnergySystemSpec(
            unknowns=coords + ("lambda",),
            n_coords=9,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(ConstraintSpec("C_B", mult_var=9),),
            param_names=slots.names(),
        )
        grouping = [list(coords), ["lambda"]]

    return AssembledProblem(
        kind=kind,
        interp_solved=interp2,
        inverted=inverted,
        spec=spec,
        descriptors=tuple(slots.descriptors),
        pose_config=K2,
        design_solved=design,
        grouping=grouping,
    )


def build_singular_coll(
    which: str, interp: Interpretation, K: ConfigurationVector
) -> AssembledProblem:
    """The point-degeneration strata of the collinearity varieties."""
    if which not in ("base", "platform"):
        raise ValueError("which must be 'base' or 'platform'")
    side_kind = interp.base if which == "base" else interp.platform
    if side_kind is not TRI:
        raise ValueError("point degeneration needs a pin-jointed bar triangle side")

    kind = ProblemKind("singular-coll", interp, side=which)
    interp2, K2, which2 = interp, K, which
    inverted = False
    if which == "platform" and interp.base is not RIGID:
        interp2, K2, inverted = interp.inverted(), _invert_config(K), True
        which2 = "base"
    elif which == "base" and interp.platform is RIGID:
        interp2, K2, inverted = interp.inverted(), _invert_config(K), True
        which2 = "platform"
    design = _design_from_config(K2)
    slots = _SlotTable()

    if which2 == "base":
        # base collapses to a point at the origin; d4 = 0 fixes the rotation
        points = (
            PtConst(),
            PtConst(),
            PtConst(),
            PtVar(0, -1),
            PtVar(1, 2),
            PtVar(3, 4),
        )
        bars, plates = _members_bars_plates(interp2, slots, skip_base_bars=True)
        spec = EnergySystemSpec(
            unknowns=("c4", "c5", "d5", "c6", "d6"),
            n_coords=5,
            points=points,
            bars=bars,
            plates=plates,
            constraints=(),
            param_names=slots.names(),
        )
    else:
        # platform collapses to a single point (c, d); base rigidly pinned
        pins = _base_pins(slots)
        points = (
            PtConst(),
            PtParam(pins["c2"]),
            PtParam(pins["c3"], pins["d3"]),
            PtVar(0, 1),
            PtVar(0, 1),
            PtVar(0, 1),
        )
        bars = tuple(_leg_bars(slots))
        spec = EnergySystemSpec(
            unknowns=("c", "d"),
            n_coords=2,
            points=points,
            bars=bars,
            plates=(),
            constraints=(),
            param_names=slots.names(),
        )

    return AssembledProblem(
        kind=kind,
        interp_solved=interp2,
        inverted=inverted,
        spec=spec,
        descriptors=tuple(slots.descriptors),
        pose_config=K2,
        design_solved=design,
        grouping=None,
    )


def strata_problems(interp: Interpretation, K: ConfigurationVector) -> dict:
    """All strata of one interpretation, keyed by a short name.

    Collinearity strata exist only for bar-triangle sides; the singular
    stratum of V is an explicit empty marker when a rigid side blocks it.
    """
    problems: dict[str, AssembledProblem] = {}
    problems["regular-V"] = build_regular_V(interp, K)
    if _both_rigid(interp):
        for branch in (+1, -1):
            name = "singular-V:" + ("plus" if branch > 0 else "minus")
            problems[name] = build_singular_V(interp, K, branch=branch)
    else:
        problems["singular-V"] = build_singular_V(interp, K)
    if interp.platform is TRI:
        problems["regular-coll:platform"] = build_regular_coll("platform", interp, K)
        problems["singular-coll:platform"] = build_singular_coll("platform", interp, K)
    if interp.base is TRI:
        problems["regular-coll:base"] = build_regular_coll("base", interp, K)
        problems["singular-coll:base"] = build_singular_coll("base", interp, K)
    return problems
