"""Batched numeric evaluation of the critical-point systems.

Every assembled optimization problem is a square system: the gradient of
an energy Lagrangian in the coordinate unknowns, followed by one row per
side condition.  This module evaluates such systems (values, Jacobians
and homotopy-parameter derivatives) for whole batches of points at once,
which is what makes tracking thousands of paths feasible.

Two evaluation routes exist for every problem: the structured route here
(hand-chained derivatives of bar and plate energies) and the symbolic
route (`materialize_system`, a sparse-polynomial expansion).  They must
agree to machine precision; the test suite checks exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .energy import FREE_COORDS
from .polysys import CompiledPolys, CompiledSystem, Polynomial, PolynomialSystem
from .varieties import collinearity, singularity_expr, singularity_polynomial

__all__ = [
    "PtConst",
    "PtParam",
    "PtVar",
    "PtVarOffset",
    "PtPointBased",
    "BarSpec",
    "PlateSpec",
    "ConstraintSpec",
    "EnergySystemSpec",
    "EnergySystemEvaluator",
    "FixedSystem",
    "UserHomotopy",
    "LinearHomotopy",
    "PolySystemHomotopy",
    "materialize_system",
]


# ---------------------------------------------------------------------------
# point specifications (all affine in the unknowns for fixed h)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PtConst:
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class PtParam:
    """Pinned point; coordinates come from parameter slots (sy = -1 -> 0)."""

    sx: int
    sy: int = -1


@dataclass(frozen=True)
class PtVar:
    """Free point; coordinates are unknowns (vy = -1 -> pinned to 0)."""

    vx: int
    vy: int = -1


@dataclass(frozen=True)
class PtVarOffset:
    """x = z[vx] + sign * theta[slot], y = 0 (collinear rigid platform)."""

    vx: int
    slot: int
    sign: float


@dataclass(frozen=True)
class PtPointBased:
    """Third rigid-platform anchor expressed through anchors four and five."""

    v_c4: int
    v_d4: int
    v_c5: int
    v_d5: int
    s_x5: int
    s_x6: int
    s_y6: int


PointSpec = PtConst | PtParam | PtVar | PtVarOffset | PtPointBased


@dataclass(frozen=True)
class BarSpec:
    """One GL bar: anchors i, j (1-based) and the undeformed-length slot."""

    i: int
    j: int
    len_slot: int


@dataclass(frozen=True)
class PlateSpec:
    """One triangular plate: vertex anchors, the four undeformed-edge-vector
    slots (u1x, u1y, u2x, u2y) and the three side-length slots for the
    material volume."""

    tri: tuple[int, int, int]
    g_slots: tuple[int, int, int, int]
    vol_slots: tuple[int, int, int]


@dataclass(frozen=True)
class ConstraintSpec:
    """A side condition with its Lagrange-multiplier unknown.

    kind: "V" (singularity variety), "C_P"/"C_B" (collinearity),
    "E" (rigid-platform distance; needs the x5 slot).
    """

    kind: str
    mult_var: int
    x5_slot: int = -1


@dataclass(frozen=True)
class EnergySystemSpec:
    """Structural description of one assembled critical-point system."""

    unknowns: tuple[str, ...]
    n_coords: int
    points: tuple[PointSpec, ...]
    bars: tuple[BarSpec, ...]
    plates: tuple[PlateSpec, ...]
    constraints: tuple[ConstraintSpec, ...]
    param_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.points) != 6:
            raise ValueError("exactly six anchor points expected")
        if len(self.unknowns) != self.n_coords + len(self.constraints):
            raise ValueError("multiplier count must match constraint count")

    @property
    def n_vars(self) -> int:
        return len(self.unknowns)


# ---------------------------------------------------------------------------
# compiled constraint families (value + gradient + Hessian over the nine
# free coordinates of the deformed configuration)
# ---------------------------------------------------------------------------


def _family_polys(poly: Polynomial):
    n = len(FREE_COORDS)
    grads = [poly.differentiate(v) for v in FREE_COORDS]
    hess = [
        grads[i].differentiate(FREE_COORDS[j])
        for i in range(n)
        for j in range(i, n)
    ]
    return [poly] + grads + hess


@lru_cache(maxsize=None)
def _constraint_family(kind: str) -> CompiledPolys:
    if kind == "V":
        poly = singularity_polynomial().poly
    elif kind == "C_P":
        poly = collinearity("platform").poly
    elif kind == "C_B":
        poly = collinearity("base").poly
    else:
        raise ValueError(f"no compiled family for constraint {kind!r}")
    return CompiledPolys.compile(_family_polys(poly))


_N_IN = len(FREE_COORDS)
_HESS_PAIRS = [(i, j) for i in range(_N_IN) for j in range(i, _N_IN)]


# ---------------------------------------------------------------------------
# point evaluation
# ---------------------------------------------------------------------------


class _PointEval:
    __slots__ = ("x", "y", "grads", "dx_dh", "dy_dh", "dgrads_dh")

    def __init__(self, x, y, grads, dx_dh=None, dy_dh=None, dgrads_dh=None):
        self.x = x
        self.y = y
        self.grads = grads            # {var: (gx, gy)}
        self.dx_dh = dx_dh
        self.dy_dh = dy_dh
        self.dgrads_dh = dgrads_dh    # {var: (dgx, dgy)} or None


def _eval_point(spec: PointSpec, Z, th, dth, need_dh):
    if isinstance(spec, PtConst):
        return _PointEval(spec.x, spec.y, {})
    if isinstance(spec, PtParam):
        x = th(spec.sx)
        y = th(spec.sy) if spec.sy >= 0 else 0.0
        if need_dh:
            return _PointEval(
                x, y, {}, dx_dh=dth(spec.sx), dy_dh=(dth(spec.sy) if spec.sy >= 0 else None)
            )
        return _PointEval(x, y, {})
    if isinstance(spec, PtVar):
        x = Z[:, spec.vx]
        grads = {spec.vx: (1.0, 0.0)}
        if spec.vy >= 0:
            y = Z[:, spec.vy]
            if spec.vy == spec.vx:
                raise ValueError("point cannot reuse one unknown for x and y")
            grads[spec.vy] = (0.0, 1.0)
        else:
            y = 0.0
        return _PointEval(x, y, grads)
    if isinstance(spec, PtVarOffset):
        x = Z[:, spec.vx] + spec.sign * th(spec.slot)
        grads = {spec.vx: (1.0, 0.0)}
        dxh = spec.sign * dth(spec.slot) if need_dh else None
        return _PointEval(x, 0.0, grads, dx_dh=dxh)
    if isinstance(spec, PtPointBased):
        x5 = th(spec.s_x5)
        alpha = th(spec.s_x6) / x5
        beta = th(spec.s_y6) / x5
        c4, d4 = Z[:, spec.v_c4], Z[:, spec.v_d4]
        c5, d5 = Z[:, spec.v_c5], Z[:, spec.v_d5]
        x = (c5 - c4) * alpha + (d4 - d5) * beta + c4
        y = (d5 - d4) * alpha + (c5 - c4) * beta + d4
        grads = {
            spec.v_c4: (1.0 - alpha, -beta),
            spec.v_d4: (beta, 1.0 - alpha),
            spec.v_c5: (alpha, beta),
            spec.v_d5: (-beta, alpha),
        }
        if not need_dh:
            return _PointEval(x, y, grads)
        dx5, dx6, dy6 = dth(spec.s_x5), dth(spec.s_x6), dth(spec.s_y6)
        dalpha = (dx6 - alpha * dx5) / x5
        dbeta = (dy6 - beta * dx5) / x5
        dx_dh = (c5 - c4) * dalpha + (d4 - d5) * dbeta
        dy_dh = (d5 - d4) * dalpha + (c5 - c4) * dbeta
        dgrads = {
            spec.v_c4: (-dalpha, -dbeta),
            spec.v_d4: (dbeta, -dalpha),
            spec.v_c5: (dalpha, dbeta),
            spec.v_d5: (-dbeta, dalpha),
        }
        return _PointEval(x, y, grads, dx_dh, dy_dh, dgrads)
    raise TypeError(f"unknown point spec {spec!r}")


def _net_grads(P: _PointEval, Q: _PointEval):
    """Gradient coefficients of P - Q per unknown: {var: (ax, ay)}."""
    out = {}
    for v, (gx, gy) in P.grads.items():
        out[v] = (gx, gy)
    for v, (gx, gy) in Q.grads.items():
        if v in out:
            ax, ay = out[v]
            out[v] = (ax - gx, ay - gy)
        else:
            out[v] = (-gx, -gy)
    return out


def _net_dgrads(P: _PointEval, Q: _PointEval):
    out = {}
    for src, sign in ((P, 1.0), (Q, -1.0)):
        if src.dgrads_dh:
            for v, (gx, gy) in src.dgrads_dh.items():
                ax, ay = out.get(v, (0.0, 0.0))
                out[v] = (ax + sign * gx, ay + sign * gy)
    return out


def _diff_dh(P: _PointEval, Q: _PointEval):
    dx = None
    if P.dx_dh is not None or Q.dx_dh is not None:
        dx = (P.dx_dh if P.dx_dh is not None else 0.0) - (
            Q.dx_dh if Q.dx_dh is not None else 0.0
        )
    dy = None
    if P.dy_dh is not None or Q.dy_dh is not None:
        dy = (P.dy_dh if P.dy_dh is not None else 0.0) - (
            Q.dy_dh if Q.dy_dh is not None else 0.0
        )
    return dx, dy


# ---------------------------------------------------------------------------
# the evaluator
# ---------------------------------------------------------------------------


class EnergySystemEvaluator:
    """Evaluate one assembled system at batches of (point, parameter) pairs.

    Parameters enter through ``theta``; for homotopies theta is per-path and
    ``dtheta`` its h-derivative (constant, since every parameter
    interpolates linearly in h).
    """

    def __init__(self, spec: EnergySystemSpec):
        self.spec = spec
        for plate in spec.plates:
            # plate vertices stay plain points; their edge gradients are constant
            for t in plate.tri:
                if isinstance(spec.points[t - 1], (PtPointBased, PtVarOffset)):
                    raise ValueError("plate vertices must be plain points")

    # -- main entry ----------------------------------------------------

    def evaluate(
        self,
        Z: np.ndarray,
        theta: np.ndarray,
        dtheta: np.ndarray | None = None,
        need_dh: bool = True,
    ):
        """Return (H, J, Hh): values (n, neq), Jacobian (n, neq, nvar) and
        the h-derivative (n, neq) (None when not requested)."""
        spec = self.spec
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        n = Z.shape[0]
        nv = spec.n_vars
        need_dh = need_dh and dtheta is not None

        theta = np.asarray(theta, dtype=complex)
        if theta.ndim == 1:
            th = lambda s: theta[s]
        else:
            th = lambda s: theta[:, s]
        if dtheta is None:
            dth = lambda s: 0.0
        else:
            dth = lambda s: dtheta[s]

        H = np.zeros((n, nv), dtype=complex)
        J = np.zeros((n, nv, nv), dtype=complex)
        Hh = np.zeros((n, nv), dtype=complex) if need_dh else None

        pts = [_eval_point(p, Z, th, dth, need_dh) for p in spec.points]

        for bar in spec.bars:
            self._add_bar(bar, pts, th, dth, H, J, Hh, need_dh)
        for plate in spec.plates:
            self._add_plate(plate, pts, th, dth, H, J, Hh, need_dh, n)
        if spec.constraints:
            self._add_constraints(Z, pts, th, dth, H, J, Hh, need_dh, n)
        return H, J, Hh

    # -- bars ------------------------------------------------------------

    def _add_bar(self, bar, pts, th, dth, H, J, Hh, need_dh):
        P, Q = pts[bar.i - 1], pts[bar.j - 1]
        dx = P.x - Q.x
        dy = P.y - Q.y
        s = dx * dx + dy * dy
        net = _net_grads(P, Q)
        gvars = sorted(net)
        gs = {v: 2.0 * (dx * net[v][0] + dy * net[v][1]) for v in gvars}

        lam = th(bar.len_slot)
        lam2 = lam * lam
        inv3 = 1.0 / (4.0 * lam2 * lam)
        c1 = (s - lam2) * inv3

        for v in gvars:
            H[:, v] += c1 * gs[v]
        for a, v in enumerate(gvars):
            ax, ay = net[v]
            for w in gvars[a:]:
                bx, by = net[w]
                hvw = 2.0 * (ax * bx + ay * by)
                term = gs[v] * gs[w] * inv3 + c1 * hvw
                J[:, v, w] += term
                if w != v:
                    J[:, w, v] += term

        if not need_dh:
            return
        dlam = dth(bar.len_slot)
        ddx, ddy = _diff_dh(P, Q)
        s_h = 0.0
        if ddx is not None:
            s_h = s_h + 2.0 * dx * ddx
        if ddy is not None:
            s_h = s_h + 2.0 * dy * ddy
        dnet = _net_dgrads(P, Q)
        for v in gvars:
            ax, ay = net[v]
            gs_h = 0.0
            if ddx is not None:
                gs_h = gs_h + 2.0 * ddx * ax
            if ddy is not None:
                gs_h = gs_h + 2.0 * ddy * ay
            if v in dnet:
                dax, day = dnet[v]
                gs_h = gs_h + 2.0 * (dx * dax + dy * day)
            term = ((s_h - 2.0 * lam * dlam) * gs[v] + (s - lam2) * gs_h) * inv3
            if dlam != 0.0 or np.ndim(dlam):
                term = term - 3.0 * (dlam / lam) * c1 * gs[v]
            Hh[:, v] += term

    # -- plates ----------------------------------------------------------

    def _add_plate(self, plate, pts, th, dth, H, J, Hh, need_dh, n):
        Pi, Pj, Pk = (pts[t - 1] for t in plate.tri)
        e1 = np.stack([np.broadcast_to(Pj.x - Pi.x, (n,)),
                       np.broadcast_to(Pj.y - Pi.y, (n,))], axis=1).astype(complex)
        e2 = np.stack([np.broadcast_to(Pk.x - Pi.x, (n,)),
                       np.broadcast_to(Pk.y - Pi.y, (n,))], axis=1).astype(complex)
        edges = (e1, e2)
        a1 = _net_grads(Pj, Pi)
        a2 = _net_grads(Pk, Pi)
        agrads = (a1, a2)
        avars = sorted(set(a1) | set(a2))

        g11, g21, g12, g22 = (th(s) for s in plate.g_slots)
        det = g11 * g22 - g12 * g21
        inv = 1.0 / det
        # W = G^{-1}, rows/cols as 2x2 per path
        W = np.empty((n, 2, 2), dtype=complex)
        W[:, 0, 0] = g22 * inv
        W[:, 0, 1] = -g12 * inv
        W[:, 1, 0] = -g21 * inv
        W[:, 1, 1] = g11 * inv

        vol = th(plate.vol_slots[0]) + th(plate.vol_slots[1]) + th(plate.vol_slots[2])
        pref = np.broadcast_to(vol / 6.0, (n,))

        M = np.empty((n, 2, 2), dtype=complex)
        M[:, 0, 0] = np.einsum("ni,ni->n", e1, e1)
        M[:, 0, 1] = np.einsum("ni,ni->n", e1, e2)
        M[:, 1, 0] = M[:, 0, 1]
        M[:, 1, 1] = np.einsum("ni,ni->n", e2, e2)

        N = np.einsum("nca,ncd,ndb->nab", W, M, W)

        def psi_of(Nmat, shifted=True):
            out = np.empty_like(Nmat)
            one = 1.0 if shifted else 0.0
            out[:, 0, 0] = 2.0 * (Nmat[:, 0, 0] - one) + (Nmat[:, 1, 1] - one)
            out[:, 1, 1] = 2.0 * (Nmat[:, 1, 1] - one) + (Nmat[:, 0, 0] - one)
            out[:, 0, 1] = Nmat[:, 0, 1]
            out[:, 1, 0] = Nmat[:, 1, 0]
            return out

        Psi = psi_of(N)
        Theta = np.einsum("nac,ncd,nbd->nab", W, Psi, W)

        # dM/dz_v as a 2x2 per variable: m1[v] = a_c[v].e_d + a_d[v].e_c
        def mprime(v):
            out = np.zeros((n, 2, 2), dtype=complex)
            for c in range(2):
                for d in range(2):
                    acc = 0.0
                    av = agrads[c].get(v)
                    if av is not None:
                        acc = acc + av[0] * edges[d][:, 0] + av[1] * edges[d][:, 1]
                    ad = agrads[d].get(v)
                    if ad is not None:
                        acc = acc + ad[0] * edges[c][:, 0] + ad[1] * edges[c][:, 1]
                    out[:, c, d] = acc
            return out

        Mp = {v: mprime(v) for v in avars}

        def contract(T, A):
            return np.einsum("nab,nab->n", T, A)

        for v in avars:
            H[:, v] += pref * contract(Theta, Mp[v])

        # second derivatives
        for ia, v in enumerate(avars):
            dN_v = np.einsum("nca,ncd,ndb->nab", W, Mp[v], W)
            dTheta_v = np.einsum("nac,ncd,nbd->nab", W, psi_of(dN_v, shifted=False), W)
            for w in avars[ia:]:
                # constant part: M''[v, w]
                Mpp = np.zeros((2, 2), dtype=complex)
                hconst = np.zeros(n, dtype=complex)
                for c in range(2):
                    for d in range(2):
                        acc = 0.0
                        av, aw = agrads[c].get(v), agrads[d].get(w)
                        if av is not None and aw is not None:
                            acc += av[0] * aw[0] + av[1] * aw[1]
                        av2, aw2 = agrads[d].get(v), agrads[c].get(w)
                        if av2 is not None and aw2 is not None:
                            acc += av2[0] * aw2[0] + av2[1] * aw2[1]
                        if acc != 0.0:
                            hconst += acc * Theta[:, c, d]
                term = pref * (hconst + contract(dTheta_v, Mp[w]))
                J[:, v, w] += term
                if w != v:
                    J[:, w, v] += term

        if not need_dh:
            return
        dg11, dg21, dg12, dg22 = (dth(s) for s in plate.g_slots)
        Gp = np.zeros((2, 2), dtype=complex)
        Gp[0, 0], Gp[1, 0], Gp[0, 1], Gp[1, 1] = dg11, dg21, dg12, dg22
        Wp = -np.einsum("nac,cd,ndb->nab", W, Gp, W)
        dvol = dth(plate.vol_slots[0]) + dth(plate.vol_slots[1]) + dth(plate.vol_slots[2])
        dN_h = np.einsum("nca,ncd,ndb->nab", Wp, M, W) + np.einsum(
            "nca,ncd,ndb->nab", W, M, Wp
        )
        dTheta_h = (
            np.einsum("nac,ncd,nbd->nab", Wp, Psi, W)
            + np.einsum("nac,ncd,nbd->nab", W, psi_of(dN_h, shifted=False), W)
            + np.einsum("nac,ncd,nbd->nab", W, Psi, Wp)
        )
        for v in avars:
            Hh[:, v] += (dvol / 6.0) * contract(Theta, Mp[v]) + pref * contract(
                dTheta_h, Mp[v]
            )

    # -- constraints -------------------------------------------------------

    def _gather_inputs(self, pts, n, need_dh):
        """The nine free coordinates as a batch matrix, with their affine
        dependence on the unknowns and their h-velocities."""
        coords = [
            (pts[1], 0), (pts[2], 0), (pts[2], 1),
            (pts[3], 0), (pts[3], 1), (pts[4], 0), (pts[4], 1),
            (pts[5], 0), (pts[5], 1),
        ]
        X = np.empty((n, _N_IN), dtype=complex)
        dep = []       # per input: list of (var, coeff)
        ddep = []      # per input: list of (var, dcoeff/dh)
        dX = np.zeros((n, _N_IN), dtype=complex) if need_dh else None
        any_dX = False
        for a, (pt, comp) in enumerate(coords):
            X[:, a] = pt.x if comp == 0 else pt.y
            dep.append([(v, g[comp]) for v, g in pt.grads.items()])
            if need_dh:
                dv = pt.dx_dh if comp == 0 else pt.dy_dh
                if dv is not None:
                    dX[:, a] = dv
                    any_dX = True
                if pt.dgrads_dh:
                    ddep.append([(v, g[comp]) for v, g in pt.dgrads_dh.items()])
                else:
                    ddep.append([])
            else:
                ddep.append([])
        return X, dep, ddep, (dX if any_dX else None)

    def _add_constraints(self, Z, pts, th, dth, H, J, Hh, need_dh, n):
        spec = self.spec
        gathered = None
        for ci, con in enumerate(spec.constraints):
            row = spec.n_coords + ci
            m = con.mult_var
            zm = Z[:, m]
            if con.kind == "E":
                P, Q = pts[4], pts[3]  # anchors five and four
                dx, dy = P.x - Q.x, P.y - Q.y
                net = _net_grads(P, Q)
                gvars = sorted(net)
                gval = {v: 2.0 * (dx * net[v][0] + dy * net[v][1]) for v in gvars}
                x5 = th(con.x5_slot)
                g = dx * dx + dy * dy - x5 * x5
                for v in gvars:
                    H[:, v] += zm * gval[v]
                    J[:, v, m] += gval[v]
                    J[:, row, v] = gval[v]
                for v in gvars:
                    ax, ay = net[v]
                    for w in gvars:
                        bx, by = net[w]
                        J[:, v, w] += zm * 2.0 * (ax * bx + ay * by)
                H[:, row] = g
                if need_dh:
                    dx5 = dth(con.x5_slot)
                    Hh[:, row] = Hh[:, row] - 2.0 * x5 * dx5
                continue

            if gathered is None:
                gathered = self._gather_inputs(pts, n, need_dh)
            X, dep, ddep, dX = gathered
            fam = _constraint_family(con.kind)
            vals = fam.eval(X)
            g = vals[:, 0]
            grad9 = vals[:, 1 : 1 + _N_IN]
            hess9 = np.zeros((n, _N_IN, _N_IN), dtype=complex)
            for t, (a, b) in enumerate(_HESS_PAIRS):
                hess9[:, a, b] = vals[:, 1 + _N_IN + t]
                if a != b:
                    hess9[:, b, a] = vals[:, 1 + _N_IN + t]

            # chain to the unknowns
            gz = {}
            for a in range(_N_IN):
                for v, c in dep[a]:
                    gz[v] = gz.get(v, 0.0) + grad9[:, a] * c
            gvars = sorted(gz)
            for v in gvars:
                H[:, v] += zm * gz[v]
                J[:, v, m] += gz[v]
                J[:, row, v] = J[:, row, v] + gz[v]
            H[:, row] += g

            # Hessian chain: sum_ab hess9[a,b] c_av c_bw
            part = {}  # v -> (n, 9) array: sum_b hess9[:, :, b] * c_bv
            for b in range(_N_IN):
                for v, c in dep[b]:
                    cur = part.get(v)
                    contrib = hess9[:, :, b] * (c if np.ndim(c) == 0 else c[:, None])
                    part[v] = contrib if cur is None else cur + contrib
            for v in gvars:
                pv = part[v]
                for a in range(_N_IN):
                    for w, c in dep[a]:
                        J[:, v, w] += zm * pv[:, a] * c

            if need_dh:
                gh = np.zeros(n, dtype=complex)
                if dX is not None:
                    gh += np.einsum("na,na->n", grad9, dX)
                Hh[:, row] += gh
                # d(grad_z g)/dh
                for v in gvars:
                    acc = np.zeros(n, dtype=complex)
                    if dX is not None:
                        # sum_ab hess9[a,b] dX_b c_av
                        hv = np.einsum("nab,nb->na", hess9, dX)
                        for a in range(_N_IN):
                            for vv, c in dep[a]:
                                if vv == v:
                                    acc += hv[:, a] * c
                    for a in range(_N_IN):
                        for vv, dc in ddep[a]:
                            if vv == v:
                                acc += grad9[:, a] * dc
                    Hh[:, v] += zm * acc


# ---------------------------------------------------------------------------
# homotopies (the tracker-facing protocol: eval(Z, h, need_dh))
# ---------------------------------------------------------------------------


@dataclass
class FixedSystem:
    """An assembled system at fixed parameter values (no h dependence)."""

    spec: EnergySystemSpec
    theta: np.ndarray

    def __post_init__(self):
        self._ev = EnergySystemEvaluator(self.spec)
        self.theta = np.asarray(self.theta, dtype=complex)

    @property
    def n_vars(self) -> int:
        return self.spec.n_vars

    def eval(self, Z):
        H, J, _ = self._ev.evaluate(Z, self.theta, None, need_dh=False)
        return H, J


@dataclass
class UserHomotopy:
    """Parameters interpolate linearly from pose values (h=0) to the generic
    complex instance (h=1); the structure stays fixed."""

    spec: EnergySystemSpec
    theta_pose: np.ndarray
    theta_generic: np.ndarray

    def __post_init__(self):
        self._ev = EnergySystemEvaluator(self.spec)
        self.theta_pose = np.asarray(self.theta_pose, dtype=complex)
        self.theta_generic = np.asarray(self.theta_generic, dtype=complex)
        self._delta = self.theta_generic - self.theta_pose

    @property
    def n_vars(self) -> int:
        return self.spec.n_vars

    def eval(self, Z, h, need_dh=True):
        h = np.asarray(h, dtype=complex)
        theta = self.theta_pose[None, :] + h[:, None] * self._delta[None, :]
        return self._ev.evaluate(Z, theta, self._delta, need_dh=need_dh)


@dataclass
class LinearHomotopy:
    """Gamma-trick convex combination H = (1-h) F + h gamma G."""

    target: object   # anything with .eval(Z) -> (H, J)
    start: object
    gamma: complex

    @property
    def n_vars(self) -> int:
        return self.target.n_vars

    def eval(self, Z, h, need_dh=True):
        Ft, Jt = self.target.eval(Z)
        Fs, Js = self.start.eval(Z)
        h = np.asarray(h, dtype=complex)
        hc = h[:, None]
        H = (1.0 - hc) * Ft + self.gamma * hc * Fs
        J = (1.0 - hc[:, :, None]) * Jt + self.gamma * hc[:, :, None] * Js
        Hh = (self.gamma * Fs - Ft) if need_dh else None
        return H, J, Hh


@dataclass
class PolySystemHomotopy:
    """A compiled polynomial system over (unknowns..., h)."""

    compiled: CompiledSystem

    @property
    def n_vars(self) -> int:
        return len(self.compiled.variables) - 1

    def eval(self, Z, h, need_dh=True):
        Zh = np.concatenate([np.atleast_2d(Z), np.asarray(h, dtype=complex)[:, None]], axis=1)
        vals, jacs = self.compiled.eval_batch(Zh)
        H = vals
        J = jacs[:, :, : self.n_vars]
        Hh = jacs[:, :, self.n_vars] if need_dh else None
        return H, J, Hh


# ---------------------------------------------------------------------------
# symbolic materialization (the cross-validation route)
# ---------------------------------------------------------------------------


def _point_exprs(spec: EnergySystemSpec, theta: np.ndarray):
    table = spec.unknowns
    var = lambda i: Polynomial.variable(table, table[i])
    const = lambda c: Polynomial.constant(table, c)
    zero = Polynomial.zero(table)
    out = []
    for p in spec.points:
        if isinstance(p, PtConst):
            out.append((const(p.x) if p.x else zero, const(p.y) if p.y else zero))
        elif isinstance(p, PtParam):
            out.append(
                (const(theta[p.sx]), const(theta[p.sy]) if p.sy >= 0 else zero)
            )
        elif isinstance(p, PtVar):
            out.append((var(p.vx), var(p.vy) if p.vy >= 0 else zero))
        elif isinstance(p, PtVarOffset):
            out.append((var(p.vx) + const(p.sign * theta[p.slot]), zero))
        elif isinstance(p, PtPointBased):
            x5, x6, y6 = theta[p.s_x5], theta[p.s_x6], theta[p.s_y6]
            alpha, beta = x6 / x5, y6 / x5
            c4, d4, c5, d5 = var(p.v_c4), var(p.v_d4), var(p.v_c5), var(p.v_d5)
            out.append(
                (
                    (c5 - c4) * alpha + (d4 - d5) * beta + c4,
                    (d5 - d4) * alpha + (c5 - c4) * beta + d4,
                )
            )
        else:
            raise TypeError(f"unknown point spec {p!r}")
    return out


def materialize_system(
    spec: EnergySystemSpec,
    theta: np.ndarray,
    grouping: list[list[str]] | None = None,
) -> PolynomialSystem:
    """Expand the assembled system as explicit sparse polynomials.

    Builds the Lagrangian (bar energies + plate energies + multipliers
    times side conditions) and takes its formal partial derivatives, so
    the result is a gradient system by construction.
    """
    theta = np.asarray(theta, dtype=complex)
    table = spec.unknowns
    pts = _point_exprs(spec, theta)
    L = Polynomial.zero(table)

    for bar in spec.bars:
        (xa, ya), (xb, yb) = pts[bar.i - 1], pts[bar.j - 1]
        dx, dy = xa - xb, ya - yb
        s = dx * dx + dy * dy
        lam = theta[bar.len_slot]
        L = L + (s - lam * lam) ** 2 * (1.0 / (8.0 * lam**3))

    for plate in spec.plates:
        g11, g21, g12, g22 = (theta[s] for s in plate.g_slots)
        det = g11 * g22 - g12 * g21
        ginv = ((g22 / det, -g12 / det), (-g21 / det, g11 / det))
        vol = sum(theta[s] for s in plate.vol_slots)
        (xi, yi), (xj, yj), (xk, yk) = (pts[t - 1] for t in plate.tri)
        e1x, e1y = xj - xi, yj - yi
        e2x, e2y = xk - xi, yk - yi
        f11 = e1x * ginv[0][0] + e2x * ginv[1][0]
        f12 = e1x * ginv[0][1] + e2x * ginv[1][1]
        f21 = e1y * ginv[0][0] + e2y * ginv[1][0]
        f22 = e1y * ginv[0][1] + e2y * ginv[1][1]
        n11 = f11 * f11 + f21 * f21
        n12 = f11 * f12 + f21 * f22
        n22 = f12 * f12 + f22 * f22
        ex = (n11 - 1.0) * 0.5
        ey = (n22 - 1.0) * 0.5
        gxy = n12 * 0.5
        L = L + (ex * ex + ex * ey + ey * ey + gxy * gxy) * (2.0 / 3.0) * vol

    constraint_polys = []
    for con in spec.constraints:
        if con.kind == "V":
            g = singularity_expr(pts)
        elif con.kind == "C_P":
            (x4, y4), (x5p, y5p), (x6, y6) = pts[3], pts[4], pts[5]
            g = (x5p - x4) * (y6 - y4) - (x6 - x4) * (y5p - y4)
        elif con.kind == "C_B":
            (x1, y1), (x2, y2), (x3, y3) = pts[0], pts[1], pts[2]
            g = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        elif con.kind == "E":
            (x4, y4), (x5p, y5p) = pts[3], pts[4]
            dx, dy = x5p - x4, y5p - y4
            x5 = theta[con.x5_slot]
            g = dx * dx + dy * dy - x5 * x5
        else:
            raise ValueError(f"unknown constraint kind {con.kind!r}")
        constraint_polys.append(g)
        L = L + Polynomial.variable(table, table[con.mult_var]) * g

    eqs = [L.differentiate(table[i]) for i in range(spec.n_coords)]
    eqs.extend(constraint_polys)
    return PolynomialSystem(eqs, grouping=grouping)
