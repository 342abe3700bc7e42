"""Polynomial homotopy continuation: start systems, path tracking, caches.

The engine tracks whole batches of paths in lockstep (each path keeps its
own adaptive step size) with an RK4 predictor and Newton corrector, a
geometric endgame with Richardson extrapolation near h = 0, and a final
Newton polish against the target system.  Start systems cover plain
total-degree homotopies and multihomogeneous linear-product homotopies
for a published variable grouping.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Sequence

import numpy as np

from .evaluation import FixedSystem, LinearHomotopy, UserHomotopy
from .lagrangian import AssembledProblem
from .model import CANONICAL_BARS

__all__ = [
    "TrackerSettings",
    "PathResult",
    "GenericSolutionSet",
    "TotalDegreeStart",
    "LinearProductStart",
    "track_path",
    "track_many",
    "ab_initio",
    "track_user_homotopy",
    "draw_generic_configuration",
    "canonical_sort",
    "deduplicate",
    "save_solution_set",
    "load_solution_set",
]


@dataclass(frozen=True)
class TrackerSettings:
    """Knobs of the path tracker; all tolerances strictly positive."""

    tracking_tol: float = 1e-8
    newton_tol: float = 1e-8
    max_steps: int = 4000
    min_step: float = 1e-9
    endgame_radius: float = 0.1
    divergence_threshold: float = 1e8
    seed: int = 42
    precision: str = "double"        # "double" | "dd"
    dt_initial: float = 0.05
    dt_max: float = 0.2
    newton_iters: int = 3
    growth_after: int = 5
    growth_factor: float = 1.5
    endgame_stages: int = 40
    endgame_newton_iters: int = 6
    retry_failed: bool = True
    workers: int = 1
    finite_norm: float = 1e6
    dedup_tol: float = 1e-6
    real_tol: float = 1e-6

    def __post_init__(self):
        for name in ("tracking_tol", "newton_tol", "min_step", "endgame_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not np.isfinite(self.divergence_threshold):
            raise ValueError("divergence threshold must be finite")
        if self.precision not in ("double", "dd"):
            raise ValueError("precision must be 'double' or 'dd'")


CONVERGED = "converged"
DIVERGED = "diverged-to-infinity"
STEP_FAILURE = "step-failure"


@dataclass
class PathResult:
    endpoint: np.ndarray
    status: str
    residual: float
    steps: int
    start_index: int
    h_final: float = 0.0
    reason: str = ""      # for non-converged paths: norm | newton | stages | trend


@dataclass
class GenericSolutionSet:
    """Deduplicated finite solutions of one generic complex instance."""

    fingerprint: str
    tag: str
    strategy: str
    seed: int
    generic_points: np.ndarray          # (6, 2) complex
    theta_generic: np.ndarray           # parameter vector of the instance
    endpoints: np.ndarray               # (m, n_vars) complex, canonically sorted
    n_paths: int
    n_failures: int

    @property
    def n_finite(self) -> int:
        return self.endpoints.shape[0]

    def n_real(self, tol: float = 1e-6) -> int:
        if self.endpoints.size == 0:
            return 0
        return int(np.sum(np.abs(self.endpoints.imag).max(axis=1) < tol))


# ---------------------------------------------------------------------------
# start systems
# ---------------------------------------------------------------------------


@dataclass
class TotalDegreeStart:
    """x_i^{d_i} - b_i with random unit-modulus constants."""

    degrees: tuple[int, ...]
    constants: np.ndarray

    @classmethod
    def build(cls, degrees: Sequence[int], rng: np.random.Generator) -> "TotalDegreeStart":
        angles = rng.uniform(0.0, 2.0 * np.pi, len(degrees))
        return cls(tuple(int(d) for d in degrees), np.exp(1j * angles))

    @property
    def n_vars(self) -> int:
        return len(self.degrees)

    def n_roots(self) -> int:
        out = 1
        for d in self.degrees:
            out *= d
        return out

    def eval(self, Z: np.ndarray):
        Z = np.atleast_2d(Z)
        n, nv = Z.shape
        H = np.empty((n, nv), dtype=complex)
        J = np.zeros((n, nv, nv), dtype=complex)
        for i, d in enumerate(self.degrees):
            H[:, i] = Z[:, i] ** d - self.constants[i]
            J[:, i, i] = d * Z[:, i] ** (d - 1)
        return H, J

    def start_points(self) -> np.ndarray:
        roots_per_var = []
        for d, b in zip(self.degrees, self.constants):
            base = b ** (1.0 / d)
            roots_per_var.append(base * np.exp(2j * np.pi * np.arange(d) / d))
        combos = list(product(*roots_per_var))
        return np.array(combos, dtype=complex)


@dataclass
class LinearProductStart:
    """Products of generic affine forms respecting a variable grouping.

    Equation j carries d_{j,a} affine forms in the group-a variables; its
    roots select one vanishing form per equation such that each group
    contributes exactly as many forms as it has variables.
    """

    group_vars: tuple[tuple[int, ...], ...]
    multidegrees: tuple[tuple[int, ...], ...]
    coeffs: list            # coeffs[j][g] = complex array (d_jg, len(group)+1)

    @classmethod
    def build(
        cls,
        group_vars: Sequence[Sequence[int]],
        multidegrees: Sequence[Sequence[int]],
        rng: np.random.Generator,
    ) -> "LinearProductStart":
        coeffs = []
        for mdeg in multidegrees:
            row = []
            for g, d in enumerate(mdeg):
                k = len(group_vars[g])
                c = rng.standard_normal((d, k + 1)) + 1j * rng.standard_normal((d, k + 1))
                row.append(c)
            coeffs.append(row)
        return cls(
            tuple(tuple(int(v) for v in g) for g in group_vars),
            tuple(tuple(int(d) for d in m) for m in multidegrees),
            coeffs,
        )

    @property
    def n_vars(self) -> int:
        return sum(len(g) for g in self.group_vars)

    def eval(self, Z: np.ndarray):
        Z = np.atleast_2d(Z)
        n, nv = Z.shape
        neq = len(self.multidegrees)
        H = np.empty((n, neq), dtype=complex)
        J = np.zeros((n, neq, nv), dtype=complex)
        for j in range(neq):
            factors = []      # (values, group index, coeff row)
            for g, d in enumerate(self.multidegrees[j]):
                gv = self.group_vars[g]
                Zg = Z[:, gv]
                for r in range(d):
                    c = self.coeffs[j][g][r]
                    vals = Zg @ c[:-1] + c[-1]
                    factors.append((vals, g, c))
            if not factors:
                raise ValueError("equation with no factors in the start system")
            total = np.ones(n, dtype=complex)
            for vals, _, _ in factors:
                total = total * vals
            H[:, j] = total
            for idx, (vals, g, c) in enumerate(factors):
                others = np.ones(n, dtype=complex)
                for idx2, (vals2, _, _) in enumerate(factors):
                    if idx2 != idx:
                        others = others * vals2
                for t, v in enumerate(self.group_vars[g]):
                    J[:, j, v] += others * c[t]
        return H, J

    def start_points(self) -> np.ndarray:
        neq = len(self.multidegrees)
        ngroups = len(self.group_vars)
        sizes = [len(g) for g in self.group_vars]
        points = []

        def assign(j, capacity, chosen):
            if j == neq:
                if any(capacity):
                    return
                # choose concrete factor indices per equation
                options = [range(self.multidegrees[j2][g]) for j2, g in enumerate(chosen)]
                for pick in product(*options):
                    A = [np.zeros((sizes[g], sizes[g] + 1), dtype=complex) for g in range(ngroups)]
                    rows = [0] * ngroups
                    ok = True
                    for j2, (g, r) in enumerate(zip(chosen, pick)):
                        A[g][rows[g]] = self.coeffs[j2][g][r]
                        rows[g] += 1
                    z = np.empty(self.n_vars, dtype=complex)
                    for g in range(ngroups):
                        M = A[g][:, :-1]
                        b = -A[g][:, -1]
                        try:
                            sol = np.linalg.solve(M, b)
                        except np.linalg.LinAlgError:
                            ok = False
                            break
                        z[list(self.group_vars[g])] = sol
                    if ok:
                        points.append(z)
                return
            for g in range(ngroups):
                if capacity[g] > 0 and self.multidegrees[j][g] > 0:
                    capacity[g] -= 1
                    chosen.append(g)
                    assign(j + 1, capacity, chosen)
                    chosen.pop()
                    capacity[g] += 1

        assign(0, list(sizes), [])
        return np.array(points, dtype=complex)


# ---------------------------------------------------------------------------
# the lockstep engine
# ---------------------------------------------------------------------------


def _solve(J: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Batched linear solve; singular members yield NaN rows instead of
    aborting the whole batch."""
    try:
        return np.linalg.solve(J, B[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(B)
        for i in range(J.shape[0]):
            try:
                out[i] = np.linalg.solve(J[i], B[i])
            except np.linalg.LinAlgError:
                out[i] = np.nan
        return out


def _newton(homotopy, Z, h, iters, tol):
    """Batched Newton correction at fixed h; returns (Z, converged mask)."""
    conv = np.zeros(Z.shape[0], dtype=bool)
    for _ in range(iters):
        H, J, _ = homotopy.eval(Z, h, need_dh=False)
        delta = -_solve(J, H)
        bad = ~np.isfinite(delta).all(axis=1)
        delta[bad] = 0.0
        Z = Z + delta
        step = np.abs(delta).max(axis=1)
        size = 1.0 + np.abs(Z).max(axis=1)
        conv = conv | (step <= tol * size)
        conv &= ~bad
        if conv.all():
            break
    return Z, conv & np.isfinite(Z).all(axis=1)


def _rk4_predict(homotopy, Z, h, dt):
    """One RK4 step of the Davidenko flow from h to h - dt."""

    def flow(Zc, hc):
        H, J, Hh = homotopy.eval(Zc, hc, need_dh=True)
        return -_solve(J, Hh)

    half = 0.5 * dt
    k1 = flow(Z, h)
    k2 = flow(Z - half[:, None] * k1, h - half)
    k3 = flow(Z - half[:, None] * k2, h - half)
    k4 = flow(Z - dt[:, None] * k3, h - dt)
    Zp = Z - (dt / 6.0)[:, None] * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    bad = ~np.isfinite(Zp).all(axis=1)
    if bad.any():
        Zp[bad] = Z[bad]  # fall back to trivial prediction
    return Zp


def _richardson(samples: np.ndarray) -> np.ndarray:
    """Extrapolate a sequence sampled at h, h/2, h/4, ... to h = 0."""
    m = samples.shape[0]
    depth = min(m - 1, 7)
    T = samples[m - 1 - depth :].astype(complex)
    for col in range(1, depth + 1):
        fac = 2.0**col
        T = (fac * T[1:] - T[:-1]) / (fac - 1.0)
    return T[0]


def _advance(
    homotopy, Z, h, dt, nsucc, steps, status, reason, mask, floor, tol, iters,
    settings, relative_dt_floor=False, max_rounds=None,
):
    """Drive masked active paths from their current h down to ``floor`` with
    adaptive RK4 prediction and Newton correction.  Mutates the state arrays
    in place; paths that die get status 2 (diverged) or 3 (step failure)."""
    rounds = 0
    while True:
        act = np.where((status == 0) & mask & (h > floor * (1.0 + 1e-12)))[0]
        if act.size == 0:
            return
        rounds += 1
        if max_rounds is not None and rounds > max_rounds:
            # treat paths that cannot finish the stage in a bounded number of
            # rounds as stuck; the history-based classifier sorts them out
            stuck = act
            status[stuck] = np.where(
                np.abs(Z[stuck]).max(axis=1) > settings.finite_norm, 2, 3
            )
            reason[stuck] = 2
            return
        dta = np.minimum(dt[act], h[act] - floor)
        Za, ha = Z[act], h[act]
        Zp = _rk4_predict(homotopy, Za, ha, dta)
        Zc, ok = _newton(homotopy, Zp, ha - dta, iters, tol)

        good = act[ok]
        Z[good] = Zc[ok]
        h[good] = ha[ok] - dta[ok]
        nsucc[good] += 1
        grow = good[nsucc[good] >= settings.growth_after]
        dt[grow] = np.minimum(dt[grow] * settings.growth_factor, settings.dt_max)
        nsucc[grow] = 0

        exploded = good[np.abs(Z[good]).max(axis=1) > settings.divergence_threshold]
        status[exploded] = 2
        reason[exploded] = 1  # norm

        bad = act[~ok]
        dt[bad] *= 0.5
        nsucc[bad] = 0
        if relative_dt_floor:
            stuck = bad[dt[bad] < np.maximum(1e-14 * h[bad], 1e-250)]
        else:
            stuck = bad[dt[bad] < settings.min_step]
        status[stuck] = np.where(
            np.abs(Z[stuck]).max(axis=1) > settings.finite_norm, 2, 3
        )
        reason[stuck] = 2  # newton breakdown
        steps[act] += 1
        overrun = act[steps[act] > settings.max_steps]
        status[overrun] = np.where(
            np.abs(Z[overrun]).max(axis=1) > settings.finite_norm, 2, 3
        )
        reason[overrun] = 3


def track_many(
    homotopy,
    starts: np.ndarray,
    settings: TrackerSettings,
    scale: np.ndarray | None = None,
    _offset: int = 0,
) -> list[PathResult]:
    """Track every start point from h = 1 to h = 0."""
    starts = np.atleast_2d(np.asarray(starts, dtype=complex))
    n, nv = starts.shape
    if scale is None:
        scale = np.ones(homotopy.eval(starts[:1], np.ones(1), need_dh=False)[0].shape[1])
    scale = np.asarray(scale, dtype=float)

    if settings.workers > 1 and n >= 4 * settings.workers:
        chunks = np.array_split(np.arange(n), settings.workers)
        sub = replace(settings, workers=1)
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            futures = [
                pool.submit(track_many, homotopy, starts[idx], sub, scale, _offset + int(idx[0]))
                for idx in chunks
                if len(idx)
            ]
            out: list[PathResult] = []
            for f in futures:
                out.extend(f.result())
        return out

    Z = starts.copy()
    h = np.ones(n)
    dt = np.full(n, min(settings.dt_initial, settings.dt_max))
    nsucc = np.zeros(n, dtype=int)
    steps = np.zeros(n, dtype=int)
    status = np.zeros(n, dtype=np.int8)  # 0 active, 1 converged, 2 diverged, 3 step-failure
    reason = np.zeros(n, dtype=np.int8)  # 0 -, 1 norm, 2 newton, 3 stages, 4 trend
    eg = settings.endgame_radius

    # ---- main phase: adaptive stepping down to the endgame boundary ----
    every = np.ones(n, dtype=bool)
    _advance(
        homotopy, Z, h, dt, nsucc, steps, status, reason, every, eg,
        settings.newton_tol, settings.newton_iters, settings,
    )

    # ---- endgame: geometric h-halving with Richardson extrapolation ----
    seqs = np.full((n, settings.endgame_stages + 1, nv), np.nan, dtype=complex)
    eg_idx = np.where(status == 0)[0]
    seqs[eg_idx, 0] = Z[eg_idx]
    entry_norm = np.ones(n)
    entry_norm[eg_idx] = np.abs(Z[eg_idx]).max(axis=1)
    n_samples = np.ones(n, dtype=int)
    settled = np.zeros(n, dtype=bool)
    extrap = Z.copy()
    eg_tol = settings.newton_tol * 1e-2

    def _runs_to_infinity(i: int) -> bool:
        """Whole-history test: geometric samples marching outward at every
        scale (clean power-law norm growth, non-shrinking differences) mean
        the path runs into the locus at infinity."""
        m = n_samples[i]
        if m < 6:
            return False
        norms = np.abs(seqs[i, :m]).max(axis=1)
        if norms[-1] > settings.finite_norm:
            return True
        diffs = np.abs(np.diff(seqs[i, :m], axis=0)).max(axis=1)
        # converging paths have differences shrinking towards zero
        if diffs[-1] <= 1e-10 * (1.0 + norms[-1]) or diffs[-1] < 0.25 * diffs.max():
            return False
        stages = np.arange(m, dtype=float)
        slope = np.polyfit(stages, np.log2(norms + 1e-300), 1)[0]
        grew = norms[-1] > 4.0 * norms.min() and norms[-1] > max(
            25.0, 2.0 * entry_norm[i]
        )
        return bool(slope > 0.02 and grew)

    def _steady_outward_march(i: int) -> bool:
        """Clean constant-rate geometric growth at a large norm: the path is
        on a power-law run into the locus at infinity and can be cut."""
        m = n_samples[i]
        if m < 12:
            return False
        norms = np.abs(seqs[i, m - 9 : m]).max(axis=1)
        if norms[-1] < max(1e4, 10.0 * entry_norm[i]) or np.any(np.diff(norms) <= 0):
            return False
        lograt = np.log2(norms[1:] / norms[:-1])
        return bool(
            lograt.min() > 0.02 and lograt.max() < 1.8 and lograt.std() < 0.15
        )

    for stage in range(settings.endgame_stages):
        active_mask = (status == 0) & ~settled
        if not active_mask.any():
            break
        floor = eg * 0.5 ** (stage + 1)
        _advance(
            homotopy, Z, h, dt, nsucc, steps, status, reason, active_mask, floor,
            eg_tol, settings.endgame_newton_iters, settings,
            relative_dt_floor=True, max_rounds=24,
        )
        still = np.where(active_mask & (status == 0))[0]
        seqs[still, n_samples[still]] = Z[still]
        n_samples[still] += 1
        for i in still:
            m = n_samples[i]
            est = _richardson(seqs[i, :m])
            if m >= 3:
                prev = extrap[i]
                if np.abs(est - prev).max() <= 1e-12 * (1.0 + np.abs(est).max()):
                    settled[i] = True
            extrap[i] = est
            if not settled[i] and _steady_outward_march(i):
                status[i] = 2
                reason[i] = 4

    # classify leftovers: exhausted stages or mid-endgame deaths whose sample
    # history marches outward ran into the locus at infinity
    for i in np.where((status == 0) & ~settled)[0]:
        if _runs_to_infinity(i):
            status[i] = 2
            reason[i] = 3
    for i in np.where(status == 3)[0]:
        if _runs_to_infinity(i):
            status[i] = 2

    # ---- extrapolate, polish against the target, classify ----
    # step-failed paths still carry an extrapolant that may sit inside the
    # Newton basin of their target root, so they join the polish too
    results: list[PathResult] = []
    final = np.where((status == 0) | (status == 3))[0]
    endpoints = Z.copy()
    has_extrap = (status == 0) | ((status == 3) & (n_samples >= 3))
    endpoints[has_extrap] = extrap[has_extrap]

    def scaled_residual(batch: np.ndarray) -> np.ndarray:
        H, _, _ = homotopy.eval(batch, np.zeros(batch.shape[0]), need_dh=False)
        return (np.abs(H) / scale[None, :]).max(axis=1)

    if final.size:
        batch = endpoints[final]
        res = scaled_residual(batch)
        best = batch.copy()
        best_res = res.copy()
        for _ in range(8):
            H, J, _ = homotopy.eval(batch, np.zeros(batch.shape[0]), need_dh=False)
            delta = -_solve(J, H)
            bad = ~np.isfinite(delta).all(axis=1)
            delta[bad] = 0.0
            batch = batch + delta
            res = scaled_residual(batch)
            better = res < best_res
            best[better] = batch[better]
            best_res[better] = res[better]
        for row, i in enumerate(final):
            norm = np.abs(best[row]).max()
            if status[i] == 3:
                # only a verified root rescues a failed path
                if norm <= settings.finite_norm and best_res[row] < settings.tracking_tol:
                    status[i] = 1
                    endpoints[i] = best[row]
                continue
            endpoints[i] = best[row]
            if norm > settings.finite_norm:
                status[i] = 2
            elif best_res[row] < settings.tracking_tol:
                status[i] = 1
            else:
                status[i] = 3
        final_res = {int(i): float(best_res[row]) for row, i in enumerate(final)}
    else:
        final_res = {}

    text = {1: CONVERGED, 2: DIVERGED, 3: STEP_FAILURE}
    names = {0: "", 1: "norm", 2: "newton", 3: "stages", 4: "trend"}
    for i in range(n):
        results.append(
            PathResult(
                endpoint=endpoints[i],
                status=text[int(status[i])],
                residual=final_res.get(i, float("inf")),
                steps=int(steps[i]),
                start_index=_offset + i,
                h_final=float(h[i]) if status[i] != 1 else 0.0,
                reason=names[int(reason[i])] if status[i] != 1 else "",
            )
        )
    return results


def track_path(homotopy, start: np.ndarray, settings: TrackerSettings, scale=None) -> PathResult:
    """Track a single path (a batch of one)."""
    return track_many(homotopy, np.asarray(start, dtype=complex)[None, :], settings, scale)[0]


# ---------------------------------------------------------------------------
# generic instances, ab-initio phase and user homotopies
# ---------------------------------------------------------------------------


def draw_generic_configuration(rng: np.random.Generator, min_length: float = 0.1) -> np.ndarray:
    """Random complex configuration: nine free coordinates uniform on the
    complex square [-1,1]^2, redrawn until every bar length modulus stays
    away from zero (the 1/length^3 coefficients remain bounded)."""
    while True:
        vals = rng.uniform(-1.0, 1.0, 18).view(float)
        re, im = vals[:9], vals[9:]
        coords = re + 1j * im
        pts = np.zeros((6, 2), dtype=complex)
        pts[1, 0] = coords[0]
        pts[2] = coords[1], coords[2]
        pts[3] = coords[3], coords[4]
        pts[4] = coords[5], coords[6]
        pts[5] = coords[7], coords[8]
        ok = True
        for i, j in CANONICAL_BARS:
            d = pts[i - 1] - pts[j - 1]
            if abs(np.sqrt(d[0] ** 2 + d[1] ** 2)) < min_length:
                ok = False
                break
        if ok:
            return pts


def canonical_sort(points: np.ndarray) -> np.ndarray:
    """Lexicographic order: real parts first, then imaginary parts."""
    if points.shape[0] <= 1:
        return points
    keys = []
    for comp in (points.imag, points.real):
        for col in range(points.shape[1] - 1, -1, -1):
            keys.append(comp[:, col])
    order = np.lexsort(keys)
    return points[order]


def deduplicate(points: np.ndarray, tol: float) -> np.ndarray:
    """Merge points within coordinatewise relative tolerance; canonical order."""
    m = points.shape[0]
    if m == 0:
        return points
    parent = np.arange(m)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    size = 1.0 + np.maximum(
        np.abs(points[:, None, :]), np.abs(points[None, :, :])
    )
    close = (np.abs(points[:, None, :] - points[None, :, :]) / size).max(axis=2) < tol
    ii, jj = np.where(np.triu(close, 1))
    for a, b in zip(ii, jj):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    reps = [i for i in range(m) if find(i) == i]
    return canonical_sort(points[reps])


def _start_data(problem: AssembledProblem, system, strategy: str, rng):
    degrees = system.degrees()
    if strategy == "total-degree":
        start = TotalDegreeStart.build(degrees, rng)
        return start, start.start_points()
    if strategy == "m-homogeneous":
        grouping = problem.grouping
        if not grouping:
            raise ValueError("problem has no published grouping for m-homogeneous start")
        table = system.variables
        group_vars = [tuple(table.index(v) for v in g) for g in grouping]
        multidegrees = [
            tuple(eq.degree_in(gv) for gv in group_vars) for eq in system.equations
        ]
        start = LinearProductStart.build(group_vars, multidegrees, rng)
        return start, start.start_points()
    raise ValueError(f"unknown strategy {strategy!r}")


def _coordinate_negation_parity(problem: AssembledProblem, system) -> bool:
    """True when negating every coordinate unknown maps each equation to
    plus or minus itself, so the solution set is closed under negation."""
    nc = problem.spec.n_coords
    for eq in system.equations:
        parities = {sum(e[:nc]) % 2 for e in eq.terms}
        if len(parities) > 1:
            return False
    return True


def ab_initio(
    problem: AssembledProblem,
    strategy: str,
    settings: TrackerSettings,
) -> GenericSolutionSet:
    """Solve the generic complex instance of a problem from scratch.

    Builds a start system for the requested strategy, applies the
    gamma-trick convex combination towards the generic instance, tracks all
    start points and returns the deduplicated finite endpoints.  Troubled
    paths (step failures, endpoint collisions, near-infinity truncations at
    large h) are re-tracked with a perturbed gamma, which moves the path
    family away from the discriminant while keeping endpoint assignments.
    Per-path failures are reported, never raised.
    """
    if not problem.spec.unknowns:
        raise ValueError("problem has no unknowns")
    rng = np.random.default_rng(settings.seed)
    generic_points = draw_generic_configuration(rng)
    theta = problem.generic_theta(generic_points)
    system = problem.system_at(theta)
    if not system.is_square():
        raise ValueError("ab initio needs a square system")
    scale = system.scale_factors()

    start, start_points = _start_data(problem, system, strategy, rng)
    gamma = np.exp(2j * np.pi * rng.uniform())
    target = FixedSystem(problem.spec, theta)
    homotopy = LinearHomotopy(target, start, gamma)

    results = track_many(homotopy, start_points, settings, scale)
    pool: list[np.ndarray] = [
        r.endpoint
        for r in results
        if r.status == CONVERGED and np.abs(r.endpoint).max() < settings.finite_norm
    ]

    def _suspicious(rs) -> list[int]:
        # never-certified endings: outright step failures, main-phase
        # truncations, and Newton breakdowns at a norm short of the ceiling
        out = []
        for r in rs:
            if r.status == STEP_FAILURE:
                out.append(r.start_index)
            elif r.status == DIVERGED and (
                r.h_final > settings.endgame_radius * (1.0 + 1e-9)
                or (
                    r.reason == "newton"
                    and 1e3 <= np.abs(r.endpoint).max() < settings.finite_norm
                )
            ):
                out.append(r.start_index)
        return sorted(set(out))

    if settings.retry_failed:
        # a second full pass under a rotated gamma gives an independent path
        # family to the same roots; near-discriminant accidents (jumps,
        # wild excursions) do not repeat, so the union restores lost roots
        second = track_many(
            LinearHomotopy(target, start, gamma * np.exp(0.61j)),
            start_points,
            settings,
            scale,
        )
        pool.extend(
            r.endpoint
            for r in second
            if r.status == CONVERGED and np.abs(r.endpoint).max() < settings.finite_norm
        )
        for r2 in second:
            r1 = results[r2.start_index]
            if r1.status == STEP_FAILURE and r2.status != STEP_FAILURE:
                r2copy = replace(r2)
                results[r2.start_index] = r2copy

        deeper = replace(
            settings,
            newton_tol=settings.newton_tol * 0.1,
            dt_max=settings.dt_max * 0.5,
            dt_initial=settings.dt_initial * 0.5,
            divergence_threshold=min(settings.divergence_threshold * 1e4, 1e18),
            endgame_stages=settings.endgame_stages + 10,
            retry_failed=False,
            workers=1,
        )
        for attempt in (1, 2):
            troubled = _suspicious(results)
            if not troubled:
                break
            nudged = LinearHomotopy(target, start, gamma * np.exp(0.37j * attempt))
            redo = track_many(nudged, start_points[troubled], deeper, scale)
            for r in redo:
                orig = troubled[r.start_index]
                if r.status == CONVERGED and np.abs(r.endpoint).max() < settings.finite_norm:
                    pool.append(r.endpoint)
                if results[orig].status != CONVERGED:
                    r.start_index = orig
                    results[orig] = r

    n_failures = sum(1 for r in results if r.status == STEP_FAILURE)
    endpoints = (
        deduplicate(np.array(pool, dtype=complex), settings.dedup_tol)
        if pool
        else np.zeros((0, len(problem.spec.unknowns)), dtype=complex)
    )

    # the solution sets of the all-collinear and point-degeneration strata
    # are closed under negating the coordinates; restore partners a jumped
    # path may have lost (every added point is residual-verified)
    if endpoints.shape[0] and _coordinate_negation_parity(problem, system):
        nc = problem.spec.n_coords
        extra = []
        for e in endpoints:
            mate = e.copy()
            mate[:nc] = -mate[:nc]
            dist = np.abs(endpoints - mate[None, :]).max(axis=1) / (
                1.0 + np.abs(mate).max()
            )
            if extra:
                dist = np.concatenate(
                    [dist, np.abs(np.array(extra) - mate[None, :]).max(axis=1)
                     / (1.0 + np.abs(mate).max())]
                )
            if dist.min() > settings.dedup_tol:
                resid = (np.abs(system.evaluate(mate)) / scale).max()
                if resid < settings.tracking_tol:
                    extra.append(mate)
        if extra:
            endpoints = deduplicate(
                np.vstack([endpoints, np.array(extra)]), settings.dedup_tol
            )

    return GenericSolutionSet(
        fingerprint=problem.fingerprint(),
        tag=problem.kind.tag,
        strategy=strategy,
        seed=settings.seed,
        generic_points=generic_points,
        theta_generic=theta,
        endpoints=endpoints,
        n_paths=start_points.shape[0],
        n_failures=n_failures,
    )


def track_user_homotopy(
    generic: GenericSolutionSet,
    problem: AssembledProblem,
    settings: TrackerSettings,
    scale: np.ndarray | None = None,
) -> list[PathResult]:
    """Carry the generic finite solutions to one pose of the motion."""
    if generic.fingerprint != problem.fingerprint():
        raise ValueError("generic solution set does not match the problem structure")
    theta_pose = problem.pose_theta()
    homotopy = UserHomotopy(problem.spec, theta_pose, generic.theta_generic)
    if scale is None:
        scale = problem.system_at(theta_pose).scale_factors()
    results = track_many(homotopy, generic.endpoints, settings, scale)
    failed_idx = [r.start_index for r in results if r.status == STEP_FAILURE]
    if failed_idx and settings.retry_failed:
        tighter = replace(
            settings,
            newton_tol=settings.newton_tol * 0.1,
            dt_max=settings.dt_max * 0.5,
            dt_initial=settings.dt_initial * 0.5,
            retry_failed=False,
            workers=1,
        )
        redo = track_many(homotopy, generic.endpoints[failed_idx], tighter, scale)
        for r in redo:
            orig = failed_idx[r.start_index]
            r.start_index = orig
            results[orig] = r
    return results


# ---------------------------------------------------------------------------
# solution caches
# ---------------------------------------------------------------------------


def save_solution_set(path: str, sols: GenericSolutionSet) -> None:
    def carray(a):
        a = np.asarray(a, dtype=complex)
        return {
            "shape": list(a.shape),
            "re": [repr(float(x)) for x in a.real.ravel()],
            "im": [repr(float(x)) for x in a.imag.ravel()],
        }

    doc = {
        "format": "singdist-cache-1",
        "fingerprint": sols.fingerprint,
        "tag": sols.tag,
        "strategy": sols.strategy,
        "seed": sols.seed,
        "generic_points": carray(sols.generic_points),
        "theta_generic": carray(sols.theta_generic),
        "endpoints": carray(sols.endpoints),
        "n_paths": sols.n_paths,
        "n_failures": sols.n_failures,
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_solution_set(path: str) -> GenericSolutionSet:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "singdist-cache-1":
        raise ValueError("not a solution cache")

    def uncarray(d):
        re = np.array([float(x) for x in d["re"]])
        im = np.array([float(x) for x in d["im"]])
        return (re + 1j * im).reshape(d["shape"])

    return GenericSolutionSet(
        fingerprint=doc["fingerprint"],
        tag=doc["tag"],
        strategy=doc["strategy"],
        seed=int(doc["seed"]),
        generic_points=uncarray(doc["generic_points"]),
        theta_generic=uncarray(doc["theta_generic"]),
        endpoints=uncarray(doc["endpoints"]),
        n_paths=int(doc["n_paths"]),
        n_failures=int(doc["n_failures"]),
    )
