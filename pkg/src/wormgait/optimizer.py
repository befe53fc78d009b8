"""Variational phase-2 force, the phase-offset quadratic, and the
(T1, Tmin) sweep.

Minimizing the period work over admissible phase-2 profiles with the
internal and final cumulative targets fixed is a bounded-control
variational problem; the switching function is strictly monotone, so the
optimum is two-level: late burst before the extension minimum (f_bw then
f_u on [0, Tmin]) and early burst after (f_u then f_bw on [Tmin, T2]),
with switch offsets

    tau1 = (Tmin f_u - (beta T1 + u1)) / (f_u - f_bw),
    tau2 = (Tmin f_bw - 2 alpha T2 + beta T1 + u1) / (f_u - f_bw).

The middle plateau therefore spans [tau1, Tmin + tau2]; continuity fixes
the third interval to start at Tmin + tau2.

The unit-distance power is quadratic in Tmin for this profile, so the
1-D optimum is taken from a three-point quadratic fit plus the window
endpoints, guarded by a dense scan.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllCellsInfeasibleError,
    InfeasibleRegionError,
    InfeasibleTargetsError,
    ParameterError,
)
from .friction import DerivedCoefficients, FrictionParams, derive_coefficients
from .performance import distance_and_velocity, work_constants
from .profiles import (
    BoundaryTargets,
    ForceProfile,
    boundary_targets,
    g_functional,
    h_constant,
    integral_range,
    synthesize_HI,
    two_level_profile,
)
from .schedule import (
    GaitSchedule,
    build_schedule,
    feasible_region,
    select_initial_conditions,
    t1_interval,
)

__all__ = [
    "GaitProblem",
    "BangBangParams",
    "CellResult",
    "SweepResult",
    "bangbang_G",
    "tmin_window",
    "evaluate_cell",
    "optimize_tmin",
    "sweep",
    "max_velocity_T1",
]

#: relative tolerance under which two cell values count as tied; ties
#: break toward the smallest T1 ratio, then the smallest Tmin ratio
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class GaitProblem:
    """Fixed data of the unit-distance power minimization."""

    params: FrictionParams
    T: float
    L: float
    u_ratio: float = 0.2
    v_ratio: float = 0.5

    @property
    def coeffs(self) -> DerivedCoefficients:
        return derive_coefficients(self.params)


@dataclass(frozen=True)
class BangBangParams:
    """Switch offsets of the two-level phase-2 profile."""

    tau1: float
    tau2: float
    tmin: float
    T2: float

    @property
    def switch_times(self) -> tuple[float, float]:
        return (self.tau1, self.tmin + self.tau2)


def tmin_window(
    schedule: GaitSchedule,
    u1: float,
    params: FrictionParams,
) -> tuple[float, float]:
    """Existence window for the phase-2 velocity-zero offset."""
    c = derive_coefficients(params)
    gamma = (c.beta * schedule.T1 + u1) / params.f_u
    T2 = schedule.T2
    lo = max(gamma, T2 * (1.0 + c.rho) - gamma * c.eta)
    hi = min(gamma * c.eta, T2 * (1.0 + c.rho / c.eta) - gamma)
    return lo, hi


def bangbang_G(
    T1: float,
    tmin: float,
    targets: BoundaryTargets,
    params: FrictionParams,
) -> tuple[BangBangParams, ForceProfile]:
    """Work-minimizing two-level phase-2 profile hitting G_mid and G_end."""
    if params.f_u <= params.f_bw:
        raise ParameterError("no control authority: f_u must exceed f_bw")
    c = derive_coefficients(params)
    T2 = targets.T2
    g_mid = targets.G_mid
    span = params.f_u - params.f_bw
    tau1 = (tmin * params.f_u - g_mid) / span
    tau2 = (tmin * params.f_bw - 2.0 * c.alpha * T2 + g_mid) / span
    tol = 1e-9 * max(1.0, T2)
    if not (-tol <= tau1 <= tmin + tol):
        raise ParameterError(
            f"tau1={tau1} outside [0, {tmin}]: tmin is outside its first "
            "existence window"
        )
    if not (-tol <= tau2 <= (T2 - tmin) + tol):
        raise ParameterError(
            f"tau2={tau2} outside [0, {T2 - tmin}]: tmin is outside its "
            "second existence window"
        )
    tau1 = min(max(tau1, 0.0), tmin)
    tau2 = min(max(tau2, 0.0), T2 - tmin)
    profile = two_level_profile([
        (params.f_bw, tau1),
        (params.f_u, (tmin + tau2) - tau1),
        (params.f_bw, T2 - (tmin + tau2)),
    ])
    return BangBangParams(tau1=tau1, tau2=tau2, tmin=tmin, T2=T2), profile


@dataclass(frozen=True)
class CellResult:
    """Everything computed for one (T1 ratio, Tmin ratio) cell."""

    t1r: float
    tminr: float
    feasible: bool
    reason: str = ""
    T1: float = float("nan")
    tmin: float = float("nan")
    u1: float = float("nan")
    v1: float = float("nan")
    pu: float = float("nan")
    W_total: float = float("nan")
    X: float = float("nan")
    V: float = float("nan")
    required_rhs: float = float("nan")
    rhs_band: tuple[float, float] | None = None
    excursion_band: tuple[float, float] | None = None
    excursion_ok: bool = False
    schedule: GaitSchedule | None = None
    targets: BoundaryTargets | None = None
    bang_bang: BangBangParams | None = None
    g_piece: ForceProfile | None = None


def evaluate_cell(problem: GaitProblem, t1r: float, tminr: float) -> CellResult:
    """Full closed-form pipeline for one grid cell.

    A cell is feasible when its initial-condition region and Tmin window
    are nonempty; whether the requested excursion L is realizable by
    admissible phase-1/3 pieces is reported separately (``excursion_ok``
    and the achievable band), mirroring how the substituted work formula
    treats L as a parameter."""
    p = problem.params
    c = problem.coeffs
    lo, hi = t1_interval(problem.T, c)
    T1 = lo + t1r * (hi - lo)
    try:
        region = feasible_region(problem.T, T1, p, c)
        if region.empty:
            return CellResult(t1r, tminr, False, reason="empty (u1, v1) region")
        u1, v1 = select_initial_conditions(region, problem.u_ratio, problem.v_ratio)
        schedule = region._schedule
        targets = boundary_targets(schedule, u1, v1, p)
        w_lo, w_hi = tmin_window(schedule, u1, p)
        if w_lo > w_hi:
            return CellResult(t1r, tminr, False, reason="empty tmin window",
                              T1=T1, u1=u1, v1=v1)
        tmin = w_lo + tminr * (w_hi - w_lo)
        bb, g_piece = bangbang_G(T1, tmin, targets, p)
    except (InfeasibleRegionError, InfeasibleTargetsError, ParameterError) as e:
        return CellResult(t1r, tminr, False, reason=str(e))

    j = g_functional(g_piece, tmin)
    h = h_constant(schedule, tmin, u1, v1, p)
    w1c, w2c, w3c = work_constants(targets, p)
    w_total = (
        2.0 * (w1c + w2c + w3c)
        + c.alpha * problem.L
        - 2.0 * c.alpha * h
        + 2.0 * c.alpha * j
    )
    X, V = distance_and_velocity(problem.T, T1, u1, c, p.f_fw)
    pu = w_total / (problem.T * X)
    required = 0.5 * problem.L - h + j
    h_rng = integral_range(targets.T1, targets.H_end, p)
    i_rng = integral_range(targets.T3, targets.I_end, p)
    rhs_band = (i_rng[0] - h_rng[1], i_rng[1] - h_rng[0])
    exc_band = (2.0 * (h - j + rhs_band[0]), 2.0 * (h - j + rhs_band[1]))
    tol = 1e-9 * max(1.0, abs(rhs_band[0]), abs(rhs_band[1]))
    excursion_ok = rhs_band[0] - tol <= required <= rhs_band[1] + tol
    return CellResult(
        t1r=t1r, tminr=tminr, feasible=True,
        T1=T1, tmin=tmin, u1=u1, v1=v1,
        pu=pu, W_total=w_total, X=X, V=V,
        required_rhs=required, rhs_band=rhs_band,
        excursion_band=exc_band, excursion_ok=excursion_ok,
        schedule=schedule.with_tmin(tmin), targets=targets,
        bang_bang=bb, g_piece=g_piece,
    )


def optimize_tmin(
    problem: GaitProblem,
    T1: float,
    scan_points: int = 1000,
) -> tuple[float, float]:
    """(tmin*, P_u*) minimizing the unit-distance power at fixed T1.

    Fits the asserted quadratic through three window points, evaluates
    its vertex (when interior) against the window endpoints, and guards
    the result with a dense scan."""
    p = problem.params
    c = problem.coeffs
    region = feasible_region(problem.T, T1, p, c)
    if region.empty:
        raise InfeasibleRegionError(f"no gait at T1={T1}")
    u1, v1 = select_initial_conditions(region, problem.u_ratio, problem.v_ratio)
    schedule = region._schedule
    w_lo, w_hi = tmin_window(schedule, u1, p)
    if w_lo > w_hi:
        raise InfeasibleRegionError(f"empty tmin window at T1={T1}")
    lo_r, hi_r = t1_interval(problem.T, c)
    t1r = (T1 - lo_r) / (hi_r - lo_r)

    def pu_at(tmin: float) -> float:
        tminr = 0.0 if w_hi == w_lo else (tmin - w_lo) / (w_hi - w_lo)
        cell = evaluate_cell(problem, t1r, tminr)
        if not cell.feasible:
            return float("inf")
        return cell.pu

    if w_hi == w_lo:
        return w_lo, pu_at(w_lo)

    mid = 0.5 * (w_lo + w_hi)
    xs = np.array([w_lo, mid, w_hi])
    ys = np.array([pu_at(x) for x in xs])
    candidates = [(ys[0], w_lo), (ys[2], w_hi)]
    a, b, _ = np.polyfit(xs, ys, 2)
    if a > 0:
        vertex = -b / (2.0 * a)
        if w_lo < vertex < w_hi:
            candidates.append((pu_at(vertex), vertex))
    candidates.append((ys[1], mid))
    best_val, best_t = min(candidates, key=lambda c: c[0])

    if scan_points and scan_points > 1:
        grid = np.linspace(w_lo, w_hi, scan_points)
        vals = np.array([pu_at(x) for x in grid])
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_t = vals[k], grid[k]
    return float(best_t), float(best_val)


@dataclass(frozen=True)
class SweepResult:
    """Grid of P_u over (T1 ratio, Tmin ratio) plus the refined argmin."""

    t1r_values: np.ndarray
    tminr_values: np.ndarray
    pu: np.ndarray          # shape (n1, n2); NaN on infeasible cells
    feasible: np.ndarray    # bool mask
    excursion_ok: np.ndarray
    argmin: tuple[float, float]       # refined (t1r*, tminr*)
    argmin_grid: tuple[int, int]      # indices of the winning grid cell
    pu_min: float
    argmin_cell: CellResult
    v_ratio_sensitivity: float = float("nan")

    @property
    def n_feasible(self) -> int:
        return int(self.feasible.sum())


def sweep(
    problem: GaitProblem,
    n1: int,
    n2: int,
    workers: int = 1,
    refine: bool = True,
) -> SweepResult:
    """Evaluate the cell grid, pick the argmin, refine Tmin at that T1.

    Cells are pure and independent; with ``workers > 1`` they are
    evaluated concurrently and merged back in grid order.  Ties within
    TIE_RTOL break toward the smallest T1 ratio then Tmin ratio (the
    surface is exactly flat in T1 for fixed ratios, so ties are the
    normal case, not the exception)."""
    if n1 < 2 or n2 < 2:
        raise ParameterError("grid must be at least 2 x 2")
    t1rs = np.linspace(0.0, 1.0, n1)
    tminrs = np.linspace(0.0, 1.0, n2)
    cells_idx = [(i, j) for i in range(n1) for j in range(n2)]

    def run(ij):
        i, j = ij
        return evaluate_cell(problem, float(t1rs[i]), float(tminrs[j]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cells_idx))
    else:
        results = [run(ij) for ij in cells_idx]

    pu = np.full((n1, n2), np.nan)
    feas = np.zeros((n1, n2), dtype=bool)
    exc = np.zeros((n1, n2), dtype=bool)
    by_idx: dict[tuple[int, int], CellResult] = {}
    for (i, j), cell in zip(cells_idx, results):
        by_idx[(i, j)] = cell
        if cell.feasible:
            pu[i, j] = cell.pu
            feas[i, j] = True
            exc[i, j] = cell.excursion_ok
    if not feas.any():
        raise AllCellsInfeasibleError(
            f"all {n1}x{n2} cells infeasible for T={problem.T}, L={problem.L}"
        )
    vmin = np.nanmin(pu)
    tie_cut = vmin + TIE_RTOL * max(1.0, abs(vmin))
    winner = min(
        (idx for idx in cells_idx if feas[idx] and pu[idx] <= tie_cut),
    )
    best_cell = by_idx[winner]
    argmin = (float(t1rs[winner[0]]), float(tminrs[winner[1]]))
    pu_min = float(pu[winner])

    if refine:
        tmin_star, pu_star = optimize_tmin(problem, best_cell.T1)
        if pu_star <= pu_min:
            sched = best_cell.schedule
            w_lo, w_hi = tmin_window(sched, best_cell.u1, problem.params)
            tminr_star = 0.0 if w_hi == w_lo else (tmin_star - w_lo) / (w_hi - w_lo)
            refined = evaluate_cell(problem, argmin[0], tminr_star)
            if refined.feasible:
                best_cell = refined
                argmin = (argmin[0], float(tminr_star))
                pu_min = float(refined.pu)

    sens = _v_ratio_sensitivity(problem, best_cell)
    return SweepResult(
        t1r_values=t1rs, tminr_values=tminrs, pu=pu,
        feasible=feas, excursion_ok=exc,
        argmin=argmin, argmin_grid=winner, pu_min=pu_min,
        argmin_cell=best_cell, v_ratio_sensitivity=sens,
    )


def _v_ratio_sensitivity(problem: GaitProblem, cell: CellResult) -> float:
    """Max spread of P_u across v_ratio in {0, 1/2, 1} at the argmin cell
    (recorded for documentation; analytically the spread is zero)."""
    vals = []
    for vr in (0.0, 0.5, 1.0):
        alt = GaitProblem(problem.params, problem.T, problem.L,
                          problem.u_ratio, vr)
        res = evaluate_cell(alt, cell.t1r, cell.tminr)
        if res.feasible:
            vals.append(res.pu)
    if len(vals) < 2:
        return float("nan")
    return max(vals) - min(vals)


def max_velocity_T1(T: float, coeffs: DerivedCoefficients) -> float:
    """T1 maximizing the average velocity at fixed u1.

    V is affine in T1 with slope beta > 0, so the maximum sits at the
    upper end of the admissible interval, T * rho / (1 + rho); returned
    clamped just inside the open interval."""
    if not 0.0 < coeffs.rho < 1.0:
        raise ParameterError("rho must lie in (0, 1)")
    _, hi = t1_interval(T, coeffs)
    return hi
