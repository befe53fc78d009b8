"""Independent numerical reference: stick-slip RK4 integrator and
profile-space search comparators.

Nothing in here reuses the closed forms from ``dynamics``: the integrator
steps the Newtonian equations

    x1'' = -f(t) + friction(x1'),    x2'' = +f(t) + friction(x2')

directly with a fixed-step explicit fourth-order scheme, locating velocity
zero crossings by sign change plus bisection and restarting there.  At a
zero crossing a mass sticks only while the net applied force magnitude is
below the static level f_0 (non-strict breakaway: |net| >= f_0 moves).

The random-profile sampler and the exhaustive two-level search provide
the dominance checks for the variational phase-2 construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ParameterError, WormgaitError
from .friction import ConfigState, FrictionParams, WormState, from_config
from .profiles import BoundaryTargets, ForceProfile, ForceSegment, two_level_profile

__all__ = [
    "OracleOptions",
    "OracleResult",
    "integrate_ode",
    "signed_force_pieces",
    "random_admissible_profile",
    "brute_force_optimal_G",
]


@dataclass(frozen=True)
class OracleOptions:
    """Integrator controls.

    ``step`` is the base step (default horizon/1e5); ``event_tol`` the
    bisection time tolerance (default 1e-11 * horizon, must stay at or
    below 1e-10 * horizon); ``stick_threshold`` the velocity magnitude
    treated as rest (<= 1e-9); ``record_stride`` thins the stored rows.
    """

    step: float | None = None
    event_tol: float | None = None
    stick_threshold: float = 1e-12
    record_stride: int = 1

    def resolved(self, horizon: float) -> tuple[float, float, float, int]:
        step = self.step if self.step is not None else horizon / 1e5
        event_tol = self.event_tol if self.event_tol is not None else 1e-11 * horizon
        if step <= 0:
            raise ParameterError("step must be positive")
        if event_tol > 1e-10 * horizon:
            raise ParameterError("event_tol must be <= 1e-10 * horizon")
        if self.stick_threshold > 1e-9:
            raise ParameterError("stick_threshold must be <= 1e-9")
        return step, event_tol, self.stick_threshold, max(1, int(self.record_stride))


@dataclass(frozen=True)
class OracleResult:
    """Rows (t, x1, x2, x1dot, x2dot) plus detected velocity events."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x1dot: np.ndarray
    x2dot: np.ndarray
    event_times: np.ndarray
    event_mass: np.ndarray  # 1 or 2

    @property
    def final(self) -> WormState:
        return WormState(
            t=float(self.t[-1]), x1=float(self.x1[-1]), x2=float(self.x2[-1]),
            x1dot=float(self.x1dot[-1]), x2dot=float(self.x2dot[-1]),
        )

    def config_rows(self) -> np.ndarray:
        """Columns (t, d, v, u)."""
        d = self.x2 - self.x1
        v = 0.5 * (self.x2dot - self.x1dot)
        u = 0.5 * (self.x1dot + self.x2dot)
        return np.column_stack([self.t, d, v, u])


def signed_force_pieces(
    profile: ForceProfile, period: float, horizon: float, t0: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Piecewise-affine (edges, value, slope) arrays of the signed,
    antisymmetrically extended force on [t0, t0 + horizon]."""
    half = period / 2.0
    if abs(profile.duration - half) > 1e-9 * period:
        raise ParameterError("profile must cover exactly half the period")
    base = profile.affine_pieces()
    edges, vals, slopes = [], [], []
    t = t0
    k = int(math.floor(t0 / half + 1e-15))
    # walk half-period tiles until the horizon is covered
    while t < t0 + horizon - 1e-15 * max(1.0, horizon):
        sign = 1.0 if k % 2 == 0 else -1.0
        shift = k * half
        for (p, q, fp, m) in base:
            lo, hi = p + shift, q + shift
            if hi <= t0 or lo >= t0 + horizon:
                continue
            start = max(lo, t0)
            edges.append(start)
            vals.append(sign * (fp + m * (start - lo)))
            slopes.append(sign * m)
        k += 1
        t = k * half
    edges.append(t0 + horizon)
    return np.asarray(edges), np.asarray(vals), np.asarray(slopes)


@njit(cache=True)
def _force_at(t, edges, vals, slopes):
    n = vals.shape[0]
    idx = np.searchsorted(edges, t, side="right") - 1
    if idx < 0:
        idx = 0
    if idx > n - 1:
        idx = n - 1
    return vals[idx] + slopes[idx] * (t - edges[idx])


@njit(cache=True)
def _accels_from_f(f, r1, r2, f_fw, f_bw, f_0):
    # mass 1 feels -f, mass 2 feels +f
    a = np.empty(2)
    nets = (-f, f)
    regimes = (r1, r2)
    for i in range(2):
        net = nets[i]
        r = regimes[i]
        if r > 0:
            a[i] = net - f_fw
        elif r < 0:
            a[i] = net + f_bw
        else:
            if abs(net) < f_0:
                a[i] = 0.0
            elif net > 0.0:
                a[i] = net - f_fw
            else:
                a[i] = net + f_bw
    return a


@njit(cache=True)
def _rk4_step(t, y, h, r1, r2, pe, pv, ps, f_fw, f_bw, f_0):
    # y = (x1, x2, v1, v2); acceleration depends on t and the frozen
    # regimes only.  The whole step lies inside a single force piece
    # (value pv, slope ps from edge pe), so stage times landing exactly
    # on the next breakpoint still read the correct one-sided force.
    out = y.copy()
    a1 = _accels_from_f(pv + ps * (t - pe), r1, r2, f_fw, f_bw, f_0)
    a2 = _accels_from_f(pv + ps * (t + 0.5 * h - pe), r1, r2, f_fw, f_bw, f_0)
    a4 = _accels_from_f(pv + ps * (t + h - pe), r1, r2, f_fw, f_bw, f_0)
    v1_mid = y[2] + 0.5 * h * a1[0]
    v2_mid = y[3] + 0.5 * h * a1[1]
    v1_mid2 = y[2] + 0.5 * h * a2[0]
    v2_mid2 = y[3] + 0.5 * h * a2[1]
    v1_end = y[2] + h * a2[0]
    v2_end = y[3] + h * a2[1]
    # positions: x' = v (k1..k4 on v), velocities: v' = a(t)
    out[0] = y[0] + h / 6.0 * (y[2] + 2.0 * v1_mid + 2.0 * v1_mid2 + v1_end)
    out[1] = y[1] + h / 6.0 * (y[3] + 2.0 * v2_mid + 2.0 * v2_mid2 + v2_end)
    out[2] = y[2] + h / 6.0 * (a1[0] + 4.0 * a2[0] + a4[0])
    out[3] = y[3] + h / 6.0 * (a1[1] + 4.0 * a2[1] + a4[1])
    if r1 == 0:
        out[2] = 0.0
    if r2 == 0:
        out[3] = 0.0
    return out


@njit(cache=True)
def _integrate_core(
    y0, t0, t_end, step, edges, vals, slopes,
    f_fw, f_bw, f_0, thr, event_tol, stride,
):
    max_steps = int((t_end - t0) / step) + 8
    n_rec = max_steps // stride + 64
    ts = np.empty(n_rec)
    ys = np.empty((n_rec, 4))
    ev_t = np.empty(256)
    ev_m = np.empty(256, dtype=np.int64)
    n_ev = 0

    def regime_of(v, net):
        if abs(v) > thr:
            if v > 0.0:
                return 1
            return -1
        if abs(net) < f_0:
            return 0
        if net > 0.0:
            return 1
        return -1

    t = t0
    y = y0.copy()
    f = _force_at(t, edges, vals, slopes)
    r1 = regime_of(y[2], -f)
    r2 = regime_of(y[3], f)
    if r1 == 0:
        y[2] = 0.0
    if r2 == 0:
        y[3] = 0.0

    ts[0] = t
    ys[0] = y
    n_out = 1
    k_step = 0
    status = 0

    while t < t_end - 1e-15 * (abs(t_end) + 1.0):
        h = step
        if t + h > t_end:
            h = t_end - t
        # do not straddle force breakpoints
        idx = np.searchsorted(edges, t, side="right")
        if idx < edges.shape[0]:
            nb = edges[idx]
            if nb - t > 1e-15 * (abs(t) + 1.0) and t + h > nb:
                h = nb - t
        pidx = idx - 1
        if pidx < 0:
            pidx = 0
        if pidx > vals.shape[0] - 1:
            pidx = vals.shape[0] - 1
        pe = edges[pidx]
        pv = vals[pidx]
        ps = slopes[pidx]
        y_new = _rk4_step(t, y, h, r1, r2, pe, pv, ps, f_fw, f_bw, f_0)
        if not (np.isfinite(y_new[0]) and np.isfinite(y_new[2]) and np.isfinite(y_new[3])):
            status = 1
            break

        # velocity sign-change events under the frozen regimes
        tau = h + 1.0
        which = 0
        if r1 != 0 and y_new[2] * r1 < -0.0 and abs(y_new[2]) > 0.0:
            lo, hi = 0.0, h
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                ym = _rk4_step(t, y, mid, r1, r2, pe, pv, ps, f_fw, f_bw, f_0)
                if ym[2] * r1 <= 0.0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= event_tol:
                    break
            if hi < tau:
                tau = hi
                which = 1
        if r2 != 0 and y_new[3] * r2 < -0.0 and abs(y_new[3]) > 0.0:
            lo, hi = 0.0, h
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                ym = _rk4_step(t, y, mid, r1, r2, pe, pv, ps, f_fw, f_bw, f_0)
                if ym[3] * r2 <= 0.0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= event_tol:
                    break
            if hi < tau:
                tau = hi
                which = 2

        if which != 0:
            y = _rk4_step(t, y, tau, r1, r2, pe, pv, ps, f_fw, f_bw, f_0)
            t = t + tau
            f = _force_at(t, edges, vals, slopes)
            if which == 1:
                y[2] = 0.0
                r1 = regime_of(0.0, -f)
            else:
                y[3] = 0.0
                r2 = regime_of(0.0, f)
            if n_ev < ev_t.shape[0]:
                ev_t[n_ev] = t
                ev_m[n_ev] = which
                n_ev += 1
        else:
            y = y_new
            t = t + h
            # stuck masses: breakaway check at the new time
            f = _force_at(t, edges, vals, slopes)
            if r1 == 0 and abs(-f) >= f_0:
                r1 = 1 if -f > 0.0 else -1
            if r2 == 0 and abs(f) >= f_0:
                r2 = 1 if f > 0.0 else -1

        k_step += 1
        if k_step % stride == 0 or which != 0 or t >= t_end - 1e-15 * (abs(t_end) + 1.0):
            if n_out >= ts.shape[0]:
                ts2 = np.empty(ts.shape[0] * 2)
                ys2 = np.empty((ts.shape[0] * 2, 4))
                ts2[: n_out] = ts[: n_out]
                ys2[: n_out] = ys[: n_out]
                ts = ts2
                ys = ys2
            ts[n_out] = t
            ys[n_out] = y
            n_out += 1

    return ts[:n_out], ys[:n_out], ev_t[:n_ev], ev_m[:n_ev], status


def integrate_ode(
    profile: ForceProfile,
    period: float,
    init: WormState | ConfigState,
    horizon: float,
    params: FrictionParams,
    options: OracleOptions | None = None,
) -> OracleResult:
    """Integrate the Newtonian stick-slip dynamics from ``init``.

    ``profile`` is the half-period force magnitude; the signed force is
    its antisymmetric periodic extension.  ``init`` may be given in either
    basis (a configuration state is anchored at x1 = 0)."""
    if horizon <= 0:
        raise ParameterError("horizon must be positive")
    options = options or OracleOptions()
    step, event_tol, thr, stride = options.resolved(horizon)
    if isinstance(init, ConfigState):
        init = from_config(init, x1_anchor=0.0)
    edges, vals, slopes = signed_force_pieces(profile, period, horizon, t0=init.t)
    y0 = np.array([init.x1, init.x2, init.x1dot, init.x2dot])
    ts, ys, ev_t, ev_m, status = _integrate_core(
        y0, init.t, init.t + horizon, step, edges, vals, slopes,
        params.f_fw, params.f_bw, params.f_0, thr, event_tol, stride,
    )
    if status != 0:
        raise WormgaitError("integrator produced a non-finite state")
    return OracleResult(
        t=ts, x1=ys[:, 0], x2=ys[:, 1], x1dot=ys[:, 2], x2dot=ys[:, 3],
        event_times=ev_t, event_mass=ev_m,
    )


# ---------------------------------------------------------------------------
# Profile-space comparators
# ---------------------------------------------------------------------------


def random_admissible_profile(
    targets: BoundaryTargets,
    tmin: float,
    params: FrictionParams,
    seed: int,
    max_retries: int = 8,
) -> ForceProfile:
    """Random piecewise-constant phase-2 profile meeting the internal and
    final cumulative targets exactly.

    Draws 3..20 levels in [f_bw, f_u], splits them at ``tmin``, and
    applies a per-side affine correction (uniform shift, then a blend
    toward the side's constant-feasible level) so each side integrates to
    its target while staying within bounds.  Deterministic under seed.
    """
    T2 = targets.T2
    if not 0.0 < tmin < T2:
        raise ParameterError("tmin must be strictly inside the phase")
    rng = np.random.default_rng(seed)
    side_targets = (targets.G_mid, targets.G_end - targets.G_mid)
    widths = (tmin, T2 - tmin)
    for _ in range(max_retries):
        n = int(rng.integers(3, 21))
        n1 = max(1, min(n - 1, int(round(n * tmin / T2))))
        n2 = n - n1
        sides = []
        ok = True
        for (n_side, width, target) in ((n1, widths[0], side_targets[0]),
                                        (n2, widths[1], side_targets[1])):
            levels = rng.uniform(params.f_bw, params.f_u, size=n_side)
            fixed = _project_levels(levels, width, target, params)
            if fixed is None:
                ok = False
                break
            sides.append(fixed)
        if not ok:
            continue
        pairs = []
        for (levels, width) in zip(sides, widths):
            w = width / len(levels)
            pairs.extend((float(lv), w) for lv in levels)
        return two_level_profile(pairs)
    raise ParameterError(
        f"could not project a random profile onto the targets after "
        f"{max_retries} attempts"
    )


def _project_levels(levels: np.ndarray, width: float, target: float,
                    params: FrictionParams) -> np.ndarray | None:
    n = len(levels)
    w = width / n
    c_star = target / width
    tol = 1e-12 * max(1.0, params.f_u)
    if c_star < params.f_bw - tol or c_star > params.f_u + tol:
        return None
    c_star = min(max(c_star, params.f_bw), params.f_u)
    shifted = levels + (target - w * levels.sum()) / width
    s_needed = 0.0
    for x in shifted:
        if x > params.f_u and x > c_star:
            s_needed = max(s_needed, (x - params.f_u) / (x - c_star))
        elif x < params.f_bw and x < c_star:
            s_needed = max(s_needed, (params.f_bw - x) / (c_star - x))
    s_needed = min(s_needed, 1.0)
    out = (1.0 - s_needed) * shifted + s_needed * c_star
    # the blend preserves the integral exactly up to rounding; polish it
    out += (target - w * out.sum()) / width
    if out.min() < params.f_bw - 1e-9 or out.max() > params.f_u + 1e-9:
        return None
    return np.clip(out, params.f_bw, params.f_u)


def brute_force_optimal_G(
    targets: BoundaryTargets,
    tmin: float,
    params: FrictionParams,
    slots: int = 12,
    slot_edges: tuple[tuple[float, ...], tuple[float, ...]] | None = None,
) -> tuple[ForceProfile, float]:
    """Exhaustive two-level search for the phase-2 profile minimizing the
    G functional under the cumulative targets.

    Slots are two-level {f_bw, f_u} with one slot per side allowed an
    intermediate level so the side integral matches its target exactly.
    The two sides are independent (minimize the first-side area integral,
    maximize the second's), so the search is per side.  ``slot_edges``
    overrides the uniform grids (e.g. to align switches exactly).
    """
    if slots > 16:
        raise ParameterError("slots must stay desk-scale (<= 16)")
    T2 = targets.T2
    if slot_edges is None:
        n1 = max(1, min(slots - 1, int(round(slots * tmin / T2))))
        n2 = slots - n1
        edges1 = np.linspace(0.0, tmin, n1 + 1)
        edges2 = np.linspace(tmin, T2, n2 + 1)
    else:
        edges1 = np.asarray(slot_edges[0], dtype=float)
        edges2 = np.asarray(slot_edges[1], dtype=float)

    best1 = _best_side(edges1, targets.G_mid, params, maximize=False)
    best2 = _best_side(edges2, targets.G_end - targets.G_mid, params, maximize=True)
    if best1 is None or best2 is None:
        raise ParameterError("no two-level assignment meets the targets")
    levels1, a1 = best1
    levels2, a2 = best2
    pairs = [(lv, hi - lo) for lv, lo, hi in zip(levels1, edges1, edges1[1:])]
    pairs += [(lv, hi - lo) for lv, lo, hi in zip(levels2, edges2, edges2[1:])]
    profile = two_level_profile(pairs)
    g_mid = targets.G_mid
    j_val = a1 - (g_mid * (T2 - tmin) + a2)
    return profile, j_val


def _best_side(edges: np.ndarray, target: float, params: FrictionParams,
               maximize: bool):
    """Best (levels, area-integral) over two-level assignments with one
    adjustable slot, meeting the side integral target exactly."""
    n = len(edges) - 1
    widths = np.diff(edges)
    lo, hi = params.f_bw, params.f_u
    best = None
    for mask in range(1 << n):
        base = np.where([(mask >> i) & 1 for i in range(n)], hi, lo).astype(float)
        total = float(base @ widths)
        for j in range(n):
            need = (target - (total - base[j] * widths[j])) / widths[j]
            if need < lo - 1e-12 or need > hi + 1e-12:
                continue
            levels = base.copy()
            levels[j] = min(max(need, lo), hi)
            area = _area_integral(levels, widths)
            better = (
                best is None
                or (maximize and area > best[1])
                or (not maximize and area < best[1])
            )
            if better:
                best = (levels, area)
    return best


def _area_integral(levels: np.ndarray, widths: np.ndarray) -> float:
    """Integral over the side of the running integral of the levels."""
    total = 0.0
    run = 0.0
    for lv, w in zip(levels, widths):
        total += run * w + 0.5 * lv * w * w
        run += lv * w
    return total
