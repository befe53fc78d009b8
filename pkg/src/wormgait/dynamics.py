"""Exact propagation of (d, v, u) through the six gait modes.

Within one mode the rates are

    dv/dt = s_F * F(t) + s_a * alpha,      du/dt in {beta, -f_fw},
    dd/dt = 2 v,

with the sign pattern fixed by the mode table.  For piecewise-affine
force magnitudes every state component is therefore piecewise polynomial
in t and is propagated in closed form; no ODE stepping happens here (the
independent stepping integrator lives in ``oracle``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    HorizonExceededError,
    ModeSequenceError,
    ParameterError,
)
from .friction import (
    ConfigState,
    FrictionParams,
    classify_mode,
    derive_coefficients,
)
from .profiles import ForceProfile
from .schedule import GaitSchedule

__all__ = [
    "MODE_SIGNS",
    "TrajectorySegment",
    "Trajectory",
    "propagate_mode",
    "find_event_time",
    "propagate_schedule",
    "simulate_period",
]

#: case_id -> (s_F, s_a, u-rate kind); dv/dt = s_F*F + s_a*alpha.
MODE_SIGNS: dict[int, tuple[int, int, str]] = {
    1: (+1, +1, "beta"),
    2: (+1, 0, "fw"),
    3: (+1, -1, "beta"),
    4: (-1, -1, "beta"),
    5: (-1, 0, "fw"),
    6: (-1, +1, "beta"),
}

#: gait order of the cases over one period
GAIT_SEQUENCE = (1, 2, 3, 4, 5, 6)


def _mode_rates(case_id: int, params: FrictionParams) -> tuple[int, float, float]:
    if case_id not in MODE_SIGNS:
        raise ParameterError(f"case {case_id} is not a propagatable gait mode")
    coeffs = derive_coefficients(params)
    s_f, s_a, ukind = MODE_SIGNS[case_id]
    udot = coeffs.beta if ukind == "beta" else -params.f_fw
    return s_f, s_a * coeffs.alpha, udot


@dataclass(frozen=True)
class TrajectorySegment:
    """One mode interval with its closed-form state evolution."""

    case_id: int
    t_start: float
    t_end: float
    start: ConfigState
    profile: ForceProfile  # magnitude on [0, t_end - t_start]
    params: FrictionParams

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def _rates(self):
        return _mode_rates(self.case_id, self.params)

    def v_at(self, dt: float) -> float:
        s_f, a_term, _ = self._rates()
        return self.start.v + s_f * self.profile.integral(0.0, dt) + a_term * dt

    def u_at(self, dt: float) -> float:
        _, _, udot = self._rates()
        return self.start.u + udot * dt

    def d_at(self, dt: float) -> float:
        s_f, a_term, _ = self._rates()
        v_int = (
            self.start.v * dt
            + s_f * self.profile.double_integral(0.0, dt)
            + 0.5 * a_term * dt * dt
        )
        return self.start.d + 2.0 * v_int

    def state_at(self, dt: float) -> ConfigState:
        return ConfigState(
            t=self.t_start + dt,
            d=self.d_at(dt),
            v=self.v_at(dt),
            u=self.u_at(dt),
        )

    @property
    def end_state(self) -> ConfigState:
        return self.state_at(self.duration)

    def force_sign(self) -> int:
        return MODE_SIGNS[self.case_id][0]

    # -- internal roots of v (extension extrema live where v = 0) -------

    def v_zeros(self) -> list[float]:
        """Offsets dt in (0, duration) where v crosses zero."""
        s_f, a_term, _ = self._rates()
        zeros = []
        run = 0.0
        for (p, q, fp, m) in self.profile.affine_pieces(0.0, self.duration):
            # v(p + s) = v(p) + (s_f*fp + a_term)*s + s_f*m*s^2/2
            vp = self.start.v + s_f * run + a_term * p
            b = s_f * fp + a_term
            a2 = 0.5 * s_f * m
            for s in _quadratic_roots(a2, b, vp):
                t = p + s
                if 1e-15 < s and 0.0 < t < self.duration and s <= (q - p) + 1e-15:
                    zeros.append(min(t, self.duration))
            run += fp * (q - p) + 0.5 * m * (q - p) ** 2
        return sorted(set(zeros))

    # -- exact work integrals -------------------------------------------

    def actuator_work(self) -> float:
        """Integral of f(t) * v(t) over the segment (signed force, half
        the physical actuator power since the relative speed is 2v)."""
        s_f, a_term, _ = self._rates()
        total = 0.0
        run = 0.0  # integral of F from segment start
        for (p, q, fp, m) in self.profile.affine_pieces(0.0, self.duration):
            w = q - p
            vp = self.start.v + s_f * run + a_term * p
            # over s in [0, w]: F = fp + m s;  v = vp + (s_f fp + a_term) s + s_f m s^2/2
            b = s_f * fp + a_term
            c2 = 0.5 * s_f * m
            # integral F*v ds expanded in powers of s
            total += (
                fp * vp * w
                + (fp * b + m * vp) * w * w / 2.0
                + (fp * c2 + m * b) * w ** 3 / 3.0
                + m * c2 * w ** 4 / 4.0
            )
            run += fp * w + 0.5 * m * w * w
        return total

    def friction_dissipation(self) -> float:
        """Energy lost to friction on both masses over the segment."""
        s_f, a_term, udot = self._rates()
        sign1, sign2 = _VELOCITY_SIGNS[self.case_id]
        level1 = self.params.f_fw if sign1 > 0 else self.params.f_bw
        level2 = self.params.f_fw if sign2 > 0 else self.params.f_bw
        w = self.duration
        # integrals of v and u over the segment
        v_int = (
            self.start.v * w
            + s_f * self.profile.double_integral(0.0, w)
            + 0.5 * a_term * w * w
        )
        u_int = self.start.u * w + 0.5 * udot * w * w
        x1_travel = u_int - v_int  # integral of x1dot
        x2_travel = u_int + v_int
        return level1 * abs(x1_travel) + level2 * abs(x2_travel)


#: case_id -> (sign of x1dot, sign of x2dot) inside the mode
_VELOCITY_SIGNS = {
    1: (+1, -1), 2: (+1, +1), 3: (-1, +1),
    4: (-1, +1), 5: (+1, +1), 6: (+1, -1),
}


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of a s^2 + b s + c = 0, numerically stable."""
    if a == 0.0:
        if b == 0.0:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = []
    if q != 0.0:
        roots.append(q / a)
        roots.append(c / q)
    else:
        roots.append(0.0)
        roots.append(-b / a)
    return roots


def propagate_mode(
    case_id: int,
    start: ConfigState,
    F: ForceProfile,
    duration: float,
    params: FrictionParams,
) -> tuple[ConfigState, TrajectorySegment]:
    """Propagate the closed form through one mode for a fixed duration."""
    if duration < 0:
        raise ParameterError("duration must be nonnegative")
    if case_id not in MODE_SIGNS:
        raise ParameterError(f"case {case_id} is not a gait mode")
    if duration == 0.0:
        seg = TrajectorySegment(case_id, start.t, start.t, start,
                                F.window(0.0, min(F.duration, 1.0)), params)
        return start, seg
    piece = F.window(0.0, duration) if F.duration > duration else F
    if piece.duration < duration - 1e-12 * max(1.0, duration):
        raise ParameterError("force profile shorter than the requested duration")
    if piece.minimum() < params.f_bw - 1e-9 * max(1.0, params.f_bw):
        raise ParameterError(
            f"force magnitude drops below f_bw={params.f_bw} inside the segment"
        )
    seg = TrajectorySegment(case_id, start.t, start.t + duration, start, piece, params)
    return seg.end_state, seg


def find_event_time(
    case_id: int,
    start: ConfigState,
    F: ForceProfile,
    params: FrictionParams,
    horizon: float | None = None,
) -> float:
    """Duration until x1dot or x2dot first crosses zero inside the mode.

    The relevant component is strictly monotone for admissible F, so the
    root is unique; it is solved exactly per affine piece (constant and
    affine forces give linear/quadratic equations) with a bisection
    fallback, to within 1e-12 of the horizon scale.
    """
    if case_id not in MODE_SIGNS:
        raise ParameterError(f"case {case_id} is not a gait mode")
    horizon = F.duration if horizon is None else min(horizon, F.duration)
    if horizon <= 0:
        raise HorizonExceededError("empty search horizon")
    s_f, a_term, udot = _mode_rates(case_id, params)
    x1dot0 = start.u - start.v
    x2dot0 = start.u + start.v
    if x1dot0 == 0.0 or x2dot0 == 0.0:
        raise ParameterError("start state sits on a mode boundary")

    best = None
    for comp_sign, comp0 in ((-1, x1dot0), (+1, x2dot0)):
        # component(dt) = comp0 + comp_sign*(s_f*intF + a_term*dt) + udot*dt
        run = 0.0
        for (p, q, fp, m) in F.affine_pieces(0.0, horizon):
            g_p = comp0 + comp_sign * (s_f * run + a_term * p) + udot * p
            b = comp_sign * (s_f * fp + a_term) + udot
            a2 = 0.5 * comp_sign * s_f * m
            for s in _quadratic_roots(a2, b, g_p):
                if -1e-15 <= s <= (q - p) + 1e-15:
                    t = p + max(s, 0.0)
                    if t > 1e-15 * max(1.0, horizon) and (best is None or t < best):
                        best = min(t, horizon)
            run += fp * (q - p) + 0.5 * m * (q - p) ** 2
    if best is None:
        raise HorizonExceededError(
            f"no velocity zero crossing within horizon {horizon} in case {case_id}"
        )
    return best


def propagate_schedule(
    durations: tuple[float, ...],
    profile: ForceProfile,
    init: ConfigState,
    params: FrictionParams,
    cases: tuple[int, ...] = GAIT_SEQUENCE,
    schedule: GaitSchedule | None = None,
) -> "Trajectory":
    """Chain the mode closed forms over fixed phase durations.

    No event verification happens here; this is the raw chaining used both
    by ``simulate_period`` and by tests that deliberately break a phase
    duration to show closure failing.
    """
    if len(durations) != len(cases):
        raise ParameterError("durations and cases must align")
    half = sum(durations) / 2.0
    segments = []
    state = init
    offset = 0.0
    for i, (case_id, dur) in enumerate(zip(cases, durations)):
        if i == len(cases) // 2:
            offset = 0.0  # mirrored magnitude in the second half
        piece = profile.window(offset, offset + dur) if dur > 0 else None
        if dur > 0:
            state, seg = propagate_mode(case_id, state, piece, dur, params)
            segments.append(seg)
        offset += dur
    return Trajectory(
        params=params,
        segments=tuple(segments),
        schedule=schedule,
        half_period=half,
    )


def simulate_period(
    schedule: GaitSchedule,
    profile: ForceProfile,
    init: ConfigState,
    params: FrictionParams,
    event_match_tol: float = 1e-8,
) -> "Trajectory":
    """Simulate one period through cases 1..6 with event verification.

    The profile holds the force magnitude on [0, T/2]; the second half
    reuses it with the opposite sign.  The realized velocity zero
    crossings must match the schedule boundaries to within
    ``event_match_tol * T``; a deviation reports the offending time and
    the observed sign triple.
    """
    if abs(profile.duration - schedule.T / 2.0) > 1e-9 * schedule.T:
        raise ParameterError(
            f"profile covers [0, {profile.duration}], expected half period "
            f"{schedule.T / 2.0}"
        )
    if not (init.x2dot < 0.0 < init.x1dot):
        raise ModeSequenceError(
            "initial state does not satisfy the case-1 signs "
            f"(x1dot={init.x1dot}, x2dot={init.x2dot})",
            t=init.t,
            signs=(1, _sgn(init.x1dot), _sgn(init.x2dot)),
        )

    tol = event_match_tol * schedule.T
    durations = schedule.durations
    event_times: list[float] = []
    state = init
    segments = []
    offset = 0.0
    for i, case_id in enumerate(GAIT_SEQUENCE):
        if i == 3:
            offset = 0.0
        dur = durations[i]
        window_hi = min(offset + dur * 1.0, profile.duration)
        piece = profile.window(offset, window_hi)
        # verify the sign triple mid-phase before committing; components
        # within tolerance of zero are compatible with either sign (a mass
        # slides at rest while F sits exactly at f_bw)
        probe_state, _ = propagate_mode(case_id, state, piece, dur / 2.0, params)
        force_sign = MODE_SIGNS[case_id][0]
        vel_tol = 1e-9 * max(1.0, abs(probe_state.u) + abs(probe_state.v))
        exp1, exp2 = _VELOCITY_SIGNS[case_id]
        obs1 = _sgn_tol(probe_state.x1dot, vel_tol)
        obs2 = _sgn_tol(probe_state.x2dot, vel_tol)
        if (obs1 not in (0, exp1)) or (obs2 not in (0, exp2)):
            raise ModeSequenceError(
                f"expected case {case_id} at t={probe_state.t}, observed sign "
                f"triple {(force_sign, obs1, obs2)}",
                t=probe_state.t,
                signs=(force_sign, obs1, obs2),
            )
        state, seg = propagate_mode(case_id, state, piece, dur, params)
        segments.append(seg)
        # realized event: where the phase-ending velocity component vanishes
        if case_id in (1, 2, 4, 5):
            realized = _realized_event(seg, params)
            event_times.append(seg.t_start + realized)
            if abs(realized - dur) > tol:
                raise ModeSequenceError(
                    f"case {case_id} velocity crossing at {seg.t_start + realized} "
                    f"asks for duration {realized}, schedule says {dur}",
                    t=seg.t_start + realized,
                )
        else:
            event_times.append(seg.t_end)  # force switch / period end
        offset += dur
    traj = Trajectory(
        params=params,
        segments=tuple(segments),
        schedule=schedule,
        half_period=schedule.T / 2.0,
        event_times=tuple(event_times),
    )
    return traj


def _realized_event(seg: TrajectorySegment, params: FrictionParams) -> float:
    """Time offset at which the mode-ending component actually vanishes.

    Looks for the root inside the segment and, if the component has not
    quite crossed by the end, extrapolates with the end slope (first-order
    residual estimate of the mismatch)."""
    s_f, a_term, udot = _mode_rates(seg.case_id, params)
    comp_sign = +1 if seg.case_id in (1, 5) else -1  # x2dot for 1/5, x1dot for 2/4
    w = seg.duration

    def comp(dt: float) -> float:
        v = seg.v_at(dt)
        u = seg.u_at(dt)
        return u + comp_sign * v

    g_end = comp(w)
    g0 = comp(0.0)
    if g0 == 0.0:
        return 0.0
    if g0 * g_end < 0.0:
        lo, hi = 0.0, w
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if comp(mid) * g0 <= 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-15 * max(1.0, w):
                break
        return 0.5 * (lo + hi)
    # no crossing inside: linear extrapolation from the end
    slope = comp_sign * (s_f * seg.profile.value(w) + a_term) + udot
    if slope == 0.0:
        return w if abs(g_end) < 1e-12 else math.inf
    return w - g_end / slope


def _sgn(x: float) -> int:
    return (x > 0) - (x < 0)


def _sgn_tol(x: float, tol: float) -> int:
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


@dataclass(frozen=True)
class Trajectory:
    """Closed-form gait trajectory: mode segments plus event metadata."""

    params: FrictionParams
    segments: tuple[TrajectorySegment, ...]
    half_period: float
    schedule: GaitSchedule | None = None
    event_times: tuple[float, ...] = ()

    @property
    def initial_state(self) -> ConfigState:
        return self.segments[0].start

    @property
    def final_state(self) -> ConfigState:
        return self.segments[-1].end_state

    @property
    def t_start(self) -> float:
        return self.segments[0].t_start

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    @property
    def mode_log(self) -> tuple[tuple[int, float, float], ...]:
        return tuple((s.case_id, s.t_start, s.t_end) for s in self.segments)

    def segment_at(self, t: float) -> TrajectorySegment:
        eps = 1e-12 * max(1.0, abs(self.t_end))
        if t < self.t_start - eps or t > self.t_end + eps:
            raise ParameterError(f"t={t} outside [{self.t_start}, {self.t_end}]")
        for seg in self.segments:
            if t <= seg.t_end or seg is self.segments[-1]:
                return seg
        raise AssertionError("unreachable")

    def state_at(self, t: float) -> ConfigState:
        seg = self.segment_at(t)
        dt = min(max(t - seg.t_start, 0.0), seg.duration)
        return seg.state_at(dt)

    def v_at(self, t: float) -> float:
        return self.state_at(t).v

    def u_at(self, t: float) -> float:
        return self.state_at(t).u

    def d_at(self, t: float) -> float:
        return self.state_at(t).d

    def signed_force_at(self, t: float) -> float:
        seg = self.segment_at(t)
        dt = min(max(t - seg.t_start, 0.0), seg.duration)
        return seg.force_sign() * seg.profile.value(dt)

    def sample(self, n: int = 1000) -> np.ndarray:
        """Uniform samples: columns (t, d, v, u, f_signed)."""
        ts = np.linspace(self.t_start, self.t_end, n)
        out = np.empty((n, 5))
        for i, t in enumerate(ts):
            s = self.state_at(t)
            out[i] = (t, s.d, s.v, s.u, self.signed_force_at(t))
        return out

    def extension_extrema(self) -> tuple[float, float, float]:
        """(peak-to-peak extension E, argmin time, argmax time).

        Candidates are the endpoints and the interior zeros of v (d has a
        stationary point exactly where the relative velocity vanishes)."""
        candidates = [(self.t_start, self.initial_state.d)]
        for seg in self.segments:
            for dt in seg.v_zeros():
                candidates.append((seg.t_start + dt, seg.d_at(dt)))
            candidates.append((seg.t_end, seg.end_state.d))
        t_min, d_min = min(candidates, key=lambda c: (c[1], c[0]))
        t_max, d_max = max(candidates, key=lambda c: (c[1], -c[0]))
        return d_max - d_min, t_min, t_max

    def actuator_work(self) -> float:
        """Signed-force work integral of f*v over the trajectory."""
        return sum(seg.force_sign() * seg.actuator_work() for seg in self.segments)

    def physical_actuator_work(self) -> float:
        """Work done by the actuator on both masses: integral of f * dd."""
        return 2.0 * self.actuator_work()

    def friction_dissipation(self) -> float:
        return sum(seg.friction_dissipation() for seg in self.segments)

    def kinetic_energy_change(self) -> float:
        a, b = self.initial_state, self.final_state
        ke = lambda s: 0.5 * (s.x1dot ** 2 + s.x2dot ** 2)
        return ke(b) - ke(a)

    def min_u(self) -> float:
        """Minimum center-of-mass velocity over the trajectory (u is
        piecewise linear, so segment endpoints suffice)."""
        vals = [self.initial_state.u]
        vals.extend(seg.end_state.u for seg in self.segments)
        return min(vals)

    def drift(self) -> float:
        """Exact integral of u over the trajectory (center-of-mass
        displacement)."""
        total = 0.0
        for seg in self.segments:
            _, _, udot = seg._rates()
            w = seg.duration
            total += seg.start.u * w + 0.5 * udot * w * w
        return total
