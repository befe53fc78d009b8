"""Admissible actuator force profiles and cumulative-force machinery.

A profile stores the force *magnitude* F(t) on the first half period
``[0, T/2]`` (time relative to the gait start) as an ordered list of
piecewise descriptors.  The signed actuator force over a full period is
the antisymmetric extension ``f(t) = +F(t)`` on the first half and
``f(t) = -F(t - T/2)`` on the second.

Admissibility means ``f_bw <= F(t) <= f_u`` everywhere: the force must be
able to reverse a mass against backward friction but stays below the
actuator bound.

Everything here is exact arithmetic on piecewise-affine data; no
quadrature is involved (sampled descriptors are piecewise linear).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InfeasibleExcursionError, InfeasibleTargetsError, ParameterError
from .friction import DerivedCoefficients, FrictionParams, derive_coefficients
from .schedule import GaitSchedule

__all__ = [
    "ForceSegment",
    "ForceProfile",
    "CumulativeForce",
    "BoundaryTargets",
    "constant_profile",
    "two_level_profile",
    "concat_profiles",
    "cumulative",
    "boundary_targets",
    "h_constant",
    "g_functional",
    "excursion_constraint_rhs",
    "integral_range",
    "profile_with_integral",
    "synthesize_HI",
    "assemble_half_period",
    "excursion",
]

_KINDS = ("constant", "affine", "sampled")


@dataclass(frozen=True)
class ForceSegment:
    """One descriptor of F(t) on [t0, t1] (profile-relative time).

    kind "constant": params = (value,)
    kind "affine":   params = (value_at_t0, slope)
    kind "sampled":  params = (times, values), piecewise-linear through
                     the samples; times[0] == t0 and times[-1] == t1.
    """

    t0: float
    t1: float
    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown segment kind {self.kind!r}")
        if not self.t1 > self.t0:
            raise ParameterError("segment must have positive width")
        if self.kind == "sampled":
            times, values = self.params
            if len(times) != len(values) or len(times) < 2:
                raise ParameterError("sampled segment needs matching times/values")
            if not math.isclose(times[0], self.t0) or not math.isclose(times[-1], self.t1):
                raise ParameterError("sample times must span [t0, t1]")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ParameterError("sample times must be strictly increasing")

    def affine_pieces(self) -> list[tuple[float, float, float, float]]:
        """Decompose into (p, q, value_at_p, slope) pieces."""
        if self.kind == "constant":
            return [(self.t0, self.t1, float(self.params[0]), 0.0)]
        if self.kind == "affine":
            a, b = self.params
            return [(self.t0, self.t1, float(a), float(b))]
        times, values = self.params
        out = []
        for (ta, tb, fa, fb) in zip(times, times[1:], values, values[1:]):
            out.append((float(ta), float(tb), float(fa), (fb - fa) / (tb - ta)))
        return out


@dataclass(frozen=True)
class ForceProfile:
    """Force magnitude on [0, duration] with the antisymmetric sign rule."""

    segments: tuple[ForceSegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ParameterError("profile needs at least one segment")
        t = self.segments[0].t0
        if abs(t) > 0:
            raise ParameterError("profile must start at t=0")
        for seg in self.segments:
            if abs(seg.t0 - t) > 1e-12 * max(1.0, abs(t)):
                raise ParameterError("segments must be contiguous")
            t = seg.t1

    @property
    def duration(self) -> float:
        return self.segments[-1].t1

    # -- evaluation ---------------------------------------------------

    def affine_pieces(self, a: float = None, b: float = None):
        """(p, q, F(p), slope) pieces covering [a, b] (defaults: whole)."""
        a = 0.0 if a is None else a
        b = self.duration if b is None else b
        eps = 1e-12 * max(1.0, self.duration)
        if a < -eps or b > self.duration + eps or b < a - eps:
            raise ParameterError(f"window [{a}, {b}] outside profile domain")
        a = min(max(a, 0.0), self.duration)
        b = min(max(b, 0.0), self.duration)
        out = []
        for seg in self.segments:
            for (p, q, fp, m) in seg.affine_pieces():
                lo, hi = max(p, a), min(q, b)
                if hi - lo > 0:
                    out.append((lo, hi, fp + m * (lo - p), m))
        if not out and b >= a:  # zero-width window
            out = []
        return out

    def value(self, t: float) -> float:
        """F(t); at interior breakpoints returns the right-sided limit."""
        eps = 1e-12 * max(1.0, self.duration)
        if t < -eps or t > self.duration + eps:
            raise ParameterError(f"t={t} outside [0, {self.duration}]")
        t = min(max(t, 0.0), self.duration)
        for seg in self.segments:
            if t < seg.t1 or seg is self.segments[-1]:
                for (p, q, fp, m) in seg.affine_pieces():
                    if t < q or q == seg.t1:
                        if t >= p:
                            return fp + m * (t - p)
        raise AssertionError("unreachable")

    def signed_value(self, t: float, period: float) -> float:
        """Antisymmetric full-period force: +F on [0,T/2), -F(t-T/2) after."""
        half = period / 2.0
        t = t % period
        if t < half:
            return self.value(t)
        return -self.value(t - half)

    # -- exact integrals ----------------------------------------------

    def integral(self, a: float, b: float) -> float:
        """Integral of F over [a, b]."""
        total = 0.0
        for (p, q, fp, m) in self.affine_pieces(a, b):
            w = q - p
            total += fp * w + 0.5 * m * w * w
        return total

    def double_integral(self, a: float, b: float) -> float:
        """Nested integral of the running integral from ``a``:
        returns the integral over t in [a, b] of integral F over [a, t]."""
        total = 0.0
        run = 0.0
        for (p, q, fp, m) in self.affine_pieces(a, b):
            w = q - p
            total += run * w + 0.5 * fp * w * w + m * w * w * w / 6.0
            run += fp * w + 0.5 * m * w * w
        return total

    def minimum(self) -> float:
        return min(min(fp, fp + m * (q - p)) for (p, q, fp, m) in self.affine_pieces())

    def maximum(self) -> float:
        return max(max(fp, fp + m * (q - p)) for (p, q, fp, m) in self.affine_pieces())

    def check_admissible(self, params: FrictionParams, tol: float = 1e-9) -> None:
        lo, hi = self.minimum(), self.maximum()
        if lo < params.f_bw - tol or hi > params.f_u + tol:
            raise ParameterError(
                f"profile range [{lo}, {hi}] outside admissible "
                f"[{params.f_bw}, {params.f_u}]"
            )

    # -- transforms ----------------------------------------------------

    def shifted(self, dt: float) -> "ForceProfile":
        segs = []
        for s in self.segments:
            if s.kind == "sampled":
                times, values = s.params
                params = (tuple(t + dt for t in times), tuple(values))
            else:
                params = s.params
            segs.append(ForceSegment(s.t0 + dt, s.t1 + dt, s.kind, params))
        prof = object.__new__(ForceProfile)
        object.__setattr__(prof, "segments", tuple(segs))
        return prof

    def window(self, a: float, b: float) -> "ForceProfile":
        """Sub-profile on [a, b], re-anchored to start at 0."""
        segs = [
            ForceSegment(p - a, q - a, "affine", (fp, m))
            for (p, q, fp, m) in self.affine_pieces(a, b)
        ]
        return ForceProfile(tuple(segs))

    def as_arrays(self):
        """Piecewise-affine arrays (edges, value_at_edge, slope) for the
        compiled reference integrator."""
        import numpy as np

        pieces = self.affine_pieces()
        edges = np.array([p for (p, _, _, _) in pieces] + [pieces[-1][1]])
        f0 = np.array([fp for (_, _, fp, _) in pieces])
        slope = np.array([m for (_, _, _, m) in pieces])
        return edges, f0, slope

    # -- serialization ---------------------------------------------------

    def to_records(self) -> list[dict]:
        out = []
        for s in self.segments:
            if s.kind == "sampled":
                params = {"times": list(s.params[0]), "values": list(s.params[1])}
            elif s.kind == "affine":
                params = {"value": s.params[0], "slope": s.params[1]}
            else:
                params = {"value": s.params[0]}
            out.append({"t_start": s.t0, "t_end": s.t1, "kind": s.kind, "params": params})
        return out

    @staticmethod
    def from_records(records: Iterable[dict]) -> "ForceProfile":
        segs = []
        for r in records:
            kind = r["kind"]
            p = r["params"]
            if kind == "sampled":
                params = (tuple(p["times"]), tuple(p["values"]))
            elif kind == "affine":
                params = (p["value"], p["slope"])
            else:
                params = (p["value"],)
            segs.append(ForceSegment(r["t_start"], r["t_end"], kind, params))
        return ForceProfile(tuple(segs))


def constant_profile(value: float, width: float) -> ForceProfile:
    return ForceProfile((ForceSegment(0.0, width, "constant", (value,)),))


def two_level_profile(levels_and_widths: Sequence[tuple[float, float]]) -> ForceProfile:
    """Piecewise-constant profile from (level, width) pairs; zero-width
    entries are dropped."""
    segs = []
    t = 0.0
    for level, width in levels_and_widths:
        if width <= 0 or t + width <= t:  # drops widths below float resolution
            continue
        segs.append(ForceSegment(t, t + width, "constant", (level,)))
        t += width
    if not segs:
        raise ParameterError("profile would be empty")
    return ForceProfile(tuple(segs))


def concat_profiles(*profiles: ForceProfile) -> ForceProfile:
    segs = []
    t = 0.0
    for prof in profiles:
        segs.extend(prof.shifted(t).segments)
        t += prof.duration
    return ForceProfile(tuple(segs))


# ---------------------------------------------------------------------------
# Cumulative force over a phase window
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CumulativeForce:
    """Running integral of F from a phase start, on a window of the profile.

    ``phase`` is one of "H", "G", "I" (phases 1, 2, 3 of the half period).
    The running integral starts at zero, is nondecreasing, and its slope
    is F, hence within [f_bw, f_u] almost everywhere.
    """

    phase: str
    profile: ForceProfile
    a: float
    b: float

    @property
    def end(self) -> float:
        return self.profile.integral(self.a, self.b)

    def value(self, s: float) -> float:
        """Running integral at offset s from the phase start."""
        if s < 0 or s > self.b - self.a + 1e-12:
            raise ParameterError("offset outside the phase window")
        return self.profile.integral(self.a, min(self.a + s, self.b))

    def integral(self) -> float:
        """Integral of the running integral over the whole window."""
        return self.profile.double_integral(self.a, self.b)


def cumulative(profile: ForceProfile, phase_window: tuple[float, float], phase: str = "G") -> CumulativeForce:
    a, b = phase_window
    eps = 1e-12 * max(1.0, profile.duration)
    if a < -eps or b > profile.duration + eps or b < a:
        raise ParameterError(f"phase window [{a}, {b}] outside the profile domain")
    return CumulativeForce(phase, profile, a, b)


# ---------------------------------------------------------------------------
# Boundary targets and the excursion constraint
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryTargets:
    """Required end/internal values of the three cumulative-force functions.

    H_end pins the head's stop at the end of phase 1, G_end the tail's
    stop at the end of phase 2, I_end the half-period velocity mirror at
    the end of phase 3, and G_mid the value of G at the internal instant
    where the relative velocity vanishes (minimum extension).
    """

    H_end: float
    G_end: float
    G_mid: float
    I_end: float
    c1: float
    c2: float
    c3: float
    T1: float
    T2: float
    T3: float
    u1: float
    v1: float


def boundary_targets(
    schedule: GaitSchedule,
    u1: float,
    v1: float,
    params: FrictionParams,
) -> BoundaryTargets:
    """Compute the cumulative-force targets for initial state (u1, v1).

    Raises InfeasibleTargetsError when a target violates its envelope
    (integral of f_bw below, integral of f_u above) over its phase.
    """
    c = derive_coefficients(params)
    T1, T2, T3 = schedule.T1, schedule.T2, schedule.T3
    c1 = -(u1 + v1)
    c2 = 2.0 * u1 - params.f_fw * T2
    c3 = -(u1 + v1) + schedule.T * params.f_fw / (1.0 + c.rho)
    h_end = -params.f_bw * T1 + c1
    g_end = 2.0 * c.beta * T1 + c2
    g_mid = c.beta * T1 + u1
    i_end = -params.f_bw * T1 + c3

    violated = []
    for name, val, width in (("H_end", h_end, T1), ("G_end", g_end, T2), ("I_end", i_end, T3)):
        lo, hi = params.f_bw * width, params.f_u * width
        tol = 1e-9 * max(1.0, hi)
        if val < lo - tol or val > hi + tol:
            violated.append(f"{name}={val!r} outside [{lo!r}, {hi!r}]")
    if violated:
        raise InfeasibleTargetsError(
            "boundary targets violate the force envelope: " + "; ".join(violated),
            violated=violated,
        )
    return BoundaryTargets(
        H_end=h_end, G_end=g_end, G_mid=g_mid, I_end=i_end,
        c1=c1, c2=c2, c3=c3, T1=T1, T2=T2, T3=T3, u1=u1, v1=v1,
    )


def h_constant(
    schedule: GaitSchedule,
    tmin: float,
    u1: float,
    v1: float,
    params: FrictionParams,
) -> float:
    """Constant term of the half-excursion expansion.

    Derived once symbolically from the phase-wise velocity closed forms
    (v = v1 + H + alpha*t on phase 1, v = -(beta*T1+u1) + G on phase 2,
    v = v3 + I - alpha*(t-t3) on phase 3) and locked in by the
    excursion cross-check property test.
    """
    c = derive_coefficients(params)
    T1, T2, T3 = schedule.T1, schedule.T2, schedule.T3
    v3 = u1 + c.beta * T1 - params.f_fw * T2
    return (
        -v1 * T1
        - 0.5 * c.alpha * (T1 * T1 + T3 * T3)
        + (c.beta * T1 + u1) * (2.0 * tmin - T2)
        + v3 * T3
    )


def g_functional(g_profile: ForceProfile, tmin: float) -> float:
    """Integral of G over [0, tmin] minus integral of G over [tmin, T2],
    where G is the running integral of the phase-2 profile.

    This is the only profile-dependent part of the total work, and the
    quantity the bang-bang construction minimizes.
    """
    T2 = g_profile.duration
    g_mid = g_profile.integral(0.0, tmin)
    first = g_profile.double_integral(0.0, tmin)
    second = g_mid * (T2 - tmin) + g_profile.double_integral(tmin, T2)
    return first - second


def excursion_constraint_rhs(
    schedule: GaitSchedule,
    tmin: float,
    u1: float,
    v1: float,
    L: float,
    g_profile: ForceProfile,
    params: FrictionParams,
) -> float:
    """Required value of (integral of I) - (integral of H) so that the
    peak-to-peak extension over the period equals L, given the fully
    specified phase-2 piece."""
    h = h_constant(schedule, tmin, u1, v1, params)
    return 0.5 * L - h + g_functional(g_profile, tmin)


# ---------------------------------------------------------------------------
# Synthesis of the free phase-1 / phase-3 pieces
# ---------------------------------------------------------------------------


def integral_range(width: float, endpoint: float, params: FrictionParams) -> tuple[float, float]:
    """Achievable [min, max] of the integral of a running integral A with
    A(0)=0, A(width)=endpoint and slope in [f_bw, f_u].

    The extremes are the late-burst (f_bw then f_u) and early-burst
    (f_u then f_bw) two-level profiles.
    """
    lo_p = profile_with_integral(width, endpoint, None, params, extreme="min")
    hi_p = profile_with_integral(width, endpoint, None, params, extreme="max")
    return (
        lo_p.double_integral(0.0, width),
        hi_p.double_integral(0.0, width),
    )


def profile_with_integral(
    width: float,
    endpoint: float,
    target_integral: float | None,
    params: FrictionParams,
    extreme: str | None = None,
) -> ForceProfile:
    """Two-level piece on [0, width] whose running integral ends exactly at
    ``endpoint`` and (if given) whose running integral integrates to
    ``target_integral``.

    The high block of duration fixed by the endpoint slides from the front
    (maximal integral) to the back (minimal); the integral is affine in the
    block position, so any value in between is hit exactly.
    """
    if width <= 0:
        raise ParameterError("piece width must be positive")
    lo, hi = params.f_bw, params.f_u
    span = hi - lo
    tol = 1e-9 * max(1.0, hi * width)
    if endpoint < lo * width - tol or endpoint > hi * width + tol:
        raise InfeasibleTargetsError(
            f"endpoint {endpoint} outside envelope [{lo * width}, {hi * width}]"
        )
    if span == 0.0:
        high = 0.0
    else:
        high = min(max((endpoint - lo * width) / span, 0.0), width)
    # snap envelope corners (float-ulp slivers become clean constants)
    if high < 1e-12 * width:
        high = 0.0
    elif high > (1.0 - 1e-12) * width:
        high = width

    def block_at(start: float) -> ForceProfile:
        return two_level_profile([
            (lo, start),
            (hi, high),
            (lo, width - start - high),
        ])

    if extreme == "max":
        return block_at(0.0)
    if extreme == "min":
        return block_at(width - high)
    if extreme is not None:
        raise ParameterError(f"unknown extreme {extreme!r}")
    if target_integral is None:
        return block_at(0.0)

    # exact placement for the requested integral
    front = block_at(0.0)
    i_max = front.double_integral(0.0, width)
    if high <= 0.0 or high >= width or span == 0.0:
        if abs(target_integral - i_max) > 1e-8 * max(1.0, abs(i_max)):
            raise InfeasibleTargetsError(
                f"degenerate piece pins the integral to {i_max}, "
                f"requested {target_integral}"
            )
        return front
    i_min = block_at(width - high).double_integral(0.0, width)
    tol = 1e-9 * max(1.0, abs(i_max), abs(i_min))
    if target_integral < i_min - tol or target_integral > i_max + tol:
        raise InfeasibleTargetsError(
            f"integral {target_integral} outside achievable [{i_min}, {i_max}]"
        )
    # integral(start) = i_max - span*high*start  (affine in the block start)
    start = (i_max - min(max(target_integral, i_min), i_max)) / (span * high)
    start = min(max(start, 0.0), width - high)
    return block_at(start)


def synthesize_HI(
    targets: BoundaryTargets,
    required_rhs: float,
    params: FrictionParams,
    variant: float = 0.5,
) -> tuple[ForceProfile, ForceProfile, tuple[float, float]]:
    """One admissible (phase-1, phase-3) pair meeting the endpoint targets
    exactly with (integral I) - (integral H) == required_rhs.

    ``variant`` in [0, 1] picks a point in the one-parameter family of
    valid splits (all of them yield identical period work); 0 and 1 give
    maximally distinct representatives.  Returns the pieces and the
    achievable rhs interval.

    Raises InfeasibleExcursionError when required_rhs is out of range.
    """
    if not 0.0 <= variant <= 1.0:
        raise ParameterError("variant must lie in [0, 1]")
    h_lo, h_hi = integral_range(targets.T1, targets.H_end, params)
    i_lo, i_hi = integral_range(targets.T3, targets.I_end, params)
    rhs_lo, rhs_hi = i_lo - h_hi, i_hi - h_lo
    tol = 1e-9 * max(1.0, abs(rhs_lo), abs(rhs_hi))
    if required_rhs < rhs_lo - tol or required_rhs > rhs_hi + tol:
        raise InfeasibleExcursionError(
            f"required integral difference {required_rhs} outside achievable "
            f"[{rhs_lo}, {rhs_hi}]",
            required=required_rhs,
            achievable=(rhs_lo, rhs_hi),
        )
    required_rhs = min(max(required_rhs, rhs_lo), rhs_hi)
    # feasible H-integrals given the difference constraint
    jh_lo = max(h_lo, i_lo - required_rhs)
    jh_hi = min(h_hi, i_hi - required_rhs)
    jh = jh_lo + variant * (jh_hi - jh_lo)
    ji = jh + required_rhs
    h_piece = profile_with_integral(targets.T1, targets.H_end, jh, params)
    i_piece = profile_with_integral(targets.T3, targets.I_end, ji, params)
    return h_piece, i_piece, (rhs_lo, rhs_hi)


def assemble_half_period(
    h_piece: ForceProfile,
    g_piece: ForceProfile,
    i_piece: ForceProfile,
) -> ForceProfile:
    """Concatenate phase pieces into the half-period magnitude profile."""
    return concat_profiles(h_piece, g_piece, i_piece)


def excursion(traj) -> tuple[float, float, float]:
    """(E, t_min, t_max): peak-to-peak extension over one period and the
    times of the extremes (which sit where the relative velocity
    vanishes, half a period apart)."""
    return traj.extension_extrema()
