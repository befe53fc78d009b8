"""Phase scheduling and the feasibility region for gait initial conditions.

A gait visits modes 1..6 once per period: the actuator is positive for the
first three phases (durations T1, T2, T3) and negative, with mirrored
magnitude, for the last three (T4=T1, T5=T2, T6=T3).  Requiring the
center-of-mass velocity to close over the period forces

    T2 = (T/2) * (1 - rho) / (1 + rho),
    T3 = (T/2) * (2 rho / (1 + rho)) - T1,

because u gains beta on phases 1, 3, 4, 6 and loses f_fw on phases 2, 5,
so closure means beta*(T1+T3) = f_fw*T2.  The reciprocal variant
(1+rho)/(1-rho) exceeds T/2 and breaks closure; it is kept behind the
``duty_relation="inverted"`` switch purely so the validation command can
demonstrate the breakage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InfeasibleRegionError, ParameterError
from .friction import (
    ConfigState,
    DerivedCoefficients,
    FrictionParams,
    derive_coefficients,
)

__all__ = [
    "GaitSchedule",
    "FeasibleRegion",
    "build_schedule",
    "t1_interval",
    "feasible_region",
    "select_initial_conditions",
    "verify_periodicity",
    "constant_force_gait",
]

#: Relative margin keeping T1 strictly inside its open interval.
T1_EPS = 1e-9


@dataclass(frozen=True)
class GaitSchedule:
    """Period, first-half phase durations and derived start times.

    ``tmin`` (offset into phase 2 where the relative velocity vanishes)
    is profile-dependent and stays None until a phase-2 profile fixes it.
    """

    T: float
    T1: float
    T2: float
    T3: float
    t1: float = 0.0
    tmin: float | None = None

    def __post_init__(self):
        if self.T <= 0:
            raise ParameterError("period must be positive")
        for name in ("T1", "T2", "T3"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative")
        if not math.isclose(self.T1 + self.T2 + self.T3, self.T / 2.0,
                            rel_tol=1e-9, abs_tol=1e-12 * self.T):
            raise ParameterError("phase durations must sum to half the period")
        if self.tmin is not None and not -1e-12 <= self.tmin <= self.T2 + 1e-12:
            raise ParameterError("tmin must lie in [0, T2]")

    @property
    def durations(self) -> tuple[float, ...]:
        return (self.T1, self.T2, self.T3, self.T1, self.T2, self.T3)

    @property
    def t_starts(self) -> tuple[float, ...]:
        out = [self.t1]
        for d in self.durations[:-1]:
            out.append(out[-1] + d)
        return tuple(out)

    def with_tmin(self, tmin: float) -> "GaitSchedule":
        return replace(self, tmin=tmin)


def t1_interval(T: float, coeffs: DerivedCoefficients) -> tuple[float, float]:
    """Usable (epsilon-interior) interval for the phase-1 duration."""
    hi = T * coeffs.rho / (1.0 + coeffs.rho)
    return (T1_EPS * T, (1.0 - T1_EPS) * hi)


def build_schedule(
    T: float,
    T1: float,
    coeffs: DerivedCoefficients,
    t1: float = 0.0,
    duty_relation: str = "consistent",
) -> GaitSchedule:
    """Phase durations for a closing gait with period T and given T1."""
    if T <= 0:
        raise ParameterError("period must be positive")
    rho = coeffs.rho
    if not 0.0 < rho < 1.0:
        raise ParameterError(
            f"duty relations need rho in (0, 1); rho={rho} degenerates the "
            "recovery phase"
        )
    lo, hi = t1_interval(T, coeffs)
    if not lo <= T1 <= hi:
        raise ParameterError(
            f"T1={T1} outside the open interval (0, {T * rho / (1 + rho)})"
        )
    if duty_relation == "consistent":
        T2 = 0.5 * T * (1.0 - rho) / (1.0 + rho)
    elif duty_relation == "inverted":
        T2 = 0.5 * T * (1.0 + rho) / (1.0 - rho)
    else:
        raise ParameterError(f"unknown duty_relation {duty_relation!r}")
    T3 = 0.5 * T - T1 - T2
    if T3 < 0:
        raise ParameterError(
            f"duty relation {duty_relation!r} leaves no room for phase 3 "
            f"(T2={T2} with half period {T / 2})"
        )
    return GaitSchedule(T=T, T1=T1, T2=T2, T3=T3, t1=t1)


@dataclass(frozen=True)
class FeasibleRegion:
    """Bounds on (u1, v1, tmin) admitting a gait for the given (T, T1).

    The u1 bounds come from requiring the phase-2 velocity-zero offset to
    have a nonempty window; the v1 bounds from the phase-1 and phase-3
    force envelopes, via K = min(1 + eta, (eta - 1) * T3/T1 - 1).  The v1
    and tmin bounds depend on the chosen u1 and are populated by
    ``resolve``; ``gamma`` is (beta*T1 + u1)/f_u for that u1.
    """

    T: float
    T1: float
    t1_lo: float
    t1_hi: float
    u1_lo: float
    u1_hi: float
    K: float
    u1: float | None = None
    v1_lo: float | None = None
    v1_hi: float | None = None
    tmin_lo: float | None = None
    tmin_hi: float | None = None
    gamma: float | None = None

    _params: FrictionParams | None = None
    _schedule: GaitSchedule | None = None

    @property
    def empty(self) -> bool:
        tol = 1e-12 * max(1.0, abs(self.u1_hi))
        if self.u1_lo > self.u1_hi + tol:
            return True
        if self.K < 2.0 - 1e-12:
            return True
        if self.tmin_lo is not None and self.tmin_lo > self.tmin_hi + 1e-12 * self.T:
            return True
        return False

    def v1_bounds(self, u1: float) -> tuple[float, float]:
        f_bw = self._params.f_bw
        return (-self.K * f_bw * self.T1 - u1, -2.0 * f_bw * self.T1 - u1)

    def tmin_window(self, u1: float) -> tuple[float, float]:
        c = derive_coefficients(self._params)
        T2 = self._schedule.T2
        gamma = (c.beta * self.T1 + u1) / self._params.f_u
        lo = max(gamma, T2 * (1.0 + c.rho) - gamma * c.eta)
        hi = min(gamma * c.eta, T2 * (1.0 + c.rho / c.eta) - gamma)
        return lo, hi

    def resolve(self, u1: float) -> "FeasibleRegion":
        v_lo, v_hi = self.v1_bounds(u1)
        t_lo, t_hi = self.tmin_window(u1)
        gamma = (derive_coefficients(self._params).beta * self.T1 + u1) / self._params.f_u
        return replace(
            self, u1=u1, v1_lo=v_lo, v1_hi=v_hi,
            tmin_lo=t_lo, tmin_hi=t_hi, gamma=gamma,
        )


def feasible_region(
    T: float,
    T1: float,
    params: FrictionParams,
    coeffs: DerivedCoefficients | None = None,
) -> FeasibleRegion:
    """Bounds admitting a gait at (T, T1); emptiness is a normal outcome."""
    c = coeffs or derive_coefficients(params)
    schedule = build_schedule(T, T1, c)
    T3 = schedule.T3
    lo, hi = t1_interval(T, c)
    u1_lo = c.beta * (0.5 * T - T1)
    u1_hi = c.beta * (T * (c.eta + c.rho) / (2.0 * (1.0 + c.rho)) - T1)
    if T1 > 0:
        K = min(1.0 + c.eta, (c.eta - 1.0) * T3 / T1 - 1.0)
    else:
        K = 1.0 + c.eta
    return FeasibleRegion(
        T=T, T1=T1, t1_lo=lo, t1_hi=hi,
        u1_lo=u1_lo, u1_hi=u1_hi, K=K,
        _params=params, _schedule=schedule,
    )


def select_initial_conditions(
    region: FeasibleRegion,
    u_ratio: float,
    v_ratio: float,
) -> tuple[float, float]:
    """Pick (u1, v1) at relative positions inside the region.

    u1 interpolates its bounds at ``u_ratio``; v1 interpolates the bounds
    evaluated at that u1 at ``v_ratio`` (0 = lower bound in both cases).
    """
    if region.empty:
        raise InfeasibleRegionError(
            f"no admissible initial conditions at T1={region.T1} "
            f"(u1 in [{region.u1_lo}, {region.u1_hi}], K={region.K})"
        )
    if not (0.0 <= u_ratio <= 1.0 and 0.0 <= v_ratio <= 1.0):
        raise ParameterError("ratios must lie in [0, 1]")
    u1 = region.u1_lo + u_ratio * (region.u1_hi - region.u1_lo)
    v_lo, v_hi = region.v1_bounds(u1)
    v1 = v_lo + v_ratio * (v_hi - v_lo)
    return u1, v1


def verify_periodicity(traj) -> tuple[float, float, float]:
    """Closure residuals (delta d, delta v, delta u) over one period."""
    first: ConfigState = traj.initial_state
    last: ConfigState = traj.final_state
    return (last.d - first.d, last.v - first.v, last.u - first.u)


def constant_force_gait(
    T: float,
    F: float,
    params: FrictionParams,
) -> tuple[GaitSchedule, float, float]:
    """The unique closing gait driven by a constant force magnitude.

    A constant F pins every cumulative-force target, so (T1, u1, v1) are
    all determined: matching the phase-3 target forces
    T1 = T * rho * (F - f_bw) / (2 F (1 + rho)).  Returns the schedule
    (with tmin set) and the initial (u1, v1).
    """
    c = derive_coefficients(params)
    if not params.f_bw < F <= params.f_u + 1e-12:
        raise ParameterError(
            f"constant gait needs f_bw < F <= f_u, got F={F}"
        )
    T1 = T * c.rho * (F - params.f_bw) / (2.0 * F * (1.0 + c.rho))
    schedule = build_schedule(T, T1, c)
    u1 = 0.5 * (F + params.f_fw) * schedule.T2 - c.beta * T1
    v1 = -(F + params.f_bw) * T1 - u1
    tmin = (c.beta * T1 + u1) / F
    return schedule.with_tmin(tmin), u1, v1
