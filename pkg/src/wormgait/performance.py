"""Distance, velocity, power and the work decomposition.

Closed forms live here next to their quadrature-based "direct" variants;
tests hold the two against each other.

Power convention: the reported P is the period average of the signed
force times the half relative velocity, P = (1/T) * integral(f * v).
The actuator physically works on both masses and the relative speed is
2v, so the mechanical actuator power is exactly twice P.  All quantities
in this package use the single-v convention consistently; the factor is
noted here and in the README.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.integrate import quad

from .dynamics import Trajectory
from .errors import ParameterError
from .friction import DerivedCoefficients, FrictionParams, derive_coefficients
from .profiles import BoundaryTargets, ForceProfile, g_functional, h_constant
from .schedule import GaitSchedule

__all__ = [
    "PerformanceReport",
    "WorkDecomposition",
    "distance_and_velocity",
    "power_direct",
    "work_constants",
    "work_decomposition",
    "work_total_substituted",
    "performance_report",
]

#: absolute quadrature tolerance; tight enough that closed-form vs
#: quadrature comparisons at 1e-8 relative are meaningful
QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class PerformanceReport:
    """Flat record of the per-period performance figures."""

    X: float
    V: float
    P: float
    P_u: float
    W1: float
    W2: float
    W3: float
    W_total: float
    E: float
    t_min: float
    t_max: float

    def to_dict(self) -> dict:
        return {
            "X": self.X, "V": self.V, "P": self.P, "P_u": self.P_u,
            "W1": self.W1, "W2": self.W2, "W3": self.W3,
            "W_total": self.W_total, "E": self.E,
            "t_min": self.t_min, "t_max": self.t_max,
        }


@dataclass(frozen=True)
class WorkDecomposition:
    W1: float
    W2: float
    W3: float
    W_const: float
    W_total: float


def distance_and_velocity(
    T: float,
    T1: float,
    u1: float,
    coeffs: DerivedCoefficients,
    f_fw: float | None = None,
) -> tuple[float, float]:
    """Per-period drift X and average velocity V = X/T.

    X = T * (u1 + beta*T1 - T*f_fw*beta/(4*alpha)); the center-of-mass
    velocity is piecewise linear with slopes fixed by the schedule, so X
    never depends on the force profile."""
    f_fw = coeffs.alpha - coeffs.beta if f_fw is None else f_fw
    V = u1 + coeffs.beta * T1 - T * f_fw * coeffs.beta / (4.0 * coeffs.alpha)
    return T * V, V


def power_direct(traj: Trajectory, profile: ForceProfile) -> tuple[float, float]:
    """(P, P_u) by adaptive quadrature along the trajectory.

    Independent of the closed forms: integrates f(t)*v(t) and u(t)
    numerically with the mode boundaries supplied as breakpoints."""
    t0, t1 = traj.t_start, traj.t_end
    T = t1 - t0
    if T <= 0:
        raise ParameterError("trajectory must span a full period")
    breaks = {t1}
    for seg in traj.segments:
        breaks.add(seg.t_start)
        for (p, q, _, _) in seg.profile.affine_pieces():
            breaks.add(seg.t_start + p)
            breaks.add(seg.t_start + q)
    pts = sorted(b for b in breaks if t0 < b < t1)

    fv = lambda t: traj.signed_force_at(t) * traj.v_at(t)
    work, _ = quad(fv, t0, t1, points=pts, epsabs=QUAD_ABS_TOL, limit=200)
    drift, _ = quad(traj.u_at, t0, t1, points=pts, epsabs=QUAD_ABS_TOL, limit=200)
    if drift <= 0:
        raise ParameterError(f"nonpositive drift X={drift}; no unit-distance power")
    P = work / T
    return P, P / drift


def work_constants(targets: BoundaryTargets, params: FrictionParams) -> tuple[float, float, float]:
    """(W1const, W2const, W3const): the profile-independent work parts."""
    c = derive_coefficients(params)
    w1c = 0.5 * targets.H_end ** 2 + targets.H_end * (c.alpha * targets.T1 + targets.v1)
    w2c = 0.5 * targets.G_end ** 2 - targets.G_mid * targets.G_end
    w3c = 0.5 * targets.I_end ** 2 - (targets.I_end + targets.v1) * targets.I_end
    return w1c, w2c, w3c


def work_decomposition(
    profile: ForceProfile,
    targets: BoundaryTargets,
    params: FrictionParams,
) -> WorkDecomposition:
    """Per-phase work over the half period from the cumulative-force
    closed forms; ``profile`` is the half-period force magnitude.

    W1 = W1const - alpha * int(H),   W2 = W2const,
    W3 = W3const + alpha * int(I),   W_total = 2 (W1 + W2 + W3).
    """
    c = derive_coefficients(params)
    T1, T2, T3 = targets.T1, targets.T2, targets.T3
    w1c, w2c, w3c = work_constants(targets, params)
    int_h = profile.double_integral(0.0, T1)
    int_i = profile.double_integral(T1 + T2, T1 + T2 + T3)
    w1 = w1c - c.alpha * int_h
    w2 = w2c
    w3 = w3c + c.alpha * int_i
    return WorkDecomposition(
        W1=w1, W2=w2, W3=w3,
        W_const=w1c + w2c + w3c,
        W_total=2.0 * (w1 + w2 + w3),
    )


def work_total_substituted(
    schedule: GaitSchedule,
    targets: BoundaryTargets,
    tmin: float,
    L: float,
    g_piece: ForceProfile,
    params: FrictionParams,
) -> float:
    """Total period work with the excursion constraint E = L substituted:

    W = 2 W_const + alpha L - 2 alpha h + 2 alpha (G functional).

    Algebraically identical to the unsubstituted form whenever the
    phase-1/3 pieces actually realize the excursion L."""
    c = derive_coefficients(params)
    w1c, w2c, w3c = work_constants(targets, params)
    h = h_constant(schedule, tmin, targets.u1, targets.v1, params)
    j = g_functional(g_piece, tmin)
    return 2.0 * (w1c + w2c + w3c) + c.alpha * L - 2.0 * c.alpha * h + 2.0 * c.alpha * j


def performance_report(
    traj: Trajectory,
    profile: ForceProfile,
    targets: BoundaryTargets,
    params: FrictionParams,
) -> PerformanceReport:
    """Assemble the closed-form report for a simulated gait."""
    T = traj.t_end - traj.t_start
    c = derive_coefficients(params)
    X, V = distance_and_velocity(T, targets.T1, targets.u1, c, params.f_fw)
    wd = work_decomposition(profile, targets, params)
    E, t_min, t_max = traj.extension_extrema()
    P = wd.W_total / T
    return PerformanceReport(
        X=X, V=V, P=P, P_u=P / X,
        W1=wd.W1, W2=wd.W2, W3=wd.W3, W_total=wd.W_total,
        E=E, t_min=t_min, t_max=t_max,
    )
