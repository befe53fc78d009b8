"""Physical parameters, derived coefficients, states and the mode table.

The crawler is two unit masses joined by a linear actuator.  Dry friction
acts on each mass with a magnitude that depends on the sign of its
velocity: ``f_fw`` resists forward motion, ``f_bw`` (>= f_fw) resists
backward motion, and ``f_0`` is the static level used only by the
stick-slip reference integrator.  The actuator magnitude is bounded by
``f_u``.

All closed forms downstream are written in the configuration basis

    d = x2 - x1,   v = (x2dot - x1dot) / 2,   u = (x1dot + x2dot) / 2

with the friction combinations

    alpha = (f_fw + f_bw) / 2,   beta = (f_bw - f_fw) / 2

which are the unique choices that make the per-mode rates
``dv/dt = +-F +- alpha`` and ``du/dt in {beta, -f_fw}`` agree with the
Newtonian dynamics (cross-checked against the reference integrator in the
test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import EventBoundaryError, ParameterError

__all__ = [
    "FrictionParams",
    "DerivedCoefficients",
    "WormState",
    "ConfigState",
    "Mode",
    "MODE_TABLE",
    "derive_coefficients",
    "classify_mode",
    "to_config",
    "from_config",
]


@dataclass(frozen=True)
class FrictionParams:
    """Friction levels and the actuator bound, all strictly positive.

    Invariants: ``f_bw >= f_fw > 0``, ``f_u >= f_bw`` and
    ``f_fw <= f_0 <= f_bw``.  ``f_0`` defaults to ``f_bw``; it only
    matters to the stick-slip reference integrator since admissible gaits
    never dwell at zero velocity.
    """

    f_fw: float
    f_bw: float
    f_u: float
    f_0: float | None = None

    def __post_init__(self):
        if self.f_0 is None:
            object.__setattr__(self, "f_0", self.f_bw)
        if not (self.f_fw > 0 and self.f_bw > 0 and self.f_u > 0 and self.f_0 > 0):
            raise ParameterError("friction levels and force bound must be positive")
        if self.f_fw > self.f_bw:
            raise ParameterError(
                f"forward friction must not exceed backward friction "
                f"(f_fw={self.f_fw}, f_bw={self.f_bw})"
            )
        if self.f_u < self.f_bw:
            raise ParameterError(
                f"actuator bound below backward friction (f_u={self.f_u}, "
                f"f_bw={self.f_bw}): no admissible force exists"
            )
        if not (self.f_fw <= self.f_0 <= self.f_bw):
            raise ParameterError(
                f"static level f_0={self.f_0} outside [f_fw, f_bw]"
            )

    def with_static(self, f_0: float) -> "FrictionParams":
        return replace(self, f_0=f_0)


@dataclass(frozen=True)
class DerivedCoefficients:
    """Friction combinations used throughout the closed forms.

    alpha = (f_fw + f_bw)/2  mean kinetic friction level
    beta  = (f_bw - f_fw)/2  friction asymmetry (drives the net drift)
    rho   = f_fw / f_bw      in (0, 1]
    eta   = f_u / f_bw       >= 1 control authority over friction
    """

    alpha: float
    beta: float
    rho: float
    eta: float


def derive_coefficients(p: FrictionParams) -> DerivedCoefficients:
    """Compute (alpha, beta, rho, eta) from the friction parameters."""
    return DerivedCoefficients(
        alpha=0.5 * (p.f_fw + p.f_bw),
        beta=0.5 * (p.f_bw - p.f_fw),
        rho=p.f_fw / p.f_bw,
        eta=p.f_u / p.f_bw,
    )


@dataclass(frozen=True)
class WormState:
    """Cartesian state: tail at x1, head at x2, head ahead of tail."""

    t: float
    x1: float
    x2: float
    x1dot: float
    x2dot: float

    def __post_init__(self):
        if not self.x2 - self.x1 > 0:
            raise ParameterError(
                f"head must stay ahead of tail (x1={self.x1}, x2={self.x2})"
            )


@dataclass(frozen=True)
class ConfigState:
    """Configuration-space point: extension d, half relative velocity v,
    center-of-mass velocity u."""

    t: float
    d: float
    v: float
    u: float

    @property
    def x1dot(self) -> float:
        return self.u - self.v

    @property
    def x2dot(self) -> float:
        return self.u + self.v


def to_config(s: WormState) -> ConfigState:
    """Change of basis (x1, x2, x1dot, x2dot) -> (d, v, u)."""
    return ConfigState(
        t=s.t,
        d=s.x2 - s.x1,
        v=0.5 * (s.x2dot - s.x1dot),
        u=0.5 * (s.x1dot + s.x2dot),
    )


def from_config(c: ConfigState, x1_anchor: float) -> WormState:
    """Inverse basis change; the absolute position enters via ``x1_anchor``."""
    return WormState(
        t=c.t,
        x1=x1_anchor,
        x2=x1_anchor + c.d,
        x1dot=c.u - c.v,
        x2dot=c.u + c.v,
    )


@dataclass(frozen=True)
class Mode:
    """One column of the eight-way sign table for (force, x1dot, x2dot).

    Cases 7 and 8 have both masses moving backward, which would make the
    center-of-mass velocity negative; they cannot occur on a gait.
    """

    case_id: int
    force_sign: int
    x1dot_sign: int
    x2dot_sign: int
    valid_for_gait: bool


MODE_TABLE: tuple[Mode, ...] = (
    Mode(1, +1, +1, -1, True),
    Mode(2, +1, +1, +1, True),
    Mode(3, +1, -1, +1, True),
    Mode(4, -1, -1, +1, True),
    Mode(5, -1, +1, +1, True),
    Mode(6, -1, +1, -1, True),
    Mode(7, +1, -1, -1, False),
    Mode(8, -1, -1, -1, False),
)

_MODE_BY_SIGNS = {
    (m.force_sign, m.x1dot_sign, m.x2dot_sign): m for m in MODE_TABLE
}


def _sign(x: float, name: str) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    raise EventBoundaryError(
        f"{name} is exactly zero: this is an event boundary, not a mode"
    )


def classify_mode(force_sign: float, x1dot_sign: float, x2dot_sign: float) -> Mode:
    """Map a sign triple to its unique mode; zero signs are rejected."""
    key = (
        _sign(force_sign, "force"),
        _sign(x1dot_sign, "x1dot"),
        _sign(x2dot_sign, "x2dot"),
    )
    return _MODE_BY_SIGNS[key]


#: Signed coefficients of the per-mode rates, keyed by case id:
#: dv/dt = force_coeff * F + alpha_coeff * alpha, du/dt as given.
MODE_RATES: dict[int, tuple[int, int, str]] = {
    1: (+1, +1, "beta"),
    2: (+1, 0, "-f_fw"),
    3: (+1, -1, "beta"),
    4: (-1, -1, "beta"),
    5: (-1, 0, "-f_fw"),
    6: (-1, +1, "beta"),
}


def mode_rates(case_id: int, F: float, p: FrictionParams) -> tuple[float, float]:
    """(dv/dt offset-free only for constant F, du/dt) for one mode.

    For the v rate the returned value is the coefficient pair applied as
    ``dv/dt = s_F * F + s_a * alpha``; callers propagating non-constant F
    integrate F themselves and only use the alpha part here.
    """
    if case_id not in MODE_RATES:
        raise ParameterError(f"case {case_id} has no gait dynamics")
    s_f, s_a, u_kind = MODE_RATES[case_id]
    coeffs = derive_coefficients(p)
    vdot = s_f * F + s_a * coeffs.alpha
    udot = coeffs.beta if u_kind == "beta" else -p.f_fw
    return vdot, udot
