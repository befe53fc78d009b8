import math

import numpy as np
import pytest

from wormgait.dynamics import (
    GAIT_SEQUENCE,
    find_event_time,
    propagate_mode,
    propagate_schedule,
    simulate_period,
)
from wormgait.errors import HorizonExceededError, ModeSequenceError, ParameterError
from wormgait.friction import ConfigState, FrictionParams
from wormgait.oracle import OracleOptions, integrate_ode
from wormgait.profiles import constant_profile
from wormgait.schedule import constant_force_gait, verify_periodicity

FIG_PARAMS = FrictionParams(f_fw=1.0, f_bw=2.0, f_u=5.0)


def test_propagate_zero_duration_identity():
    start = ConfigState(0.0, 10.0, -3.0, 1.0)
    end, _ = propagate_mode(1, start, constant_profile(5.0, 1.0), 0.0, FIG_PARAMS)
    assert end == start


def test_propagate_case2_worked_example():
    p = FrictionParams(f_fw=0.1, f_bw=1.0, f_u=5.0)
    start = ConfigState(0.0, 10.0, 0.0, 2.0)
    end, _ = propagate_mode(2, start, constant_profile(5.0, 1.0), 1.0, p)
    assert end.v == pytest.approx(5.0, abs=1e-12)
    assert end.u == pytest.approx(1.9, abs=1e-12)


def test_propagate_case1_vs_reference_integrator():
    # v = -3 + 5*(2/7) + 1.5*(2/7) = -8/7 with alpha = 1.5
    start = ConfigState(0.0, 10.0, -3.0, 1.0)
    dt = 2.0 / 7.0
    end, _ = propagate_mode(1, start, constant_profile(5.0, dt), dt, FIG_PARAMS)
    assert end.v == pytest.approx(-8.0 / 7.0, abs=1e-12)
    # independent check: step the Newtonian equations directly
    res = integrate_ode(constant_profile(5.0, 1.0), 2.0, start, dt, FIG_PARAMS,
                        OracleOptions(step=dt / 2000))
    rows = res.config_rows()
    assert rows[-1, 2] == pytest.approx(end.v, abs=1e-9)
    assert rows[-1, 3] == pytest.approx(end.u, abs=1e-9)
    assert rows[-1, 1] == pytest.approx(end.d, abs=1e-9)


def test_propagate_rejects_bad_inputs():
    start = ConfigState(0.0, 10.0, -3.0, 1.0)
    with pytest.raises(ParameterError):
        propagate_mode(1, start, constant_profile(5.0, 1.0), -0.5, FIG_PARAMS)
    with pytest.raises(ParameterError):
        propagate_mode(1, start, constant_profile(1.0, 1.0), 0.5, FIG_PARAMS)
    with pytest.raises(ParameterError):
        propagate_mode(7, start, constant_profile(5.0, 1.0), 0.5, FIG_PARAMS)


def test_event_time_case1_worked_example():
    # head velocity -2 rising at F + f_bw = 7 crosses zero at 2/7
    start = ConfigState(0.0, 10.0, -3.0, 1.0)
    dt = find_event_time(1, start, constant_profile(5.0, 1.0), FIG_PARAMS)
    assert dt == pytest.approx(2.0 / 7.0, rel=1e-12)
    # independent: bisection on the stepped dynamics
    res = integrate_ode(constant_profile(5.0, 1.0), 2.0, start, 0.5, FIG_PARAMS)
    assert res.event_times[0] == pytest.approx(2.0 / 7.0, abs=1e-9)
    assert res.event_mass[0] == 2


def test_event_time_horizon_exceeded():
    # both parts forward-moving: no crossing within a tiny horizon
    start = ConfigState(0.0, 10.0, 1.0, 2.0)
    with pytest.raises(HorizonExceededError):
        find_event_time(2, start, constant_profile(5.0, 1.0), FIG_PARAMS,
                        horizon=1e-3)


def test_event_time_case4_mirror():
    start = ConfigState(0.0, 10.0, -3.0, 1.0)
    dt1 = find_event_time(1, start, constant_profile(5.0, 1.0), FIG_PARAMS)
    mirrored = ConfigState(0.0, 10.0, 3.0, 1.0)
    dt4 = find_event_time(4, mirrored, constant_profile(5.0, 1.0), FIG_PARAMS)
    assert dt4 == pytest.approx(dt1, rel=1e-12)


def test_event_time_affine_profile():
    """Quadratic-root path: affine force, answer checked by bisection on
    the closed-form component."""
    from wormgait.profiles import ForceProfile, ForceSegment

    prof = ForceProfile((ForceSegment(0.0, 1.0, "affine", (3.0, 2.0)),))
    start = ConfigState(0.0, 10.0, -3.0, 1.0)
    dt = find_event_time(1, start, prof, FIG_PARAMS)
    # x2dot(t) = -2 + int F + f_bw t = -2 + 3t + t^2 + 2t
    roots = np.roots([1.0, 5.0, -2.0])
    expected = min(r for r in roots if r > 0)
    assert dt == pytest.approx(expected, rel=1e-10)


def test_simulate_period_closed_orbit():
    T = 20.0 / 9.0
    sched, u1, v1 = constant_force_gait(T, 5.0, FIG_PARAMS)
    init = ConfigState(0.0, 10.0, v1, u1)
    traj = simulate_period(sched, constant_profile(5.0, T / 2), init, FIG_PARAMS)
    res = verify_periodicity(traj)
    assert max(abs(r) for r in res) < 1e-9
    # center-of-mass velocity stays nonnegative
    assert traj.min_u() >= -1e-12
    # exactly six mode intervals in gait order with mirrored durations
    cases = [c for c, _, _ in traj.mode_log]
    assert tuple(cases) == GAIT_SEQUENCE
    durs = [b - a for _, a, b in traj.mode_log]
    assert durs[0] == pytest.approx(durs[3], rel=1e-12)
    assert durs[1] == pytest.approx(durs[4], rel=1e-12)
    assert durs[2] == pytest.approx(durs[5], rel=1e-12)
    # at interior event boundaries exactly one velocity component vanishes
    for k, (case_id, t_a, t_b) in enumerate(traj.mode_log[:-1]):
        if case_id in (3, 6):
            continue  # force-switch boundaries, no velocity zero
        s = traj.state_at(t_b)
        z1, z2 = abs(s.x1dot), abs(s.x2dot)
        assert min(z1, z2) < 1e-9
        assert max(z1, z2) > 1e-6


def test_simulate_period_rejects_bad_start():
    T = 20.0 / 9.0
    sched, u1, v1 = constant_force_gait(T, 5.0, FIG_PARAMS)
    bad = ConfigState(0.0, 10.0, +3.0, 1.0)  # head moving forward already
    with pytest.raises(ModeSequenceError):
        simulate_period(sched, constant_profile(5.0, T / 2), bad, FIG_PARAMS)


def test_simulate_period_detects_event_mismatch():
    """An initial condition off the gait manifold moves the velocity
    crossings away from the schedule boundaries."""
    T = 20.0 / 9.0
    sched, u1, v1 = constant_force_gait(T, 5.0, FIG_PARAMS)
    off = ConfigState(0.0, 10.0, v1 * 1.05, u1)
    with pytest.raises(ModeSequenceError) as err:
        simulate_period(sched, constant_profile(5.0, T / 2), off, FIG_PARAMS)
    assert err.value.t is not None


def test_closed_form_vs_reference_on_draws(draws100):
    for draw in draws100[:3]:
        traj = draw.simulate()
        res = integrate_ode(draw.profile, draw.problem.T, draw.init,
                            draw.problem.T, draw.params)
        rows = res.config_rows()
        idx = np.linspace(0, len(rows) - 1, 100).astype(int)
        for i in idx:
            t, d, v, u = rows[i]
            s = traj.state_at(min(max(t, traj.t_start), traj.t_end))
            assert abs(d - s.d) < 1e-6
            assert abs(v - s.v) < 1e-6
            assert abs(u - s.u) < 1e-6


def test_energy_bookkeeping(draws100):
    """Kinetic-energy change equals actuator work minus friction loss,
    with the three quantities computed independently."""
    for draw in draws100[:10]:
        traj = draw.simulate()
        w = traj.physical_actuator_work()
        q = traj.friction_dissipation()
        dke = traj.kinetic_energy_change()
        assert dke == pytest.approx(w - q, rel=1e-8, abs=1e-8 * max(1.0, abs(w)))
        assert q >= 0.0
        for seg in traj.segments:
            assert seg.friction_dissipation() >= 0.0


def test_sampling_and_accessors():
    T = 20.0 / 9.0
    sched, u1, v1 = constant_force_gait(T, 5.0, FIG_PARAMS)
    init = ConfigState(0.0, 10.0, v1, u1)
    traj = simulate_period(sched, constant_profile(5.0, T / 2), init, FIG_PARAMS)
    arr = traj.sample(500)
    assert arr.shape == (500, 5)
    assert np.all(np.diff(arr[:, 0]) > 0)
    assert arr[0, 1] == pytest.approx(10.0)
    # signed force flips at the half period
    before = traj.signed_force_at(T / 2 - 1e-9)
    after = traj.signed_force_at(T / 2 + 1e-9)
    assert before == pytest.approx(5.0)
    assert after == pytest.approx(-5.0)
