import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from wormgait.dynamics import simulate_period
from wormgait.errors import (
    InfeasibleExcursionError,
    InfeasibleTargetsError,
    ParameterError,
)
from wormgait.friction import ConfigState, FrictionParams, derive_coefficients
from wormgait.optimizer import GaitProblem, evaluate_cell
from wormgait.profiles import (
    ForceProfile,
    ForceSegment,
    assemble_half_period,
    boundary_targets,
    constant_profile,
    cumulative,
    excursion,
    excursion_constraint_rhs,
    g_functional,
    h_constant,
    integral_range,
    profile_with_integral,
    synthesize_HI,
    two_level_profile,
)
from wormgait.schedule import build_schedule, constant_force_gait, feasible_region, select_initial_conditions

from conftest import random_draw

T1_REF = 0.330578


def _mixed_profile() -> ForceProfile:
    return ForceProfile((
        ForceSegment(0.0, 1.0, "constant", (2.0,)),
        ForceSegment(1.0, 2.5, "affine", (2.0, 0.8)),
        ForceSegment(2.5, 4.0, "sampled",
                     ((2.5, 3.0, 4.0), (3.2, 2.4, 3.0))),
    ))


def test_profile_integrals_match_quadrature():
    prof = _mixed_profile()
    for (a, b) in [(0.0, 4.0), (0.5, 3.1), (1.2, 2.9), (2.6, 3.7)]:
        ref, _ = quad(prof.value, a, b, points=[1.0, 2.5, 3.0], limit=200,
                      epsabs=1e-12)
        assert prof.integral(a, b) == pytest.approx(ref, abs=1e-10)
        ref2, _ = quad(lambda t: prof.integral(a, t), a, b,
                       points=[1.0, 2.5, 3.0], limit=200, epsabs=1e-12)
        assert prof.double_integral(a, b) == pytest.approx(ref2, abs=1e-9)


def test_profile_value_and_range():
    prof = _mixed_profile()
    assert prof.value(0.5) == 2.0
    assert prof.value(2.0) == pytest.approx(2.8)
    assert prof.value(2.75) == pytest.approx(2.8)  # sampled interpolation
    assert prof.minimum() == pytest.approx(2.0)
    assert prof.maximum() == pytest.approx(3.2)
    assert prof.duration == 4.0


def test_signed_value_antisymmetric():
    prof = _mixed_profile()
    T = 8.0
    for t in np.linspace(0.0, T / 2, 37, endpoint=False):
        assert prof.signed_value(t + T / 2, T) == pytest.approx(
            -prof.signed_value(t, T), rel=1e-12, abs=1e-12)


def test_profile_serialization_round_trip():
    prof = _mixed_profile()
    records = prof.to_records()
    back = ForceProfile.from_records(records)
    assert back.to_records() == records
    for t in np.linspace(0.0, 4.0, 23):
        assert back.value(t) == prof.value(t)
    # JSON round trip stays exact
    import json

    again = ForceProfile.from_records(json.loads(json.dumps(records)))
    assert again.to_records() == records


def test_admissibility_check():
    p = FrictionParams(f_fw=0.5, f_bw=2.1, f_u=3.0)
    with pytest.raises(ParameterError):
        _mixed_profile().check_admissible(p)  # dips to 2.0 < 2.1
    ok = FrictionParams(f_fw=0.5, f_bw=2.0, f_u=3.2)
    _mixed_profile().check_admissible(ok)


def test_cumulative_envelope_cases(ref_params):
    T1 = 0.4
    low = cumulative(constant_profile(ref_params.f_bw, T1), (0.0, T1), "H")
    assert low.end == pytest.approx(ref_params.f_bw * T1, rel=1e-14)
    high = cumulative(constant_profile(ref_params.f_u, T1), (0.0, T1), "H")
    assert high.end == pytest.approx(ref_params.f_u * T1, rel=1e-14)
    assert low.value(0.0) == 0.0
    assert low.value(T1 / 2) == pytest.approx(ref_params.f_bw * T1 / 2)


def test_cumulative_two_level_switch(ref_params):
    tau1, tmin = 0.8, 2.0
    prof = two_level_profile([(ref_params.f_bw, tau1),
                              (ref_params.f_u, tmin - tau1)])
    g = cumulative(prof, (0.0, tmin), "G")
    expected = ref_params.f_bw * tau1 + ref_params.f_u * (tmin - tau1)
    assert g.end == pytest.approx(expected, rel=1e-14)


def test_cumulative_window_checked():
    prof = constant_profile(2.0, 1.0)
    with pytest.raises(ParameterError):
        cumulative(prof, (0.0, 2.0), "H")


def test_boundary_targets_reference_numbers(ref_params):
    c = derive_coefficients(ref_params)
    sched = build_schedule(10.0, T1_REF, c)
    u1, v1 = 3.73760, -5.06
    t = boundary_targets(sched, u1, v1, ref_params)
    assert t.G_mid == pytest.approx(0.45 * T1_REF + 3.73760, abs=1e-8)
    assert t.G_mid == pytest.approx(3.88636, abs=1e-5)
    expected_g_end = 2 * 0.45 * T1_REF + 2 * 3.73760 - 0.1 * sched.T2
    assert t.G_end == pytest.approx(expected_g_end, abs=1e-8)
    assert t.G_end == pytest.approx(7.36365, abs=1e-4)


def test_boundary_targets_envelope_corner(ref_params):
    c = derive_coefficients(ref_params)
    sched = build_schedule(10.0, T1_REF, c)
    u1 = 3.7376
    v1 = -2.0 * ref_params.f_bw * T1_REF - u1  # upper v1 bound
    t = boundary_targets(sched, u1, v1, ref_params)
    assert t.H_end == pytest.approx(ref_params.f_bw * T1_REF, rel=1e-12)


def test_boundary_targets_envelope_violation(ref_params):
    c = derive_coefficients(ref_params)
    sched = build_schedule(10.0, T1_REF, c)
    with pytest.raises(InfeasibleTargetsError) as err:
        boundary_targets(sched, 3.7376, -30.0, ref_params)
    assert err.value.violated


def test_excursion_structure():
    params = FrictionParams(f_fw=1.0, f_bw=2.0, f_u=5.0)
    T = 20.0 / 9.0
    sched, u1, v1 = constant_force_gait(T, 5.0, params)
    traj = simulate_period(sched, constant_profile(5.0, T / 2),
                           ConfigState(0.0, 10.0, v1, u1), params)
    E, t_min, t_max = excursion(traj)
    assert E > 0
    # minimum inside phase 2, maximum inside phase 5, half a period apart
    t2, t3 = sched.T1, sched.T1 + sched.T2
    assert t2 < t_min < t3
    assert t2 + T / 2 < t_max < t3 + T / 2
    assert t_max - t_min == pytest.approx(T / 2, rel=1e-12)
    # against coarse sampled argmin/argmax
    arr = traj.sample(20001)
    assert arr[np.argmin(arr[:, 1]), 0] == pytest.approx(t_min, abs=T / 5000)
    assert arr[np.argmax(arr[:, 1]), 0] == pytest.approx(t_max, abs=T / 5000)


def test_excursion_identity_randomized():
    """The closed-form excursion expansion (with the derived constant
    term) reproduces the measured peak-to-peak extension: this pins h."""
    rng = np.random.default_rng(7)
    for _ in range(25):
        draw = random_draw(rng)
        traj = draw.simulate()
        E, _, _ = excursion(traj)
        cell = draw.cell
        h = h_constant(cell.schedule, cell.tmin, cell.u1, cell.v1, draw.params)
        j = g_functional(cell.g_piece, cell.tmin)
        int_h = draw.profile.double_integral(0.0, cell.targets.T1)
        t3_start = cell.targets.T1 + cell.targets.T2
        int_i = draw.profile.double_integral(t3_start, t3_start + cell.targets.T3)
        e_formula = 2.0 * (h + (int_i - int_h) - j)
        assert E == pytest.approx(e_formula, rel=1e-9, abs=1e-9)
        # and the constraint righthand side round-trips through E
        rhs = excursion_constraint_rhs(cell.schedule, cell.tmin, cell.u1,
                                       cell.v1, E, cell.g_piece, draw.params)
        assert rhs == pytest.approx(int_i - int_h, rel=1e-9, abs=1e-10)


def test_constraint_rhs_constant_gait_two_ways():
    """For the constant-force gait the required integral difference is
    F*(T3^2 - T1^2)/2; the closed form and the direct E rearrangement
    agree to 1e-10."""
    params = FrictionParams(f_fw=1.0, f_bw=2.0, f_u=5.0)
    T, F = 20.0 / 9.0, 5.0
    sched, u1, v1 = constant_force_gait(T, F, params)
    prof = constant_profile(F, T / 2)
    traj = simulate_period(sched, prof, ConfigState(0.0, 10.0, v1, u1), params)
    E, _, _ = excursion(traj)
    g_piece = prof.window(sched.T1, sched.T1 + sched.T2)
    rhs = excursion_constraint_rhs(sched, sched.tmin, u1, v1, E, g_piece, params)
    direct = 0.5 * F * (sched.T3 ** 2 - sched.T1 ** 2)
    assert rhs == pytest.approx(direct, rel=1e-10)


def test_synthesize_round_trip_excursion(ref_params):
    """Plugging the synthesized pieces back yields E = L (the defining
    property of the constraint)."""
    problem = GaitProblem(ref_params, 10.0, 1.0, 0.25, 0.4)
    cell = evaluate_cell(problem, 0.3, 0.45)
    lo, hi = cell.excursion_band
    L = lo + 0.37 * (hi - lo)
    problem = GaitProblem(ref_params, 10.0, L, 0.25, 0.4)
    cell = evaluate_cell(problem, 0.3, 0.45)
    h_piece, i_piece, band = synthesize_HI(cell.targets, cell.required_rhs,
                                           ref_params)
    prof = assemble_half_period(h_piece, cell.g_piece, i_piece)
    prof.check_admissible(ref_params)
    traj = simulate_period(cell.schedule, prof,
                           ConfigState(0.0, 50.0, cell.v1, cell.u1), ref_params)
    E, _, _ = excursion(traj)
    assert E == pytest.approx(L, abs=1e-8)


def test_synthesize_extremes_and_infeasible(ref_params):
    problem = GaitProblem(ref_params, 10.0, 1.0, 0.25, 0.4)
    cell = evaluate_cell(problem, 0.3, 0.45)
    h_lo, h_hi = integral_range(cell.targets.T1, cell.targets.H_end, ref_params)
    i_lo, i_hi = integral_range(cell.targets.T3, cell.targets.I_end, ref_params)
    rhs_hi = i_hi - h_lo
    h_piece, i_piece, band = synthesize_HI(cell.targets, rhs_hi, ref_params)
    assert band == (i_lo - h_hi, rhs_hi)
    # at the maximum the H piece front-loads f_bw and I front-loads f_u
    assert h_piece.value(0.0) == pytest.approx(ref_params.f_bw)
    assert i_piece.value(0.0) == pytest.approx(ref_params.f_u)
    assert h_piece.double_integral(0.0, cell.targets.T1) == pytest.approx(h_lo)
    assert i_piece.double_integral(0.0, cell.targets.T3) == pytest.approx(i_hi)
    with pytest.raises(InfeasibleExcursionError) as err:
        synthesize_HI(cell.targets, rhs_hi + 1.0, ref_params)
    assert err.value.achievable == pytest.approx(band)


def test_synthesize_degenerate_corner(ref_params):
    """H endpoint at the lower envelope corner forces the constant f_bw
    piece."""
    c = derive_coefficients(ref_params)
    sched = build_schedule(10.0, T1_REF, c)
    region = feasible_region(10.0, T1_REF, ref_params)
    u1, _ = select_initial_conditions(region, 0.2, 0.5)
    v1 = -2.0 * ref_params.f_bw * T1_REF - u1  # H_end = f_bw * T1 exactly
    targets = boundary_targets(sched, u1, v1, ref_params)
    piece = profile_with_integral(targets.T1, targets.H_end, None, ref_params)
    assert piece.minimum() == pytest.approx(ref_params.f_bw)
    assert piece.maximum() == pytest.approx(ref_params.f_bw)


def test_endpoint_targets_reproduce_events(ref_params):
    """H_end/G_end/I_end reproduce the velocity-stop events in simulation:
    residuals below 1e-9."""
    rng = np.random.default_rng(13)
    draw = random_draw(rng)
    traj = draw.simulate()
    sched = draw.cell.schedule
    t2 = sched.t1 + sched.T1
    t3 = t2 + sched.T2
    t4 = t3 + sched.T3
    assert abs(traj.state_at(t2).x2dot) < 1e-9
    assert abs(traj.state_at(t3).x1dot) < 1e-9
    assert traj.state_at(t4).v == pytest.approx(-draw.cell.v1, rel=1e-9)


@given(frac=st.floats(0.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_slid_block_integral_affine(frac):
    """The achievable running-integral integral is swept exactly by the
    sliding high block."""
    params = FrictionParams(f_fw=0.1, f_bw=1.0, f_u=5.0)
    width, endpoint = 0.7, 1.4
    lo, hi = integral_range(width, endpoint, params)
    target = lo + frac * (hi - lo)
    piece = profile_with_integral(width, endpoint, target, params)
    assert piece.integral(0.0, width) == pytest.approx(endpoint, rel=1e-12)
    assert piece.double_integral(0.0, width) == pytest.approx(target, rel=1e-10,
                                                              abs=1e-12)
    piece.check_admissible(params)
