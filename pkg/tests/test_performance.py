import numpy as np
import pytest
from scipy.integrate import quad

from wormgait.dynamics import simulate_period
from wormgait.friction import (
    ConfigState,
    DerivedCoefficients,
    FrictionParams,
    derive_coefficients,
)
from wormgait.performance import (
    distance_and_velocity,
    performance_report,
    power_direct,
    work_decomposition,
    work_total_substituted,
)
from wormgait.profiles import assemble_half_period, excursion, synthesize_HI
from wormgait.schedule import constant_force_gait
from wormgait.profiles import constant_profile

from conftest import random_draw, wiggle_profile

T1_REF = 0.330577273


def test_velocity_closed_form_reference(ref_params):
    c = derive_coefficients(ref_params)
    X, V = distance_and_velocity(10.0, T1_REF, 3.73760386, c, ref_params.f_fw)
    expected = 3.73760386 + 0.45 * T1_REF - 10.0 * 0.1 * 0.45 / (4 * 0.55)
    assert V == pytest.approx(expected, rel=1e-12)
    assert V == pytest.approx(3.68181, abs=1e-5)
    assert X == pytest.approx(10.0 * V, rel=1e-14)


def test_velocity_symmetric_friction_limit():
    # beta = 0 leaves V = u1: the drift comes entirely from the asymmetry
    c = DerivedCoefficients(alpha=1.0, beta=0.0, rho=1.0, eta=2.0)
    _, V = distance_and_velocity(10.0, 0.3, 2.5, c, f_fw=1.0)
    assert V == 2.5


def test_velocity_profile_independent(draws100):
    """Two different admissible profiles with the same (T, T1, u1) give
    the same drift, in closed form and by direct integration."""
    rng = np.random.default_rng(5)
    for draw in draws100[:6]:
        traj_a = draw.simulate()
        alt = wiggle_profile(draw.profile, draw.params, rng)
        traj_b = simulate_period(draw.cell.schedule, alt, draw.init, draw.params)
        xa, xb = traj_a.drift(), traj_b.drift()
        assert xa == pytest.approx(xb, rel=1e-9, abs=1e-9)
        c = derive_coefficients(draw.params)
        X, _ = distance_and_velocity(draw.problem.T, draw.cell.T1,
                                     draw.cell.u1, c, draw.params.f_fw)
        assert xa == pytest.approx(X, rel=1e-9)


def test_power_positive_constant_gait():
    params = FrictionParams(f_fw=1.0, f_bw=2.0, f_u=5.0)
    T = 20.0 / 9.0
    sched, u1, v1 = constant_force_gait(T, 5.0, params)
    traj = simulate_period(sched, constant_profile(5.0, T / 2),
                           ConfigState(0.0, 10.0, v1, u1), params)
    P, P_u = power_direct(traj, constant_profile(5.0, T / 2))
    assert P > 0
    assert P_u == pytest.approx(P / traj.drift(), rel=1e-8)


def test_power_equals_work_over_period(draws100):
    for draw in draws100[:5]:
        traj = draw.simulate()
        P, _ = power_direct(traj, draw.profile)
        wd = work_decomposition(draw.profile, draw.cell.targets, draw.params)
        T = draw.problem.T
        assert P == pytest.approx(wd.W_total / T, rel=1e-8)
        assert wd.W_total == pytest.approx(2 * (wd.W1 + wd.W2 + wd.W3), rel=1e-12)


def test_work_phases_vs_quadrature(draws100):
    """Per-phase closed-form work equals the quadrature of F*v over that
    phase to 1e-8 relative, including wiggled (affine) profiles."""
    rng = np.random.default_rng(11)
    for draw in draws100[:5]:
        profile = wiggle_profile(draw.profile, draw.params, rng)
        traj = simulate_period(draw.cell.schedule, profile, draw.init,
                               draw.params)
        wd = work_decomposition(profile, draw.cell.targets, draw.params)
        sched = draw.cell.schedule
        bounds = [
            (0.0, sched.T1, wd.W1),
            (sched.T1, sched.T1 + sched.T2, wd.W2),
            (sched.T1 + sched.T2, 0.5 * sched.T, wd.W3),
        ]
        pts_all = sorted({p for s in traj.segments
                          for (p, q, _, _) in s.profile.affine_pieces()
                          for p in (s.t_start + p, s.t_start + q)})
        for (a, b, w_closed) in bounds:
            fv = lambda t: traj.signed_force_at(t) * traj.v_at(t)
            pts = [x for x in pts_all if a < x < b]
            w_quad, _ = quad(fv, a, b, points=pts, epsabs=1e-10, limit=300)
            assert w_quad == pytest.approx(
                w_closed, rel=1e-8, abs=1e-8 * max(1.0, abs(w_closed)))


def test_work_vanishes_with_phase(ref_params):
    """As T1 shrinks the phase-1 work goes to zero."""
    from wormgait.optimizer import GaitProblem, evaluate_cell

    problem = GaitProblem(ref_params, 10.0, 1.0, 0.2, 0.5)
    prev = None
    t1 = None
    for t1r in (0.2, 0.02, 1e-4):
        cell = evaluate_cell(problem, t1r, 0.5)
        lo, hi = cell.rhs_band
        h_piece, i_piece, _ = synthesize_HI(
            cell.targets, 0.5 * (lo + hi), ref_params)
        prof = assemble_half_period(h_piece, cell.g_piece, i_piece)
        wd = work_decomposition(prof, cell.targets, ref_params)
        if prev is not None:
            assert abs(wd.W1) < abs(prev)
        prev, t1 = wd.W1, cell.T1
    # W1 shrinks linearly with the vanishing interval (H_end ~ T1)
    assert abs(prev) < 100.0 * t1


def test_substituted_work_identity(draws100):
    """With L set to the realized excursion, the substituted and
    unsubstituted total-work forms agree to 1e-10."""
    for draw in draws100[:10]:
        traj = draw.simulate()
        E, _, _ = excursion(traj)
        wd = work_decomposition(draw.profile, draw.cell.targets, draw.params)
        wsub = work_total_substituted(
            draw.cell.schedule, draw.cell.targets, draw.cell.tmin, E,
            draw.cell.g_piece, draw.params)
        assert wsub == pytest.approx(wd.W_total, rel=1e-10,
                                     abs=1e-10 * max(1.0, abs(wd.W_total)))


def test_only_g_changes_total_work(draws100):
    """At fixed targets, Tmin and excursion, swapping the phase-2 profile
    changes the total work by exactly twice alpha times the change in the
    G functional (everything else is constant or re-absorbed by the
    phase-1/3 synthesis)."""
    from wormgait.oracle import random_admissible_profile
    from wormgait.profiles import g_functional

    for k, draw in enumerate(draws100[:6]):
        cell = draw.cell
        c = derive_coefficients(draw.params)
        L = draw.problem.L
        results = []
        for g_piece in (cell.g_piece,
                        random_admissible_profile(cell.targets, cell.tmin,
                                                  draw.params, seed=100 + k)):
            rhs = excursion_rhs = None
            from wormgait.profiles import excursion_constraint_rhs

            rhs = excursion_constraint_rhs(cell.schedule, cell.tmin,
                                           cell.u1, cell.v1, L, g_piece,
                                           draw.params)
            lo, hi = cell.rhs_band
            if not lo <= rhs <= hi:
                continue  # this draw's band is too narrow for the swap
            h_piece, i_piece, _ = synthesize_HI(cell.targets, rhs, draw.params)
            prof = assemble_half_period(h_piece, g_piece, i_piece)
            wd = work_decomposition(prof, cell.targets, draw.params)
            results.append((wd.W_total, g_functional(g_piece, cell.tmin)))
        if len(results) == 2:
            (w_a, j_a), (w_b, j_b) = results
            assert w_a - w_b == pytest.approx(
                2.0 * c.alpha * (j_a - j_b), rel=1e-10,
                abs=1e-10 * max(1.0, abs(w_a)))


def test_report_assembly(draws100):
    draw = draws100[0]
    traj = draw.simulate()
    rep = performance_report(traj, draw.profile, draw.cell.targets, draw.params)
    assert rep.V == pytest.approx(rep.X / draw.problem.T, rel=1e-12)
    assert rep.P_u == pytest.approx(rep.P / rep.X, rel=1e-12)
    assert rep.X > 0
    assert rep.E == pytest.approx(draw.problem.L, abs=1e-8)
    d = rep.to_dict()
    assert set(d) == {"X", "V", "P", "P_u", "W1", "W2", "W3", "W_total",
                      "E", "t_min", "t_max"}
