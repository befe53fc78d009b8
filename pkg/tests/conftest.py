"""Shared fixtures: the reference parameter set and randomized feasible
gait draws used across the suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from wormgait.dynamics import Trajectory, simulate_period
from wormgait.friction import ConfigState, FrictionParams, derive_coefficients
from wormgait.optimizer import GaitProblem, evaluate_cell
from wormgait.profiles import (
    ForceProfile,
    ForceSegment,
    assemble_half_period,
    synthesize_HI,
)
from wormgait.schedule import t1_interval


@pytest.fixture(scope="session")
def ref_params() -> FrictionParams:
    """Reference friction set used by the worked numbers in the suite."""
    return FrictionParams(f_fw=0.1, f_bw=1.0, f_u=5.0)


@pytest.fixture(scope="session")
def ref_problem(ref_params) -> GaitProblem:
    return GaitProblem(ref_params, T=10.0, L=32.261, u_ratio=0.2, v_ratio=0.5)


@dataclass
class GaitDraw:
    """One randomized feasible scenario with an achievable excursion."""

    params: FrictionParams
    problem: GaitProblem
    t1r: float
    tminr: float
    cell: object  # CellResult
    profile: ForceProfile      # synthesized half-period magnitude
    init: ConfigState

    def simulate(self) -> Trajectory:
        return simulate_period(self.cell.schedule, self.profile, self.init,
                               self.params)


def random_draw(rng: np.random.Generator, d1: float = 60.0) -> GaitDraw:
    """Rejection-sample a feasible scenario; the excursion target is set
    inside the achievable band so the synthesized gait realizes it."""
    while True:
        f_bw = rng.uniform(0.5, 2.5)
        rho = rng.uniform(0.05, 0.9)
        eta = rng.uniform(1.3, 6.0)
        params = FrictionParams(f_fw=rho * f_bw, f_bw=f_bw, f_u=eta * f_bw)
        T = rng.uniform(2.0, 15.0)
        # stay inside the K >= 2 feasibility strip
        t1_cap = (eta - 1.0) / (eta + 2.0)
        t1r = rng.uniform(0.05, 0.95) * 0.95 * t1_cap
        tminr = rng.uniform(0.05, 0.95)
        u_ratio = rng.uniform(0.05, 0.95)
        v_ratio = rng.uniform(0.05, 0.95)
        probe = GaitProblem(params, T=T, L=1.0, u_ratio=u_ratio, v_ratio=v_ratio)
        cell = evaluate_cell(probe, t1r, tminr)
        if not cell.feasible:
            continue
        lo, hi = cell.excursion_band
        if hi - lo <= 1e-9 * max(1.0, abs(hi)):
            L = 0.5 * (lo + hi)
        else:
            L = lo + rng.uniform(0.2, 0.8) * (hi - lo)
        problem = GaitProblem(params, T=T, L=L, u_ratio=u_ratio, v_ratio=v_ratio)
        cell = evaluate_cell(problem, t1r, tminr)
        if not (cell.feasible and cell.excursion_ok):
            continue
        h_piece, i_piece, _ = synthesize_HI(cell.targets, cell.required_rhs,
                                            params, variant=rng.uniform(0, 1))
        profile = assemble_half_period(h_piece, cell.g_piece, i_piece)
        d_start = max(d1, 1.2 * hi + 5.0)  # extension must stay positive
        init = ConfigState(t=0.0, d=d_start, v=cell.v1, u=cell.u1)
        return GaitDraw(params=params, problem=problem, t1r=t1r, tminr=tminr,
                        cell=cell, profile=profile, init=init)


def wiggle_profile(profile: ForceProfile, params: FrictionParams,
                   rng: np.random.Generator, sampled: bool = False) -> ForceProfile:
    """Integral-preserving admissible perturbation: each constant piece
    becomes an affine (or piecewise-linear sampled) ramp symmetric about
    its level, so every cumulative target is untouched."""
    segs = []
    for (p, q, fp, m) in profile.affine_pieces():
        w = q - p
        if m == 0.0:
            slack = min(fp - params.f_bw, params.f_u - fp)
            delta = rng.uniform(0.0, 0.9) * slack
            if sampled and delta > 0:
                tm = 0.5 * (p + q)
                segs.append(ForceSegment(
                    p, q, "sampled",
                    ((p, tm, q), (fp - delta, fp + delta, fp - delta)),
                ))
                continue
            segs.append(ForceSegment(p, q, "affine",
                                     (fp - delta, 2.0 * delta / w)))
        else:
            segs.append(ForceSegment(p, q, "affine", (fp, m)))
    return ForceProfile(tuple(segs))


@pytest.fixture(scope="session")
def draws100():
    """100 seeded feasible draws shared by the acceptance criteria."""
    rng = np.random.default_rng(20240811)
    return [random_draw(rng) for _ in range(100)]


def t1_from_ratio(T: float, params: FrictionParams, t1r: float) -> float:
    lo, hi = t1_interval(T, derive_coefficients(params))
    return lo + t1r * (hi - lo)
