"""Two-mass crawler with direction-dependent Coulomb friction: periodic
gait construction, closed-form propagation, and actuation-force
optimization (maximum average velocity; minimum power per unit distance
under a peak-to-peak extension constraint), validated against an
independent stick-slip integrator."""

from .friction import (
    ConfigState,
    DerivedCoefficients,
    FrictionParams,
    Mode,
    WormState,
    classify_mode,
    derive_coefficients,
    from_config,
    to_config,
)
from .schedule import (
    FeasibleRegion,
    GaitSchedule,
    build_schedule,
    constant_force_gait,
    feasible_region,
    select_initial_conditions,
    verify_periodicity,
)
from .profiles import (
    BoundaryTargets,
    CumulativeForce,
    ForceProfile,
    ForceSegment,
    boundary_targets,
    constant_profile,
    cumulative,
    excursion_constraint_rhs,
    synthesize_HI,
)
from .dynamics import (
    Trajectory,
    find_event_time,
    propagate_mode,
    propagate_schedule,
    simulate_period,
)
from .performance import (
    PerformanceReport,
    distance_and_velocity,
    power_direct,
    work_decomposition,
)
from .optimizer import (
    BangBangParams,
    GaitProblem,
    SweepResult,
    bangbang_G,
    evaluate_cell,
    max_velocity_T1,
    optimize_tmin,
    sweep,
)
from .oracle import (
    OracleOptions,
    brute_force_optimal_G,
    integrate_ode,
    random_admissible_profile,
)

__version__ = "0.1.0"
