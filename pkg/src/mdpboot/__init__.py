"""Moderate-deviation rate functions and bootstrap tail simulation."""

from ._version import __version__
from .errors import (
    AbsoluteContinuityError,
    ComplexityError,
    InfeasibleError,
    InputError,
)
from .measures import (
    EmpiricalMeasure,
    FiniteProbabilityMeasure,
    SignedMeasureDensity,
    TestFunction,
    empirical_from_sample,
    integrate,
    load_distribution,
    scaled_deviation,
)
from .rate import (
    ConstraintSet,
    LinearConstraint,
    ShiftVector,
    finite_dim_rate,
    joint_rate,
    min_rate_halfspace,
    min_rate_linear,
    rate_of,
)
from .zones import (
    SequenceFamily,
    TailModel,
    check_phi_membership,
    check_psi_membership,
    check_theta_conditions,
    convergence_guard,
    instability_zone,
    zone_report,
)
from .simulate import (
    RngSpec,
    TailEstimate,
    bootstrap_resample,
    draw_sample,
    exact_conditional_tail,
    gaussian_sandwich,
    heavy_tail_sum_mc,
    joint_tail_mc,
    mc_conditional_tail,
    tilted_conditional_tail,
)
from .functionals import (
    BivariateModel,
    GridFunction,
    GridFunction2D,
    StepCdf,
    copula_hadamard_derivative,
    empirical_copula,
    generalized_inverse,
    quantile_process_diff,
    rate_Ic,
    rate_Iq,
    weighted_ks,
)
from .experiments import (
    DecayRow,
    ExperimentConfig,
    fit_rate_slope,
    run_conditional_experiment,
    run_decay_experiment,
    run_instability_experiment,
    run_joint_experiment,
    run_sandwich_experiment,
    verify_against_theory,
)

__all__ = [name for name in dir() if not name.startswith("_")]
