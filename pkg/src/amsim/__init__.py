"""Rare-event estimation for metastable gradient systems.

The package simulates overdamped Langevin dynamics in two discretizations
(a coupled particle chain and a stochastic Allen-Cahn grid), estimates
transition probabilities between metastable states with Adaptive Multilevel
Splitting, and analyzes the bifurcation structure of the two-particle
energy.  The ``amsim`` console script exposes the experiment presets.
"""

__version__ = "0.1.0"

from .bifurcation import (
    classify_regime_2d,
    critical_points_2d,
    hessian_spectrum_origin,
    normal_form_2d,
)
from .dynamics import StepperConfig, allen_cahn_step, bernoulli_flow, euler_step
from .errors import (
    AbsorbedTimeoutError,
    AmsimError,
    ConfigError,
    DegenerateParameterError,
    ExtinctionError,
    InvalidArgumentError,
    InvalidStateError,
    NotConvergedError,
)
from .model import (
    KIND_CHAIN,
    KIND_GRID,
    ModelParams,
    double_well,
    energy,
    grad_energy,
    hessian_energy,
)
from .rare_event import (
    AmsConfig,
    AmsOutput,
    ams_estimate,
    crossing_positions,
    direct_mc_estimate,
    run_until_absorbed,
)
from .rng import RngKey, child_seed
from .stats import dip_statistic, dip_test, linear_fit

__all__ = [
    "AbsorbedTimeoutError",
    "AmsConfig",
    "AmsOutput",
    "AmsimError",
    "ConfigError",
    "DegenerateParameterError",
    "ExtinctionError",
    "InvalidArgumentError",
    "InvalidStateError",
    "KIND_CHAIN",
    "KIND_GRID",
    "ModelParams",
    "NotConvergedError",
    "RngKey",
    "StepperConfig",
    "allen_cahn_step",
    "ams_estimate",
    "bernoulli_flow",
    "child_seed",
    "classify_regime_2d",
    "critical_points_2d",
    "crossing_positions",
    "dip_statistic",
    "dip_test",
    "direct_mc_estimate",
    "double_well",
    "energy",
    "euler_step",
    "grad_energy",
    "hessian_energy",
    "hessian_spectrum_origin",
    "linear_fit",
    "normal_form_2d",
    "run_until_absorbed",
]
