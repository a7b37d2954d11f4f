"""Numerical laboratory for a stochastic nonlocal delayed
reaction-diffusion equation on the half-line.

The package simulates the mild solution of

    du/dt = Laplacian(u) - mu * u
            + eps * Integral(kernel(alpha, x, y) * f(u(t - tau, y)) dy)
            + sum_j g_j(x) * dW_j/dt,        u(t, 0) = 0,  x > 0,

truncated to [0, L], and measures the quantitative structure the model
carries: the dispersal operator's norm bound, the killed heat flow's
decay and smoothing inequalities, stationary noise statistics and
temperedness, fixed-point contraction of the mild formulation, the
cocycle property, pullback absorption, and the exponentially attracting
random fixed point under strong damping.

Layout
------
grid        spatial lattice, fields, history segments, norms
quadrature  product-integration matrices for Gaussian kernels
kernel      nonlocal dispersal operator (image-pair Gaussian kernel)
semigroup   Dirichlet heat propagator with killing, bound checks
noise       two-sided Wiener paths, stationary OU fields, temperedness
model       model parameters, nonlinearities, noise profiles
solver      delayed mild-solution stepper (method of steps / Picard)
pullback    pullback runs, absorbing radius, random fixed point
config      flat key = value experiment configs
experiments seeded experiment runners with CSV reports
cli         command-line entry point (``rdslab run`` / ``validate``)
"""

from __future__ import annotations

from .errors import (
    ConditionViolatedError,
    ParameterError,
    RdsLabError,
    WindowExhaustedError,
)
from .grid import (
    Field,
    Grid,
    Segment,
    compact_open_norm,
    make_grid,
    segment_co_norm,
    segment_sup_norm,
    sup_norm,
)
from .kernel import DispersalKernel, KernelParams, apply_dispersal, kernel_value, tail_mass
from .model import ModelParams, Nonlinearity, default_profiles
from .noise import (
    NoiseProfiles,
    OUParams,
    ProfileSpec,
    WienerPath,
    empirical_decay_bound,
    ou_series,
    ou_value,
    sample_wiener,
    zero_wiener,
)
from .pullback import (
    DerivedConstants,
    absorbing_radius,
    cocycle_residual,
    derived_constants,
    fixed_point_estimate,
    pullback_bound,
    pullback_conjugated,
    pullback_state,
    time_one_contraction,
)
from .semigroup import DirichletHeatSemigroup, check_semigroup_bounds
from .solver import (
    DelaySolver,
    SolverConfig,
    Trajectory,
    contraction_interval,
    evaluate_feedback,
    picard_gain,
)
from .config import ExperimentSpec, parse_config
from .experiments import ExperimentResult, run_experiment

__version__ = "1.0.0"

__all__ = [
    "ConditionViolatedError",
    "ParameterError",
    "RdsLabError",
    "WindowExhaustedError",
    "Field",
    "Grid",
    "Segment",
    "compact_open_norm",
    "make_grid",
    "segment_co_norm",
    "segment_sup_norm",
    "sup_norm",
    "DispersalKernel",
    "KernelParams",
    "apply_dispersal",
    "kernel_value",
    "tail_mass",
    "ModelParams",
    "Nonlinearity",
    "default_profiles",
    "NoiseProfiles",
    "OUParams",
    "ProfileSpec",
    "WienerPath",
    "empirical_decay_bound",
    "ou_series",
    "ou_value",
    "sample_wiener",
    "zero_wiener",
    "DerivedConstants",
    "absorbing_radius",
    "cocycle_residual",
    "derived_constants",
    "fixed_point_estimate",
    "pullback_bound",
    "pullback_conjugated",
    "pullback_state",
    "time_one_contraction",
    "DirichletHeatSemigroup",
    "check_semigroup_bounds",
    "DelaySolver",
    "SolverConfig",
    "Trajectory",
    "contraction_interval",
    "evaluate_feedback",
    "picard_gain",
    "ExperimentSpec",
    "parse_config",
    "ExperimentResult",
    "run_experiment",
    "__version__",
]
