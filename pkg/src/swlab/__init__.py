"""Sliced Wasserstein distances on a truncated Hilbert space, with directions
drawn from the surface measure of a Gaussian reference."""

__version__ = "0.1.0"

from .discrete_ot import TransportPlan, wasserstein_exact
from .errors import DomainError, InputError, ResourceError
from .experiments import (
    counterexample_run,
    narrow_convergence_demo,
    rate_constant,
    rate_experiment,
    two_sample_experiment,
    w_vs_sw_dimension_sweep,
)
from .hilbert import DiscreteMeasure, MeasureSpec, basis_vector, inner, moment_p, norm, sample_measure
from .ot1d import (
    DistributionSpec1D,
    Projected1DMeasure,
    bobkov_integral,
    bobkov_rhs,
    chebyshev_envelope,
    project,
    quantile_discretization,
    w1d,
    w1d_pp,
)
from .reports import Report, Table
from .sliced import (
    SWEstimate,
    check_sw_leq_w,
    check_theta_lipschitz,
    check_uniform_bound,
    sw_estimate,
    sw_finite_uniform,
)
from .surface import (
    DirectionSet,
    GaussianReference,
    direction_second_moments,
    sample_directions,
    sample_uniform_directions,
    shell_refinement,
    surface_expectation,
)

__all__ = [
    "DirectionSet", "DiscreteMeasure", "DistributionSpec1D", "DomainError", "GaussianReference", "InputError",
    "MeasureSpec", "Projected1DMeasure", "Report", "ResourceError", "SWEstimate", "Table", "TransportPlan",
    "basis_vector", "bobkov_integral", "bobkov_rhs", "chebyshev_envelope", "check_sw_leq_w",
    "check_theta_lipschitz", "check_uniform_bound", "counterexample_run", "direction_second_moments", "inner",
    "moment_p", "narrow_convergence_demo", "norm", "project", "quantile_discretization", "rate_constant",
    "rate_experiment", "sample_directions", "sample_measure", "sample_uniform_directions", "shell_refinement",
    "surface_expectation", "sw_estimate", "sw_finite_uniform", "two_sample_experiment", "w1d", "w1d_pp",
    "w_vs_sw_dimension_sweep", "wasserstein_exact",
]
