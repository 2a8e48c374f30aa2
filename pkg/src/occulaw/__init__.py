"""Occupation laws of time-nonhomogeneous Markov chains with kernels ``I + G/n**zeta``."""

__version__ = "0.1.0"

from .core import (
    ChainConfig,
    GeneratorMatrix,
    MultiIndex,
    all_multi_indices,
    burn_in_threshold,
    transition_kernel,
    validate_generator,
)
from .moments import (
    ThetaParams,
    dirichlet_moment,
    limit_moment,
    multiset_permutations,
    theta_generator,
    theta_resolvent_closed_form,
    vertex_moment_sequence,
)
from .oracle import exact_marginal, exact_moment, exact_occupation_law
from .simulate import ensemble_occupations, occupation_vector, simulate_path, switch_count
from .spectral import (
    contraction_coefficient,
    kernel_product,
    kernel_product_spectral,
    limit_marginal_zeta_gt1,
    resolvent,
    stationary_distribution,
)

__all__ = [
    "ChainConfig",
    "GeneratorMatrix",
    "MultiIndex",
    "ThetaParams",
    "all_multi_indices",
    "burn_in_threshold",
    "contraction_coefficient",
    "dirichlet_moment",
    "ensemble_occupations",
    "exact_marginal",
    "exact_moment",
    "exact_occupation_law",
    "kernel_product",
    "kernel_product_spectral",
    "limit_marginal_zeta_gt1",
    "limit_moment",
    "multiset_permutations",
    "occupation_vector",
    "resolvent",
    "simulate_path",
    "stationary_distribution",
    "switch_count",
    "theta_generator",
    "theta_resolvent_closed_form",
    "transition_kernel",
    "validate_generator",
    "vertex_moment_sequence",
]
