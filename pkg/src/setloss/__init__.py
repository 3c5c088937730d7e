"""Polynomial loss functions whose minimizers are a prescribed finite set.

The package interpolates a generating system through a point set, fits
that system to noisy samples by a penalized least-squares solve, reads
the zeros back out of multiplication matrices, and clusters data by
descending the resulting losses.
"""

from .clustering import (
    ClusterAssignment,
    GmmSpec,
    MinimizeResult,
    RecoveryResult,
    assign_labels,
    bounded_noise_sample,
    clustering_accuracy,
    gmm_sample,
    minimize_from,
    random_gmm_spec,
    recover_point_set,
)
from .errors import (
    DegenerateConfigurationError,
    InvalidStateError,
    NumericalFailureError,
)
from .extraction import ZeroSet, extract_zero_set, real_projection, set_distance
from .fitting import (
    FitOptions,
    FitResult,
    SampleSet,
    average_loss,
    fit_generating_matrix,
    least_squares_init,
    moment_matrix,
)
from .generating_system import (
    CommutatorResidual,
    GeneratingMatrix,
    MultiplicationMatrices,
    PointSet,
    commutator_residual,
    evaluate_generators,
    generator_strings,
    generator_terms,
    multiplication_matrices,
    solve_generating_matrix,
    vandermonde,
)
from .loss_functions import (
    GeneratingLoss,
    SimplicialLoss,
    TransformedLoss,
    build_affine_loss,
    build_lifted_loss,
    build_transformed_loss,
    eval_transformed,
    generating_loss,
    simplicial_loss,
)
from .monomial_basis import (
    ExponentVector,
    MonomialBasis,
    border_monomials,
    evaluate_monomials,
    grlex_compare,
    grlex_key,
    monomial_lift,
    monomial_matrix,
    standard_monomials,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "CommutatorResidual",
    "DegenerateConfigurationError",
    "ExponentVector",
    "FitOptions",
    "FitResult",
    "GeneratingLoss",
    "GeneratingMatrix",
    "GmmSpec",
    "InvalidStateError",
    "MinimizeResult",
    "MonomialBasis",
    "MultiplicationMatrices",
    "NumericalFailureError",
    "PointSet",
    "RecoveryResult",
    "SampleSet",
    "SimplicialLoss",
    "TransformedLoss",
    "ZeroSet",
    "assign_labels",
    "average_loss",
    "border_monomials",
    "bounded_noise_sample",
    "build_affine_loss",
    "build_lifted_loss",
    "build_transformed_loss",
    "clustering_accuracy",
    "commutator_residual",
    "eval_transformed",
    "evaluate_generators",
    "evaluate_monomials",
    "extract_zero_set",
    "fit_generating_matrix",
    "generating_loss",
    "generator_strings",
    "generator_terms",
    "gmm_sample",
    "grlex_compare",
    "grlex_key",
    "least_squares_init",
    "minimize_from",
    "moment_matrix",
    "monomial_lift",
    "monomial_matrix",
    "multiplication_matrices",
    "random_gmm_spec",
    "real_projection",
    "recover_point_set",
    "set_distance",
    "simplicial_loss",
    "solve_generating_matrix",
    "standard_monomials",
    "vandermonde",
]
