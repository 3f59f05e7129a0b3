"""Characteristic-function stability toolkit.

Numerical machinery for checking, at desk scale, how close linear mixtures
of independent random vectors stay to the Gaussian world: empirical and
closed-form characteristic functions, a grid dependence statistic, explicit
stability bounds paired with measured quantities, a blind-source-separation
round trip, and entropy-gap estimates.
"""

from .bounds import (
    BoundConstants,
    BoundReport,
    ProjectionCheck,
    bound_constants,
    cf_floor,
    covariance_residuals,
    empirical_kolmogorov,
    log_residual_check,
    projection_gaussianity,
    t_prime,
    verify_stability,
)
from .bss import (
    MixingModel,
    SeparationReport,
    apply_precision,
    exact_pipeline,
    extract_orthogonal,
    mix,
    recover,
    separation_test,
    whiten,
)
from .charfn import (
    CFGrid,
    GridSpec,
    analytic_cf,
    cf_sup_distance,
    empirical_cf,
    empirical_cf_values,
    gaussian_cf,
    gaussianity_deficit,
    grid_points,
    second_cf,
)
from .dependence import (
    DependenceEstimate,
    analytic_dependence,
    estimate_dependence,
    mutual_dependence,
    pairwise_dependence_matrix,
)
from .entropy import EntropyEstimate, entropy_gap, gaussian_entropy, knn_entropy
from .linalg import (
    SymEigen,
    induced_norm_1,
    invert,
    is_orthogonal,
    is_scaled_permutation,
    sym_eigen,
    sym_power,
)
from .models import (
    SampleSet,
    SourceSpec,
    TwoSumSystem,
    contaminate,
    gaussian,
    gaussian_mixture,
    laplace,
    partition_classes,
    rademacher,
    sample_system,
    scalar_coefficient_system,
    sum_difference_system,
    uniform,
)

__version__ = "0.1.0"
