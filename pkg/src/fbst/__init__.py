"""e-values, the Full Bayesian Significance Test, and its generalized
three-valued form, with a compositional calculus of truth functions."""

__version__ = "0.1.0"

from .model import (
    Dataset,
    DomainError,
    Hypothesis,
    InfeasibleHypothesisError,
    ParameterSpace,
    SingularDesignError,
    SpecError,
    StatisticalModel,
    complement,
    coordinate_zero_hypothesis,
    gaussian_mean_evalue_oracle,
    hypothesis_contains,
    hypothesis_from_spec,
    log_surprise,
    make_gaussian_mean_model,
    make_polynomial_regression_model,
    model_from_spec,
    point_hypothesis,
)
from .sampler import (
    SamplerConfig,
    SurpriseSample,
    effective_sample_size,
    sample_posterior,
)
from .truth import TruthLadder, condense, estimate_truth_ladder, eval_truth
from .optimizer import (
    Optimum,
    OptimizerConfig,
    closed_form_constrained_mode,
    maximize_surprise,
)
from .evalue import (
    EvidenceReport,
    chi2_cdf,
    chi2_quantile,
    evalue,
    standardize,
    standardized_evalue,
)
from .composition import (
    CompositeStructure,
    conjunctive_evalue,
    disjunctive_evalue,
    mellin_convolve,
)
from .gfbst import (
    Decision,
    GridModel,
    check_logical_properties,
    gfbst_decide,
    modal_table,
    region_estimator_decide,
)
from .modelsel import (
    benchmark_dataset,
    empirical_error,
    penalty_factor,
    select_order,
    selection_table,
)
