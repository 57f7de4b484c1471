"""Query-based agnostic learning of multi-index models under Gaussian inputs."""

from .errors import (BudgetExhaustedError, ConfigError, DimensionMismatchError, MimError, NumericError,
                     ParameterError, SizeError)
from .gaussian_core import (QuadratureRule, Subspace, enumerate_multi_indices, gauss_rule, hermite_eval,
                            hermite_table, principal_angles, project, split_rule)
from .influence_pca import (InfluenceEstimate, SubspaceSelection, dimension_bound, estimate_influence,
                            select_threshold, top_subspace)
from .oracle import (BudgetLedger, CorruptionSpec, LabelOracle, TargetSpec, class_parameters, draw_sample,
                     eval_target, opt_error, query)
from .pipeline import (ExperimentReport, LearnerConfig, compare_baseline, learn_boolean_mim, learn_real_mim,
                       run_experiment, sweep)
from .proper_learners import Candidate, CoverSpec, build_cover, erm_select, proper_learn_ltf, proper_learn_relu
from .regression import (BooleanHypothesis, PolynomialHypothesis, degree_for, empirical_error, evaluate,
                         l1_fit, l2_fit)
from .smoothing import (SmoothingParams, gradient_sample_count, smoothed_gradient, smoothed_value,
                        truncate_label)

__version__ = "0.1.0"

__all__ = [
    "BooleanHypothesis", "BudgetExhaustedError", "BudgetLedger", "Candidate", "ConfigError", "CorruptionSpec",
    "CoverSpec", "DimensionMismatchError", "ExperimentReport", "InfluenceEstimate", "LabelOracle",
    "LearnerConfig", "MimError", "NumericError", "ParameterError", "PolynomialHypothesis", "QuadratureRule",
    "SizeError", "SmoothingParams", "Subspace", "SubspaceSelection", "TargetSpec", "build_cover",
    "class_parameters", "compare_baseline", "degree_for", "dimension_bound", "draw_sample", "empirical_error",
    "enumerate_multi_indices", "erm_select", "estimate_influence", "eval_target", "evaluate", "gauss_rule",
    "gradient_sample_count", "hermite_eval", "hermite_table", "l1_fit", "l2_fit", "learn_boolean_mim",
    "learn_real_mim", "opt_error", "principal_angles", "project", "proper_learn_ltf", "proper_learn_relu",
    "query", "run_experiment", "select_threshold", "smoothed_gradient", "smoothed_value", "split_rule", "sweep",
    "top_subspace", "truncate_label",
]
