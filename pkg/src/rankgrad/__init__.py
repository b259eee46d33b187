"""Rank graduation metrics (RGX_p), variability indices, distribution
divergences, whitening-based multivariate extensions and SAFE model
evaluation with Shapley-based explanations."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    DegenerateInputError,
    InputError,
    NonPositiveError,
    OutputError,
    RankGradError,
    SingularityError,
    TrainingError,
)
from .rank_core import (
    PLCurve,
    RankedSample,
    compute_ranks,
    concordance_curve,
    dual_lorenz_curve,
    gini,
    lorenz_curve,
    pietra,
    ranked_sample,
)
from .rgx import RgxResult, rgx_p, s_inf, s_p, wrgx_p
from .divergences import (
    StepCDF,
    bias_variance_decompose,
    concordance_function,
    cvm_p,
    empirical_cdf,
    energy_distance,
    global_decompose,
    verify_cvm_wasserstein,
    wasserstein_1d,
)
from .whitening import fit_whitening, multivariate_gini, multivariate_rgx_p
from .safe_eval import SafeReport, kfold_split, perturb, rga, rge, rgr, run_safe_eval
from .explain import normalize_importance, rank_features, shapley_mc, spearman

__all__ = [name for name in dir() if not name.startswith("_")]
