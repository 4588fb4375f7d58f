"""Additive Bayesian network structure learning over binary data.

Logistic node models under weakly-informative Gaussian, Student t, or
truth-informed Gaussian priors; Laplace-approximate node scores; exact
structure search; and the simulation studies that compare the priors under
data separation and density-dependent complexity bias.
"""

from .data import (
    AbnParams,
    Dataset,
    SeparationStatus,
    aggregate_design,
    design_rows,
    detect_separation,
    sample,
    separation_of_design,
    separation_screen,
)
from .experiments import (
    LINDLEY,
    SEPARATION,
    ResultRow,
    StudyConfig,
    derive_rng,
    results_from_csv,
    results_to_csv,
    run_lindley_study,
    run_separation_study,
    run_study,
    summarize_rows,
    summary_from_csv,
    summary_to_csv,
)
from .graph import (
    Cpdag,
    CyclicGraphError,
    Dag,
    Metrics,
    compare,
    is_acyclic,
    parse_graph_json,
    random_dag,
    to_cpdag,
    topological_order,
)
from .score import (
    CacheEntry,
    FitError,
    GaussianPrior,
    HessianNotPositiveDefinite,
    NodeFit,
    ScoreCache,
    SingularSystemError,
    StrongGaussianPrior,
    StudentTPrior,
    build_score_cache,
    fit_node,
    log_marginal_likelihood,
    prior_from_name,
    weakly_informative,
)
from .search import BestParentTable, SearchResult, best_parent_sets, brute_force_search, exact_search
from .svg import render_summary_svg

__version__ = "0.1.0"

__all__ = [
    "AbnParams",
    "BestParentTable",
    "CacheEntry",
    "Cpdag",
    "CyclicGraphError",
    "Dag",
    "Dataset",
    "FitError",
    "GaussianPrior",
    "HessianNotPositiveDefinite",
    "LINDLEY",
    "Metrics",
    "NodeFit",
    "ResultRow",
    "ScoreCache",
    "SEPARATION",
    "SearchResult",
    "SeparationStatus",
    "SingularSystemError",
    "StrongGaussianPrior",
    "StudentTPrior",
    "StudyConfig",
    "aggregate_design",
    "best_parent_sets",
    "brute_force_search",
    "build_score_cache",
    "compare",
    "derive_rng",
    "design_rows",
    "detect_separation",
    "exact_search",
    "fit_node",
    "is_acyclic",
    "log_marginal_likelihood",
    "parse_graph_json",
    "prior_from_name",
    "random_dag",
    "render_summary_svg",
    "results_from_csv",
    "results_to_csv",
    "run_lindley_study",
    "run_separation_study",
    "run_study",
    "sample",
    "separation_of_design",
    "separation_screen",
    "summarize_rows",
    "summary_from_csv",
    "summary_to_csv",
    "to_cpdag",
    "topological_order",
    "weakly_informative",
]
