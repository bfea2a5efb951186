"""Inference for hit enrichment curves of virtual-screening ranking algorithms."""

from hitenrich.errors import (
    DataError,
    DegenerateClassError,
    HitEnrichError,
    NumericalDegeneracyError,
    SchemaError,
    ValidationError,
)
from hitenrich.dataset import ActivitySummary, ScoredDataset, load_csv, summarize
from hitenrich.curves import (
    CurveEstimate,
    FractionGrid,
    empirical_cdf,
    enrichment_factor_curve,
    hit_enrichment_curve,
    recall_at,
    reference_curves,
    threshold_at,
)
from hitenrich.contingency import LambdaEstimate, PairedCounts, lambda_hat, paired_counts, paired_counts_rr
from hitenrich.pointwise import (
    ComparisonResult,
    Method,
    MethodSpec,
    bh_adjust,
    compare,
    cov_binomial,
    cov_emproc,
    var_binomial,
    var_jz,
)
from hitenrich.bands import (
    Band,
    CovarianceMatrix,
    band,
    bonferroni_critical,
    cov_matrix_diff,
    cov_matrix_single,
    supt_critical,
)

__version__ = "0.1.0"

__all__ = [
    "ActivitySummary",
    "Band",
    "ComparisonResult",
    "CovarianceMatrix",
    "CurveEstimate",
    "DataError",
    "DegenerateClassError",
    "FractionGrid",
    "HitEnrichError",
    "LambdaEstimate",
    "Method",
    "MethodSpec",
    "NumericalDegeneracyError",
    "PairedCounts",
    "SchemaError",
    "ScoredDataset",
    "ValidationError",
    "band",
    "bh_adjust",
    "bonferroni_critical",
    "compare",
    "cov_binomial",
    "cov_emproc",
    "cov_matrix_diff",
    "cov_matrix_single",
    "empirical_cdf",
    "enrichment_factor_curve",
    "hit_enrichment_curve",
    "lambda_hat",
    "load_csv",
    "paired_counts",
    "paired_counts_rr",
    "recall_at",
    "reference_curves",
    "summarize",
    "supt_critical",
    "threshold_at",
    "var_binomial",
    "var_jz",
]
