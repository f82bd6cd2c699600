"""Sample quality from latent-space density, with k-NN manifold baselines."""

from .analysis import (
    CurvePoint,
    Ranking,
    edit_sweep,
    mean_code,
    rank_by_score,
    rank_correlation,
    select,
    shift_codes,
    sigma_recall_analysis,
    topk_metric_curve,
    truncate,
    truncation_sweep,
)
from .density import (
    DEFAULT_SIGMA,
    DensityConfig,
    DensityScorer,
    latent_density,
    latent_density_reference,
    sigma_sweep,
)
from .embeddings_io import (
    EmbeddingFormat,
    as_latent_matrix,
    flatten_grid,
    flatten_grids,
    load_embeddings,
    save_embeddings,
    unflatten_grid,
)
from .errors import (
    ConfigurationError,
    FormatError,
    LatentScopeError,
    NumericDomainError,
    UnsupportedLayoutError,
    ValidationError,
)
from .manifold import (
    ManifoldIndex,
    MetricReport,
    RarityScores,
    build_manifold,
    compute_metrics,
    density_coverage,
    precision_recall,
    rarity_scores,
    realism_scores,
)
from .synthetic import MixtureModel, pdf, quality_proxy, sample

__version__ = "0.1.0"

__all__ = [
    "CurvePoint",
    "Ranking",
    "edit_sweep",
    "mean_code",
    "rank_by_score",
    "rank_correlation",
    "select",
    "shift_codes",
    "sigma_recall_analysis",
    "topk_metric_curve",
    "truncate",
    "truncation_sweep",
    "DEFAULT_SIGMA",
    "DensityConfig",
    "DensityScorer",
    "latent_density",
    "latent_density_reference",
    "sigma_sweep",
    "EmbeddingFormat",
    "as_latent_matrix",
    "flatten_grid",
    "flatten_grids",
    "load_embeddings",
    "save_embeddings",
    "unflatten_grid",
    "ConfigurationError",
    "FormatError",
    "LatentScopeError",
    "NumericDomainError",
    "UnsupportedLayoutError",
    "ValidationError",
    "ManifoldIndex",
    "MetricReport",
    "RarityScores",
    "build_manifold",
    "compute_metrics",
    "density_coverage",
    "precision_recall",
    "rarity_scores",
    "realism_scores",
    "MixtureModel",
    "pdf",
    "quality_proxy",
    "sample",
]
