"""Ranking and the experimental protocols built on density scores.

Covers sample ranking and top/middle/bottom selection, metric curves over
the top-k samples of a ranking, truncation toward the mean code, latent
edits along a direction, bandwidth/recall sweeps and Spearman correlation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .density import DensityScorer
from .embeddings_io import _check_same_dims, as_latent_matrix
from .errors import ConfigurationError, NumericDomainError, ValidationError
from .manifold import DEFAULT_K, _check_k, build_manifold, realism_scores

__all__ = [
    "Ranking",
    "CurvePoint",
    "rank_by_score",
    "select",
    "topk_metric_curve",
    "mean_code",
    "truncate",
    "shift_codes",
    "truncation_sweep",
    "edit_sweep",
    "sigma_recall_analysis",
    "rank_correlation",
]


@dataclass(frozen=True, eq=False)
class Ranking:
    """Query indices sorted by descending score, ties by ascending index."""

    order: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return len(self.order)


def rank_by_score(scores):
    """Rank samples by score, highest first.

    ``+inf`` entries sort first. NaN is rejected because it has no place in
    a total order.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise ValidationError("cannot rank an empty score vector")
    if np.isnan(scores).any():
        raise ValidationError(f"score {int(np.flatnonzero(np.isnan(scores))[0])} is NaN")
    if np.isneginf(scores).any():
        raise ValidationError("scores must not be -inf")
    # lexsort sorts by the last key first
    order = np.lexsort((np.arange(scores.size), -scores))
    return Ranking(order=order, scores=scores)


def select(ranking, which, k):
    """Indices of the top, bottom or middle ``k`` samples of ``ranking``.

    ``bottom`` is listed from the lowest score upward. ``middle`` is the
    window of ``k`` rank positions centred on position ``n // 2``; when it
    cannot be exactly centred the extra slot goes to the left.
    """
    n = len(ranking)
    if int(k) != k or k < 0:
        raise ValidationError(f"k must be a non-negative integer, got {k}")
    k = int(k)
    if k > n:
        raise ValidationError(f"cannot select {k} of {n} samples")
    order = ranking.order
    if which == "top":
        picked = order[:k]
    elif which == "bottom":
        picked = order[n - k:][::-1]
    elif which == "middle":
        start = min(max(n // 2 - k // 2, 0), n - k)
        picked = order[start:start + k]
    else:
        raise ValidationError(f"selection must be top, middle or bottom, got {which!r}")
    return [int(i) for i in picked]


@dataclass(frozen=True)
class CurvePoint:
    top_k: int
    precision: float
    recall: float
    mean_realism: float
    n_infinite_realism: int


def _mean_finite(values):
    finite = np.isfinite(values)
    n_inf = int(np.count_nonzero(~finite))
    mean = float(values[finite].mean()) if finite.any() else float("nan")
    return mean, n_inf


def topk_metric_curve(fake, real, ranking, ks, k_nn=DEFAULT_K):
    """Precision, recall and mean realism of the top-k fake rows, for each k.

    The real manifold and per-row realism are computed once. Precision and
    recall go through the same containment tests as
    `manifold.precision_recall`, so the point at ``k == n_fake`` reproduces
    the whole-set values exactly. Infinite realism values are left out of
    the mean and counted in ``n_infinite_realism``.
    """
    fake = as_latent_matrix(fake, "fake")
    real = as_latent_matrix(real, "real")
    _check_same_dims(fake, real, ("fake", "real"))
    if len(ranking) != fake.shape[0]:
        raise ValidationError(f"ranking covers {len(ranking)} samples, fake set has {fake.shape[0]}")
    ks = [int(k) for k in ks]
    if not ks:
        raise ConfigurationError("ks must be non-empty")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigurationError(f"ks must be strictly increasing, got {ks}")
    if ks[-1] > fake.shape[0]:
        raise ConfigurationError(f"top-k {ks[-1]} exceeds the {fake.shape[0]} fake rows")
    _check_k(k_nn, ks[0], "top-k")
    real_index = build_manifold(real, k_nn)
    on_real = real_index.contains(fake)
    realism = realism_scores(fake, real_index)

    points = []
    for k in ks:
        idx = ranking.order[:k]
        precision = on_real[idx].mean()
        recall = build_manifold(fake[idx], k_nn).contains(real).mean()
        mean_realism, n_inf = _mean_finite(realism[idx])
        points.append(CurvePoint(k, float(precision), float(recall), mean_realism, n_inf))
    return points


def mean_code(codes):
    """Coordinate-wise mean of the rows of ``codes``."""
    return as_latent_matrix(codes, "codes").mean(axis=0)


def _as_row(vec, n_dims, name):
    vec = np.asarray(vec, dtype=np.float64).ravel()
    if vec.size != n_dims:
        raise ValidationError(f"{name} has {vec.size} entries, codes have {n_dims} dims")
    if not np.isfinite(vec).all():
        raise ValidationError(f"{name} has non-finite entries")
    return vec


def truncate(codes, mean, psi):
    """Move every row toward ``mean``: ``mean + psi * (z - mean)``.

    ``psi = 0`` collapses all rows onto the mean, ``psi = 1`` is the
    identity. Values outside [0, 1] are refused.
    """
    psi = float(psi)
    if not 0.0 <= psi <= 1.0:
        raise ConfigurationError(f"psi must lie in [0, 1], got {psi}")
    codes = as_latent_matrix(codes, "codes")
    mean = _as_row(mean, codes.shape[1], "mean")
    # this form is exact at both endpoints: psi=1 returns codes, psi=0 the mean
    return as_latent_matrix(psi * codes + (1.0 - psi) * mean, "truncated")


def shift_codes(codes, direction, alpha):
    """Linear latent edit ``z + alpha * direction`` applied to every row."""
    codes = as_latent_matrix(codes, "codes")
    direction = _as_row(direction, codes.shape[1], "direction")
    return as_latent_matrix(codes + float(alpha) * direction, "edited")


def truncation_sweep(codes, train, psis, config=None):
    """Mean density score of ``codes`` truncated toward the training mean, per psi."""
    codes = as_latent_matrix(codes, "codes")
    scorer = DensityScorer(train, config)
    _check_same_dims(codes, scorer.train, ("codes", "train"))
    center = mean_code(scorer.train)
    return [float(scorer.score(truncate(codes, center, psi)).mean()) for psi in psis]


def edit_sweep(codes, train, direction, alphas, config=None):
    """Density scores of ``codes`` moved along ``direction``; shape ``(n, len(alphas))``."""
    scorer = DensityScorer(train, config)
    return np.column_stack([scorer.score(shift_codes(codes, direction, a)) for a in alphas])


def sigma_recall_analysis(fake, real, sigmas, top_fraction, k_nn=DEFAULT_K, config=None):
    """Recall of the densest ``top_fraction`` of fake rows, per bandwidth.

    Density is measured against ``real``. The subset size is
    ``ceil(top_fraction * n_fake)``.
    """
    fake = as_latent_matrix(fake, "fake")
    real = as_latent_matrix(real, "real")
    _check_same_dims(fake, real, ("fake", "real"))
    top_fraction = float(top_fraction)
    if not 0.0 < top_fraction <= 1.0:
        raise ConfigurationError(f"top_fraction must lie in (0, 1], got {top_fraction}")
    # the slack keeps products like 0.2 * 2000 from rounding up a row
    n_top = int(np.ceil(top_fraction * fake.shape[0] - 1e-9))
    _check_k(k_nn, n_top, "selected fake")
    _check_k(k_nn, real.shape[0], "real")
    scores = DensityScorer(real, config).score_many(fake, sigmas)
    recalls = []
    for j in range(scores.shape[1]):
        top = select(rank_by_score(scores[:, j]), "top", n_top)
        recalls.append(float(build_manifold(fake[top], k_nn).contains(real).mean()))
    return recalls


def rank_correlation(a, b):
    """Spearman rank correlation with average ranks for ties.

    Raises `NumericDomainError` when either input is constant.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValidationError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValidationError("rank correlation needs at least two samples")
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValidationError("rank correlation inputs must not contain NaN")
    ra = rankdata(a) - (a.size + 1) / 2.0
    rb = rankdata(b) - (b.size + 1) / 2.0
    denom = np.sqrt(np.dot(ra, ra) * np.dot(rb, rb))
    if denom == 0.0:
        raise NumericDomainError("rank correlation is undefined for constant input")
    return float(np.clip(np.dot(ra, rb) / denom, -1.0, 1.0))
