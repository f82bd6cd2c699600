"""k-NN manifold metrics over latent codes.

A real point set defines a manifold as the union of closed balls, one per
real code, whose radius is the distance to that code's k-th nearest other
real code. On top of it:

* realism  - max over real codes of radius / distance to the fake code
* rarity   - smallest radius among the balls containing the fake code
* precision / recall, density / coverage - set-level fidelity and diversity

Distances are exact Euclidean distances computed by direct coordinate
differences in row blocks, so containment tests at ball boundaries are not
disturbed by Gram-expansion cancellation.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .embeddings_io import _check_same_dims, as_latent_matrix
from .errors import ConfigurationError

__all__ = [
    "DEFAULT_K",
    "DEFAULT_K_DENSITY",
    "ManifoldIndex",
    "MetricReport",
    "RarityScores",
    "pairwise_distances",
    "build_manifold",
    "realism_scores",
    "rarity_scores",
    "precision_recall",
    "density_coverage",
    "compute_metrics",
]

DEFAULT_K = 3
DEFAULT_K_DENSITY = 5

# Bound on the number of distance entries held in memory at once.
_BLOCK_ENTRIES = 1 << 22


def _row_blocks(n_rows, n_cols):
    step = max(1, _BLOCK_ENTRIES // max(n_cols, 1))
    for s in range(0, n_rows, step):
        yield s, min(s + step, n_rows)


def pairwise_distances(a, b):
    """Full Euclidean distance matrix between the rows of ``a`` and ``b``."""
    a = as_latent_matrix(a, "a")
    b = as_latent_matrix(b, "b")
    _check_same_dims(a, b, ("a", "b"))
    out = np.empty((a.shape[0], b.shape[0]))
    for s, e in _row_blocks(a.shape[0], b.shape[0]):
        out[s:e] = cdist(a[s:e], b)
    return out


@dataclass(frozen=True, eq=False)
class ManifoldIndex:
    """Real codes with the radius of each code's k-NN ball."""

    real: np.ndarray
    k: int
    radii: np.ndarray

    @property
    def n_dims(self):
        return self.real.shape[1]

    def contains(self, points):
        """Boolean mask: is each row of ``points`` inside at least one ball."""
        points = _as_points(points, self)
        inside = np.zeros(points.shape[0], dtype=bool)
        for s, e, dist in _blocks_against(points, self):
            inside[s:e] = (dist <= self.radii).any(axis=1)
        return inside


def _check_k(k, n_rows, what="real"):
    if int(k) != k or k < 1:
        raise ConfigurationError(f"k must be a positive integer, got {k}")
    if k > n_rows - 1:
        raise ConfigurationError(f"k={k} needs at least {k + 1} {what} rows, got {n_rows}")
    return int(k)


def build_manifold(real, k=DEFAULT_K):
    """Exact k-NN radii of every real row (self excluded, duplicates count).

    Raises `ConfigurationError` unless ``1 <= k <= n_rows - 1``.
    """
    real = as_latent_matrix(real, "real")
    n = real.shape[0]
    k = _check_k(k, n)
    radii = np.empty(n)
    for s, e in _row_blocks(n, n):
        dist = cdist(real[s:e], real)
        dist[np.arange(e - s), np.arange(s, e)] = np.inf
        radii[s:e] = np.partition(dist, k - 1, axis=1)[:, k - 1]
    radii.flags.writeable = False
    return ManifoldIndex(real=real, k=k, radii=radii)


def _as_points(points, index, name="fake"):
    points = as_latent_matrix(points, name)
    _check_same_dims(points, index.real, (name, "real"))
    return points


def _blocks_against(points, index):
    for s, e in _row_blocks(points.shape[0], index.real.shape[0]):
        yield s, e, cdist(points[s:e], index.real)


def realism_scores(fake, index):
    """Realism of each fake row: ``max_j radii[j] / ||fake - real_j||``.

    A fake row that coincides with a real row scores ``+inf``. A score is
    ``>= 1`` exactly when the row lies inside some real ball.
    """
    fake = _as_points(fake, index)
    out = np.empty(fake.shape[0])
    for s, e, dist in _blocks_against(fake, index):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = index.radii / dist
        ratio[dist == 0.0] = np.inf
        out[s:e] = ratio.max(axis=1)
    return out


class RarityScores(NamedTuple):
    """Rarity values with an explicit out-of-manifold mark.

    ``scores`` holds NaN wherever ``on_manifold`` is False; consumers should
    branch on the mask rather than on the NaN.
    """

    scores: np.ndarray
    on_manifold: np.ndarray


def rarity_scores(fake, index):
    """Smallest radius among real balls that contain each fake row."""
    fake = _as_points(fake, index)
    out = np.full(fake.shape[0], np.nan)
    for s, e, dist in _blocks_against(fake, index):
        radii = np.where(dist <= index.radii, index.radii, np.inf)
        out[s:e] = radii.min(axis=1)
    on = np.isfinite(out)
    out[~on] = np.nan
    return RarityScores(out, on)


def _check_pair(fake, real, k):
    fake = as_latent_matrix(fake, "fake")
    real = as_latent_matrix(real, "real")
    _check_same_dims(fake, real, ("fake", "real"))
    _check_k(k, real.shape[0], "real")
    _check_k(k, fake.shape[0], "fake")
    return fake, real


def precision_recall(fake, real, k=DEFAULT_K):
    """Fraction of fake rows on the real manifold, and of real rows on the fake one."""
    fake, real = _check_pair(fake, real, k)
    precision = build_manifold(real, k).contains(fake).mean()
    recall = build_manifold(fake, k).contains(real).mean()
    return float(precision), float(recall)


def density_coverage(fake, real, k=DEFAULT_K_DENSITY):
    """Ball-count density and coverage of the real manifold by fake rows."""
    fake, real = _check_pair(fake, real, k)
    index = build_manifold(real, k)
    hits = 0
    nearest = np.full(real.shape[0], np.inf)
    for s, e, dist in _blocks_against(fake, index):
        hits += int(np.count_nonzero(dist <= index.radii))
        np.minimum(nearest, dist.min(axis=0), out=nearest)
    density = hits / (k * fake.shape[0])
    coverage = float(np.mean(nearest <= index.radii))
    return float(density), coverage


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    density: float
    coverage: float
    k: int
    k_density: int
    n_fake: int
    n_real: int

    def as_dict(self):
        return dict(self.__dict__)


def compute_metrics(fake, real, k=DEFAULT_K, k_density=DEFAULT_K_DENSITY):
    """All four set metrics in one report."""
    fake = as_latent_matrix(fake, "fake")
    real = as_latent_matrix(real, "real")
    precision, recall = precision_recall(fake, real, k)
    density, coverage = density_coverage(fake, real, k_density)
    return MetricReport(
        precision=precision,
        recall=recall,
        density=density,
        coverage=coverage,
        k=int(k),
        k_density=int(k_density),
        n_fake=fake.shape[0],
        n_real=real.shape[0],
    )
