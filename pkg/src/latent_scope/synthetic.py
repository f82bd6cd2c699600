"""Synthetic latent manifolds: isotropic Gaussian mixtures with exact densities.

Sampling is reproducible across platforms and languages. Random numbers
come from SplitMix64 used as a counter-based generator::

    x_i = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15  mod 2**64)
    mix64(z):  z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9
               z = (z ^ z >> 27) * 0x94D049BB133111EB
               return z ^ z >> 31

Uniforms are ``(x_i >> 11) * 2**-53`` in [0, 1). For ``sample(model, n)``
stream positions ``0 .. n-1`` choose components by inverse CDF over the
cumulative weights. Normals follow from Box-Muller on the pair of stream
positions ``n + 2j, n + 2j + 1``; the first of the pair is shifted to
(0, 1] as ``((x >> 11) + 1) * 2**-53``. Pair ``j`` gives normals ``2j``
(cosine branch) and ``2j + 1`` (sine branch), consumed row-major.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .embeddings_io import as_latent_matrix
from .errors import ValidationError

__all__ = [
    "MixtureModel",
    "splitmix64",
    "uniforms",
    "standard_normals",
    "sample",
    "pdf",
    "log_pdf",
    "quality_proxy",
    "equidistant_means",
    "three_cluster_model",
    "two_cluster_model",
    "isotropic_model",
]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_POW_53 = 2.0 ** -53
_ROW_CHUNK = 1 << 16


def splitmix64(seed, start, count):
    """Outputs ``start .. start+count-1`` of the SplitMix64 stream for ``seed``."""
    seed = np.uint64(int(seed) % (1 << 64))
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = seed + idx * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(seed, start, count, open_at_zero=False):
    """Uniform doubles from the stream; in (0, 1] if ``open_at_zero`` else [0, 1)."""
    top = (splitmix64(seed, start, count) >> np.uint64(11)).astype(np.float64)
    if open_at_zero:
        top += 1.0
    return top * _TWO_POW_53


def standard_normals(seed, offset, start, count):
    """Normals ``start .. start+count-1`` of the Box-Muller sequence beginning at ``offset``."""
    if count == 0:
        return np.empty(0)
    first, last = start // 2, (start + count - 1) // 2
    n_pairs = last - first + 1
    raw = splitmix64(seed, offset + 2 * first, 2 * n_pairs).reshape(n_pairs, 2)
    u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_53
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) * _TWO_POW_53
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    pairs = np.empty((n_pairs, 2))
    pairs[:, 0] = radius * np.cos(theta)
    pairs[:, 1] = radius * np.sin(theta)
    lo = start - 2 * first
    return pairs.ravel()[lo:lo + count]


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Isotropic Gaussian mixture ``sum_c w_c N(mean_c, stddev_c^2 I)``."""

    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    seed: int = 0

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        stddevs = np.asarray(self.stddevs, dtype=np.float64).ravel()
        if not (len(weights) == len(means) == len(stddevs)) or len(weights) == 0:
            raise ValidationError("weights, means and stddevs must describe the same non-empty set of components")
        if np.any(weights <= 0) or np.any(weights > 1):
            raise ValidationError("component weights must lie in (0, 1]")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"component weights sum to {weights.sum()!r}, not 1")
        if not np.all(np.isfinite(stddevs)) or np.any(stddevs <= 0):
            raise ValidationError("stddevs must be positive and finite")
        if not np.all(np.isfinite(means)):
            raise ValidationError("means must be finite")
        for name, value in (("weights", weights), ("means", means), ("stddevs", stddevs)):
            value.flags.writeable = False
            object.__setattr__(self, name, value)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_dims(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return len(self.weights)

    def to_dict(self):
        return {
            "dims": self.n_dims,
            "seed": self.seed,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
        }

    @classmethod
    def from_dict(cls, spec):
        try:
            model = cls(spec["weights"], spec["means"], spec["stddevs"], spec.get("seed", 0))
        except KeyError as exc:
            raise ValidationError(f"mixture spec is missing {exc.args[0]!r}") from None
        if "dims" in spec and spec["dims"] != model.n_dims:
            raise ValidationError(f"mixture spec declares dims={spec['dims']} but means have {model.n_dims}")
        return model

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"mixture spec is not valid JSON: {exc}") from None

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())


def sample(model, n, seed=None):
    """Draw ``n`` rows from ``model``; identical output for identical (model, n, seed).

    ``seed`` defaults to ``model.seed``.
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    n = int(n)
    seed = model.seed if seed is None else int(seed)
    d = model.n_dims
    cum = np.cumsum(model.weights)
    comp = np.searchsorted(cum, uniforms(seed, 0, n), side="right")
    np.minimum(comp, model.n_components - 1, out=comp)
    out = np.empty((n, d))
    for r0 in range(0, n, _ROW_CHUNK):
        r1 = min(r0 + _ROW_CHUNK, n)
        z = standard_normals(seed, n, r0 * d, (r1 - r0) * d).reshape(r1 - r0, d)
        c = comp[r0:r1]
        out[r0:r1] = model.means[c] + model.stddevs[c, None] * z
    return as_latent_matrix(out, "sample")


def log_pdf(model, points):
    """Log mixture density at each row of ``points``."""
    points = np.asarray(points, dtype=np.float64)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != model.n_dims:
        raise ValidationError(f"points have {points.shape[1]} dims, model has {model.n_dims}")
    d = model.n_dims
    var = model.stddevs ** 2
    sq = np.empty((points.shape[0], model.n_components))
    for c, mean in enumerate(model.means):
        diff = points - mean
        sq[:, c] = np.einsum("ij,ij->i", diff, diff)
    log_comp = np.log(model.weights) - 0.5 * d * np.log(2.0 * np.pi * var) - sq / (2.0 * var)
    out = logsumexp(log_comp, axis=1)
    return out[0] if single else out


def pdf(model, points):
    """Mixture probability density at each row of ``points`` (or at one point)."""
    return np.exp(log_pdf(model, points))


def quality_proxy(model, codes):
    """Ground-truth quality of each code: the true mixture density there."""
    codes = as_latent_matrix(codes, "codes")
    return pdf(model, codes)


def equidistant_means(n_components, n_dims, distance):
    """Means on scaled coordinate axes, every pair exactly ``distance`` apart."""
    if n_components > n_dims:
        raise ValidationError("need n_dims >= n_components for axis-aligned equidistant means")
    means = np.zeros((n_components, n_dims))
    means[np.arange(n_components), np.arange(n_components)] = distance / np.sqrt(2.0)
    return means


def three_cluster_model(seed=42, n_dims=16):
    """Weights 0.6/0.3/0.1, unit stddev, means pairwise 10 apart."""
    return MixtureModel([0.6, 0.3, 0.1], equidistant_means(3, n_dims, 10.0), [1.0, 1.0, 1.0], seed)


def two_cluster_model(seed=42, n_dims=16, separation=20.0):
    """A 90/10 pair of unit-stddev clusters ``separation`` apart along the first axis."""
    means = np.zeros((2, n_dims))
    means[1, 0] = separation
    return MixtureModel([0.9, 0.1], means, [1.0, 1.0], seed)


def isotropic_model(seed=42, n_dims=16):
    """Single standard normal component at the origin."""
    return MixtureModel([1.0], np.zeros((1, n_dims)), [1.0], seed)
