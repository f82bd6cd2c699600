"""Latent density score.

For a query code ``z`` and training codes ``Z``::

    D(z, Z) = mean_i exp(-||z - z_i||^2 / (2 sigma^2))

Two implementations are provided. `latent_density_reference` evaluates the
definition literally and exists as an oracle. `latent_density` (and the
reusable `DensityScorer`) use the Gram expansion of squared distances on
query blocks and must agree with the reference to 1e-10 relative.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .embeddings_io import _check_same_dims, as_latent_matrix
from .errors import ConfigurationError

__all__ = [
    "DEFAULT_SIGMA",
    "DEFAULT_CHUNK_ROWS",
    "DensityConfig",
    "DensityScorer",
    "latent_density",
    "latent_density_reference",
    "sigma_sweep",
]

DEFAULT_SIGMA = 20.0
DEFAULT_CHUNK_ROWS = 256
THREADS_ENV = "LATENT_SCOPE_THREADS"


def default_threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        threads = int(value)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV}={value!r} is not an integer") from None
    if threads < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 1, got {threads}")
    return threads


def _check_sigma(sigma):
    sigma = float(sigma)
    if not sigma > 0 or not np.isfinite(sigma):
        raise ConfigurationError(f"sigma must be a positive finite number, got {sigma}")
    return sigma


@dataclass(frozen=True)
class DensityConfig:
    """Kernel bandwidth and blocking parameters.

    ``threads`` only changes speed: query blocks are fixed by
    ``chunk_rows`` and each block is reduced sequentially, so results are
    bit-identical for any thread count.
    """

    sigma: float = DEFAULT_SIGMA
    chunk_rows: int = DEFAULT_CHUNK_ROWS
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sigma", _check_sigma(self.sigma))
        if int(self.chunk_rows) != self.chunk_rows or self.chunk_rows < 1:
            raise ConfigurationError(f"chunk_rows must be a positive integer, got {self.chunk_rows}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ConfigurationError(f"threads must be a positive integer, got {self.threads}")


def latent_density_reference(query, train, config=None):
    """Brute-force density scores.

    Differences are taken coordinate by coordinate and the kernel terms are
    accumulated strictly in ascending training-index order in float64.
    Memory is bounded by processing a few query rows at a time.
    """
    config = config or DensityConfig()
    query = as_latent_matrix(query, "query")
    train = as_latent_matrix(train, "train")
    _check_same_dims(query, train)
    scale = -1.0 / (2.0 * config.sigma ** 2)
    n, d = train.shape
    step = max(1, (1 << 22) // (n * d))
    out = np.empty(query.shape[0])
    for s in range(0, query.shape[0], step):
        diff = query[s:s + step, None, :] - train[None, :, :]
        sq = np.einsum("qnd,qnd->qn", diff, diff)
        terms = np.exp(sq * scale)
        # cumsum is a strictly sequential left-to-right reduction
        out[s:s + step] = np.cumsum(terms, axis=1)[:, -1] / n
    return out


class DensityScorer:
    """Precomputed training-side state for repeated density scoring.

    Construction centres the training codes on their mean and caches their
    squared norms; the per-query cost is then one matrix product against the
    training block. Centring is an isometry, so scores are unchanged, but it
    shrinks the norms entering the Gram expansion and with them the
    cancellation error.

    Parameters
    ----------
    train : array_like, shape (n, d)
    config : DensityConfig, optional
    """

    def __init__(self, train, config=None):
        self.config = config or DensityConfig()
        self.train = as_latent_matrix(train, "train")
        self.center = self.train.mean(axis=0)
        self._centered = np.ascontiguousarray(self.train - self.center)
        self._sq_norms = np.einsum("ij,ij->i", self._centered, self._centered)

    @property
    def n_train(self):
        return self.train.shape[0]

    def _sq_distances(self, block):
        block = block - self.center
        gram = block @ self._centered.T
        gram *= -2.0
        gram += np.einsum("ij,ij->i", block, block)[:, None]
        gram += self._sq_norms[None, :]
        # cancellation can leave tiny negatives
        np.maximum(gram, 0.0, out=gram)
        return gram

    def _score_block(self, block, scales):
        sq = self._sq_distances(block)
        out = np.empty((block.shape[0], len(scales)))
        buf = np.empty_like(sq) if len(scales) > 1 else sq
        for j, scale in enumerate(scales):
            np.multiply(sq, scale, out=buf)
            np.exp(buf, out=buf)
            out[:, j] = buf.sum(axis=1) / self.n_train
        return out

    def score_many(self, query, sigmas, progress=None):
        """Scores for every query row under each bandwidth; shape ``(n_query, len(sigmas))``."""
        query = as_latent_matrix(query, "query")
        _check_same_dims(query, self.train)
        sigmas = [_check_sigma(s) for s in sigmas]
        if not sigmas:
            raise ConfigurationError("at least one sigma is required")
        scales = [-1.0 / (2.0 * s * s) for s in sigmas]
        nq = query.shape[0]
        step = self.config.chunk_rows
        bounds = [(s, min(s + step, nq)) for s in range(0, nq, step)]
        out = np.empty((nq, len(sigmas)))

        def work(bound):
            s, e = bound
            out[s:e] = self._score_block(query[s:e], scales)
            return e - s

        done = 0
        # BLAS stays single-threaded so that parallelism lives only across
        # query blocks; per-block arithmetic never depends on thread count
        with threadpool_limits(limits=1, user_api="blas"):
            if self.config.threads == 1 or len(bounds) == 1:
                results = map(work, bounds)
                for n in results:
                    done += n
                    if progress:
                        progress(done, nq)
            else:
                with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                    for n in pool.map(work, bounds):
                        done += n
                        if progress:
                            progress(done, nq)
        return out

    def score(self, query, progress=None):
        """Density scores at the configured sigma, one per query row."""
        return self.score_many(query, [self.config.sigma], progress=progress)[:, 0]


def latent_density(query, train, config=None):
    """Latent density score of every query row against ``train``.

    Parameters
    ----------
    query : array_like, shape (m, d)
    train : array_like, shape (n, d)
    config : DensityConfig, optional
        Defaults to sigma=20, chunk_rows=256, one thread.

    Returns
    -------
    numpy.ndarray, shape (m,)
        Scores in [0, 1]. Terms whose exponent underflows contribute 0.
    """
    config = config or DensityConfig()
    query = as_latent_matrix(query, "query")
    train = as_latent_matrix(train, "train")
    _check_same_dims(query, train)
    return DensityScorer(train, config).score(query)


def sigma_sweep(query, train, sigmas, config=None):
    """Scores for each sigma in ``sigmas``; column ``j`` uses ``sigmas[j]``.

    Squared distances are computed once per query block and reused, which
    gives the same numbers as calling `latent_density` per sigma.
    """
    config = config or DensityConfig()
    query = as_latent_matrix(query, "query")
    train = as_latent_matrix(train, "train")
    _check_same_dims(query, train)
    sigmas = list(sigmas)
    if not sigmas:
        raise ConfigurationError("sigmas must be non-empty")
    return DensityScorer(train, config).score_many(query, sigmas)
