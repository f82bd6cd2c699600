import numpy as np
import pytest

from latent_scope import synthetic
from latent_scope.analysis import (
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
from latent_scope.density import DensityConfig, latent_density
from latent_scope.errors import ConfigurationError, NumericDomainError, ValidationError
from latent_scope.manifold import build_manifold, precision_recall, realism_scores


def test_rank_examples():
    assert rank_by_score([0.1, 0.9, 0.5]).order.tolist() == [1, 2, 0]
    assert rank_by_score([0.5, 0.5]).order.tolist() == [0, 1]
    assert select(rank_by_score([0.2, 0.7]), "top", 1) == [1]


def test_rank_infinity_first_and_ties():
    r = rank_by_score([1.0, np.inf, 3.0, np.inf, 1.0])
    assert r.order.tolist() == [1, 3, 2, 0, 4]


def test_rank_rejects():
    with pytest.raises(ValidationError):
        rank_by_score([])
    with pytest.raises(ValidationError):
        rank_by_score([0.1, np.nan])


def test_select_examples():
    r = rank_by_score([0.1, 0.9, 0.5])
    assert select(r, "top", 2) == [1, 2]
    assert select(r, "bottom", 1) == [0]
    r5 = rank_by_score([5.0, 4.0, 3.0, 2.0, 1.0])
    assert select(r5, "middle", 1) == [2]
    assert select(r5, "middle", 2) == [1, 2]
    assert select(r5, "middle", 5) == [0, 1, 2, 3, 4]
    assert select(r5, "bottom", 2) == [4, 3]
    with pytest.raises(ValidationError):
        select(r, "top", 4)
    with pytest.raises(ValidationError):
        select(r, "sideways", 1)


def test_middle_window_contains_center():
    r = rank_by_score(np.arange(100.0)[::-1])
    picked = select(r, "middle", 6)
    assert picked == [47, 48, 49, 50, 51, 52]


def test_truncate_examples():
    codes = np.array([[2.0, 4.0], [-1.0, 3.0]])
    mean = np.array([0.5, -0.25])
    np.testing.assert_array_equal(truncate(codes, mean, 0.0), [mean, mean])
    np.testing.assert_array_equal(truncate(codes, mean, 1.0), codes)
    np.testing.assert_array_equal(truncate([[2.0, 4.0]], [0.0, 0.0], 0.5), [[1.0, 2.0]])
    for bad in (-0.1, 1.5):
        with pytest.raises(ConfigurationError):
            truncate(codes, mean, bad)
    with pytest.raises(ValidationError):
        truncate(codes, [0.0], 0.5)


def test_mean_code_examples():
    np.testing.assert_array_equal(mean_code([[3.0, -1.0]]), [3.0, -1.0])
    np.testing.assert_array_equal(mean_code([[0.0, 0.0], [2.0, 2.0]]), [1.0, 1.0])
    pts = np.random.default_rng(0).normal(size=(50, 4))
    np.testing.assert_allclose(mean_code(np.vstack([pts, -pts])), 0.0, atol=1e-12)


def test_shift_codes():
    out = shift_codes([[1.0, 1.0]], [0.0, 2.0], -0.5)
    np.testing.assert_array_equal(out, [[1.0, 0.0]])


def test_edit_sweep_drops_away_from_data(rng):
    train = rng.normal(size=(300, 3))
    codes = train[:5]
    scores = edit_sweep(codes, train, [1.0, 0.0, 0.0], [0.0, 3.0, 6.0], DensityConfig(sigma=1.0))
    assert scores.shape == (5, 3)
    np.testing.assert_array_equal(scores[:, 0], latent_density(codes, train, DensityConfig(sigma=1.0)))


def test_truncation_sweep_single_code():
    z = [[0.3, 0.9]]
    assert truncation_sweep(z, z, [0.0, 0.5, 1.0]) == [1.0, 1.0, 1.0]


def test_truncation_sweep_isotropic():
    model = synthetic.isotropic_model(seed=42, n_dims=8)
    train = synthetic.sample(model, 2000, seed=42)
    codes = synthetic.sample(model, 300, seed=43)
    sweep = truncation_sweep(codes, train, [0.0, 0.5, 1.0], DensityConfig(sigma=2.0))
    assert sweep[0] == max(sweep)
    assert sweep[0] > sweep[1] > sweep[2]


def test_topk_curve_endpoint_equals_whole_set(rng):
    real = rng.normal(size=(80, 3))
    fake = rng.normal(loc=0.5, size=(60, 3))
    ranking = rank_by_score(latent_density(fake, real, DensityConfig(sigma=1.0)))
    points = topk_metric_curve(fake, real, ranking, [10, 30, 60], k_nn=3)
    assert [p.top_k for p in points] == [10, 30, 60]
    assert (points[-1].precision, points[-1].recall) == precision_recall(fake, real, 3)
    realism = realism_scores(fake, build_manifold(real, 3))
    assert points[-1].mean_realism == pytest.approx(realism.mean(), rel=1e-12)
    assert points[-1].n_infinite_realism == 0


def test_topk_curve_excludes_infinite_realism():
    real = np.arange(6.0).reshape(-1, 1)
    fake = np.array([[0.0], [0.5], [2.2], [7.0]])
    ranking = rank_by_score([4.0, 3.0, 2.0, 1.0])
    (point,) = topk_metric_curve(fake, real, ranking, [4], k_nn=1)
    assert point.n_infinite_realism == 1
    finite = realism_scores(fake[1:], build_manifold(real, 1))
    assert point.mean_realism == pytest.approx(finite.mean())


def test_topk_curve_directions_on_mixture():
    model = synthetic.three_cluster_model(seed=42, n_dims=8)
    real = synthetic.sample(model, 3000, seed=42)
    fake = synthetic.sample(model, 600, seed=43)
    scores = latent_density(fake, real, DensityConfig(sigma=1.0))
    ranking = rank_by_score(scores)
    top, full = topk_metric_curve(fake, real, ranking, [60, 600], k_nn=3)
    assert top.precision >= full.precision
    assert full.recall >= top.recall
    realism = realism_scores(fake, build_manifold(real, 3))
    assert realism[select(ranking, "top", 60)].mean() >= realism[select(ranking, "bottom", 60)].mean()


def test_topk_curve_validation(rng):
    real = rng.normal(size=(20, 2))
    fake = rng.normal(size=(10, 2))
    ranking = rank_by_score(np.arange(10.0))
    with pytest.raises(ConfigurationError):
        topk_metric_curve(fake, real, ranking, [8, 5])
    with pytest.raises(ConfigurationError):
        topk_metric_curve(fake, real, ranking, [5, 11])
    with pytest.raises(ConfigurationError):
        topk_metric_curve(fake, real, ranking, [3, 5], k_nn=3)


def test_sigma_recall_full_fraction_is_sigma_free(rng):
    real = rng.normal(size=(100, 3))
    fake = rng.normal(size=(50, 3))
    recalls = sigma_recall_analysis(fake, real, [0.1, 1.0, 20.0], 1.0)
    assert recalls[0] == recalls[1] == recalls[2]
    with pytest.raises(ConfigurationError):
        sigma_recall_analysis(fake, real, [1.0], 0.0)


def test_sigma_recall_two_cluster_direction():
    model = synthetic.two_cluster_model(seed=42)
    real = synthetic.sample(model, 10000, seed=42)
    fake = synthetic.sample(model, 2000, seed=43)
    small, large = sigma_recall_analysis(fake, real, [1.0, 20.0], 0.2)
    assert small >= large


def test_sigma_recall_single_cluster_flat():
    model = synthetic.isotropic_model(seed=42)
    real = synthetic.sample(model, 10000, seed=42)
    fake = synthetic.sample(model, 2000, seed=43)
    small, large = sigma_recall_analysis(fake, real, [1.0, 20.0], 0.2)
    assert abs(small - large) <= 0.05


def test_rank_correlation_examples():
    assert rank_correlation([1, 2, 3], [10, 20, 30]) == 1.0
    assert rank_correlation([1, 2, 3], [30, 20, 10]) == -1.0
    # d = (1, -1, 1, -1), 1 - 6 * 4 / (4 * 15)
    assert rank_correlation([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6, abs=1e-15)


def test_rank_correlation_ties_match_scipy():
    from scipy.stats import spearmanr

    a = [1, 2, 2, 3, 5, 5, 5]
    b = [3, 1, 4, 1, 5, 9, 2]
    assert rank_correlation(a, b) == pytest.approx(spearmanr(a, b).statistic, rel=1e-12)


def test_rank_correlation_errors():
    with pytest.raises(ValidationError):
        rank_correlation([1, 2], [1, 2, 3])
    with pytest.raises(NumericDomainError):
        rank_correlation([1, 1, 1], [1, 2, 3])
