import itertools
import math

import numpy as np
import pytest
from scipy.stats import rankdata

from spotvol import (
    adf_test,
    kmeans2,
    mwu_test,
    pacf,
    pacf_durbin_levinson,
    pearson,
    polyfit_cubic,
)
from spotvol.errors import (
    DegenerateData,
    EmptySample,
    LagTooLarge,
    RankDeficient,
    SeriesTooShort,
)
from spotvol.stats import MwuMethod, Stationarity


# ---------------------------------------------------------------- ADF

def test_adf_random_walks_fail_to_reject():
    hits = 0
    for seed in range(5):
        rng = np.random.default_rng(1000 + seed)
        walk = np.cumsum(rng.standard_normal(500))
        if adf_test(walk).p_value > 0.05:
            hits += 1
    assert hits >= 4


def test_adf_white_noise_rejects():
    hits = 0
    for seed in range(5):
        rng = np.random.default_rng(2000 + seed)
        noise = rng.standard_normal(500)
        if adf_test(noise).p_value < 0.01:
            hits += 1
    assert hits >= 4


def test_adf_trend_stress_no_crash():
    rng = np.random.default_rng(0)
    y = np.linspace(0, 10, 300) + 1e-3 * rng.standard_normal(300)
    res = adf_test(y)
    assert math.isfinite(res.statistic)
    assert 0.0 <= res.p_value <= 1.0


def test_adf_constant_shift_invariance():
    rng = np.random.default_rng(4)
    y = np.cumsum(rng.standard_normal(400))
    a = adf_test(y)
    b = adf_test(y + 1e4)
    assert abs(a.statistic - b.statistic) < 1e-8
    assert a.n_lags_used == b.n_lags_used


def test_adf_conclusion_and_errors():
    rng = np.random.default_rng(9)
    res = adf_test(rng.standard_normal(300))
    assert res.conclusion is Stationarity.STATIONARY
    assert (res.p_value < res.alpha) == (res.conclusion is Stationarity.STATIONARY)
    with pytest.raises(SeriesTooShort):
        adf_test(np.ones(10))


# ---------------------------------------------------------------- PACF

def test_pacf_white_noise_within_band():
    # the 2/sqrt(n) band covers ~95% of lags; aggregate over realizations
    # so the binomial wobble of a single series cannot flip the verdict
    inside = total = 0
    for seed in (21, 22, 23, 24, 25):
        rng = np.random.default_rng(seed)
        y = rng.standard_normal(1000)
        vals = pacf(y, 20)
        band = 2.0 / math.sqrt(len(y))
        inside += int(np.sum(np.abs(vals[1:]) < band))
        total += 20
    assert inside / total >= 0.89


def test_pacf_ar1_cutoff():
    rng = np.random.default_rng(35)
    n = 2000
    y = np.empty(n)
    y[0] = rng.standard_normal()
    for t in range(1, n):
        y[t] = 0.6 * y[t - 1] + rng.standard_normal()
    vals = pacf(y, 10)
    assert 0.55 < vals[1] < 0.65
    assert np.all(np.abs(vals[2:]) < 0.05)


def test_pacf_lag1_equals_pearson():
    rng = np.random.default_rng(5)
    y = np.cumsum(rng.standard_normal(300))
    vals = pacf(y, 3)
    r, _ = pearson(y[1:], y[:-1])
    assert abs(vals[1] - r) < 1e-10


def test_pacf_agrees_with_durbin_levinson():
    rng = np.random.default_rng(14)
    n = 1500
    y = np.empty(n)
    y[0] = rng.standard_normal()
    for t in range(1, n):
        y[t] = 0.5 * y[t - 1] + rng.standard_normal()
    a = pacf(y, 12)
    b = pacf_durbin_levinson(y, 12)
    assert np.max(np.abs(a[1:] - b[1:])) < 0.01


def test_pacf_lag_too_large():
    with pytest.raises(LagTooLarge):
        pacf(np.arange(40.0), 10)
    with pytest.raises(LagTooLarge):
        pacf_durbin_levinson(np.arange(40.0), 10)


# ---------------------------------------------------------------- MWU

def test_mwu_paper_null_parameters():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(144)
    b = rng.standard_normal(144)
    res = mwu_test(a, b)
    assert res.null_mean == 10368.0
    assert res.null_sd == pytest.approx(math.sqrt(144 * 144 * 289 / 12.0))
    assert res.null_sd == pytest.approx(706.68, abs=0.01)
    assert res.method is MwuMethod.NORMAL_APPROX


def test_mwu_identical_samples_half():
    rng = np.random.default_rng(8)
    a = rng.standard_normal(20)
    res = mwu_test(a, a.copy(), exact_threshold=0)
    assert res.p_value == pytest.approx(0.5, abs=0.05)


def test_mwu_exact_enumeration_extremes():
    low, high = [1.0, 2.0, 3.0], [4.0, 5.0, 6.0]
    res = mwu_test(low, high)
    assert res.method is MwuMethod.EXACT_PERMUTATION
    assert res.u_statistic == 0.0
    assert res.p_value == 1.0
    rev = mwu_test(high, low)
    assert rev.u_statistic == 9.0
    assert rev.p_value == pytest.approx(1.0 / 20.0)


def test_mwu_exact_enumeration_oracle():
    # independent enumeration of the permutation null
    rng = np.random.default_rng(77)
    a, b = rng.standard_normal(5), rng.standard_normal(4)
    res = mwu_test(a, b)
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    obs = ranks[:5].sum()
    count = sum(1 for c in itertools.combinations(range(9), 5)
                if ranks[list(c)].sum() >= obs - 1e-9)
    assert res.p_value == pytest.approx(count / math.comb(9, 5))


def test_mwu_normal_vs_exact_agreement():
    rng = np.random.default_rng(99)
    deltas = []
    for _ in range(10):
        a = rng.standard_normal(8)
        b = rng.standard_normal(8)
        exact = mwu_test(a, b, exact_threshold=12)
        approx = mwu_test(a, b, exact_threshold=0)
        assert exact.method is MwuMethod.EXACT_PERMUTATION
        assert approx.method is MwuMethod.NORMAL_APPROX
        deltas.append(abs(exact.p_value - approx.p_value))
    assert max(deltas) < 0.02


def test_mwu_monte_carlo_branch():
    rng = np.random.default_rng(13)
    a = rng.standard_normal(12)
    b = rng.standard_normal(14)  # C(26,12) too large to enumerate
    res = mwu_test(a, b, exact_threshold=12, n_permutations=20000, seed=5)
    assert res.method is MwuMethod.EXACT_PERMUTATION
    approx = mwu_test(a, b, exact_threshold=0)
    assert abs(res.p_value - approx.p_value) < 0.03
    again = mwu_test(a, b, exact_threshold=12, n_permutations=20000, seed=5)
    assert res.p_value == again.p_value


def test_mwu_empty():
    with pytest.raises(EmptySample):
        mwu_test([], [1.0])


# ---------------------------------------------------------------- K-means

def test_kmeans_separated_blobs():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((40, 2))
    b = rng.standard_normal((40, 2)) + 100.0
    points = np.vstack([a, b])
    res = kmeans2(points, seed=0)
    assert np.all(res.labels[:40] == 0)
    assert np.all(res.labels[40:] == 1)
    assert res.centroids[0][0] < res.centroids[1][0]


def test_kmeans_identical_points():
    with pytest.raises(DegenerateData):
        kmeans2(np.ones((10, 2)), seed=0)
    with pytest.raises(DegenerateData):
        kmeans2(np.ones((3, 2)), seed=0)


def test_kmeans_linear_cluster_correlation():
    x = np.linspace(0, 1, 30)
    linear = np.column_stack([x, 2.0 * x + 1.0])
    far = np.column_stack([x + 100.0, -3.0 * (x + 100.0)])
    res = kmeans2(np.vstack([linear, far]), seed=1)
    assert abs(res.correlations[0] - 1.0) < 1e-12
    assert abs(res.correlations[1] + 1.0) < 1e-12


def test_kmeans_deterministic():
    rng = np.random.default_rng(6)
    pts = rng.standard_normal((60, 2))
    a = kmeans2(pts, seed=9)
    b = kmeans2(pts, seed=9)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.centroids, b.centroids)


# ---------------------------------------------------------------- polyfit

def test_polyfit_exact_cubic():
    x = np.linspace(-3, 3, 25)
    y = 2.0 + 3.0 * x - x ** 2 + 0.5 * x ** 3
    coeffs = polyfit_cubic(x, y)
    assert np.allclose(coeffs, [2.0, 3.0, -1.0, 0.5], atol=1e-8)


def test_polyfit_constant():
    x = np.linspace(0, 5, 12)
    coeffs = polyfit_cubic(x, np.full(12, 7.5))
    assert coeffs[0] == pytest.approx(7.5, abs=1e-9)
    assert np.allclose(coeffs[1:], 0.0, atol=1e-9)


def test_polyfit_residual_orthogonality():
    rng = np.random.default_rng(11)
    x = rng.uniform(-20, 35, 200)
    y = rng.standard_normal(200) * 50 + 0.01 * x ** 3
    coeffs = polyfit_cubic(x, y)
    V = np.vander(x, 4, increasing=True)
    resid = y - V @ coeffs
    scaled = V / np.linalg.norm(V, axis=0)
    assert np.max(np.abs(scaled.T @ resid)) < 1e-6


def test_polyfit_rank_deficient():
    with pytest.raises(RankDeficient):
        polyfit_cubic(np.array([1.0, 1.0, 2.0, 2.0, 3.0]), np.ones(5))


# ---------------------------------------------------------------- pearson

def test_pearson_flags_zero_variance():
    r, flag = pearson(np.ones(10), np.arange(10.0))
    assert r == 0.0 and flag
    r2, flag2 = pearson(np.arange(10.0), 2 * np.arange(10.0))
    assert abs(r2 - 1.0) < 1e-12 and not flag2
