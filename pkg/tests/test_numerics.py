import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from altsfda.numerics import (
    cosine_similarity, cross_entropy, l2_normalize, pca_project_2d, softmax, spearman_rank_corr,
)

finite = st.floats(-50, 50, allow_nan=False)


def mp_softmax(xs):
    mpmath.mp.dps = 40
    e = [mpmath.e ** mpmath.mpf(x) for x in xs]
    s = sum(e)
    return [float(v / s) for v in e]


class TestSoftmax:
    def test_symmetric_pair(self):
        np.testing.assert_array_equal(softmax([0.0, 0.0]), [0.5, 0.5])

    @pytest.mark.parametrize("x", [-1e3, 0.0, 3.7, 1e3])
    def test_constant_logits(self, x):
        np.testing.assert_allclose(softmax([x] * 4), [0.25] * 4, atol=1e-15)

    def test_against_high_precision(self):
        expected = mp_softmax([1, 2])
        np.testing.assert_allclose(softmax([1.0, 2.0]), expected, atol=1e-15)
        np.testing.assert_allclose(softmax([1.0, 2.0]), [0.268941, 0.731059], atol=1e-6)

    def test_large_logits_stay_finite(self):
        p = softmax([1000.0, 0.0])
        assert np.all(np.isfinite(p)) and p[0] == 1.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            softmax([0.0, np.nan])

    @given(arrays(np.float64, st.integers(2, 8), elements=finite), finite)
    def test_simplex_and_shift_invariance(self, z, shift):
        p = softmax(z)
        assert abs(p.sum() - 1) < 1e-9 and p.min() >= 0
        np.testing.assert_allclose(softmax(z + shift), p, atol=1e-9)
        assert p[np.argmax(z)] == p.max()


class TestNormalize:
    def test_345(self):
        np.testing.assert_allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-15)

    def test_idempotent(self):
        u = l2_normalize([1.0, 2.0, -2.0])
        np.testing.assert_allclose(l2_normalize(u), u, atol=1e-15)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            l2_normalize([0.0, 0.0])

    def test_zero_row_is_named(self):
        with pytest.raises(ValueError, match="row 1"):
            l2_normalize(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestCosine:
    def test_self(self):
        assert cosine_similarity([0.3, -2.0], [0.3, -2.0]) == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_diagonal(self):
        assert cosine_similarity([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert cosine_similarity([1, 1], [1, 0]) == pytest.approx(0.707107, abs=1e-6)

    def test_antiparallel(self):
        assert cosine_similarity([1, 2], [-2, -4]) == pytest.approx(-1.0, abs=1e-15)

    def test_zero(self):
        with pytest.raises(ValueError):
            cosine_similarity([0, 0], [1, 0])

    @given(arrays(np.float64, 3, elements=st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3)),
           arrays(np.float64, 3, elements=st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3)))
    def test_symmetric_and_bounded(self, u, v):
        a = cosine_similarity(u, v)
        assert a == cosine_similarity(v, u)
        assert -1.0 <= a <= 1.0


class TestCrossEntropy:
    def test_perfect(self):
        assert cross_entropy(0, [1.0, 0.0]) == 0.0

    def test_hard(self):
        assert cross_entropy(0, [0.8, 0.2]) == pytest.approx(-math.log(0.8), abs=1e-15)
        assert cross_entropy(0, [0.8, 0.2]) == pytest.approx(0.223144, abs=1e-6)

    def test_soft(self):
        assert cross_entropy([0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.693147, abs=1e-6)

    def test_floor(self):
        assert cross_entropy(1, [1.0, 0.0]) == pytest.approx(-math.log(1e-12))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cross_entropy([0.5, 0.5], [0.2, 0.3, 0.5])

    @given(arrays(np.float64, 4, elements=finite), st.integers(0, 3))
    def test_lower_bound(self, z, y):
        p = softmax(z)
        ce = cross_entropy(y, p)
        assert ce >= -math.log(p.max()) - 1e-12
        if np.argmax(p) == y:
            assert ce == pytest.approx(-math.log(p.max()), abs=1e-12)


class TestSpearman:
    def test_monotone(self):
        assert spearman_rank_corr([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_reversed(self):
        assert spearman_rank_corr([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_rank_difference_formula(self):
        a, b = [1, 2, 3, 4], [1, 3, 2, 4]
        n = 4
        d2 = sum((x - y) ** 2 for x, y in zip(a, b))
        expected = 1 - 6 * d2 / (n * (n * n - 1))
        assert expected == pytest.approx(0.8)
        assert spearman_rank_corr(a, b) == pytest.approx(expected, abs=1e-12)

    def test_constant_is_error(self):
        with pytest.raises(ValueError):
            spearman_rank_corr([1, 1, 1], [1, 2, 3])

    def test_ties_average_ranks(self):
        # ranks (1.5, 1.5, 3) vs (1, 2, 3): pearson on ranks
        r = spearman_rank_corr([5, 5, 7], [1, 2, 3])
        ra, rb = np.array([1.5, 1.5, 3]), np.array([1.0, 2, 3])
        expected = np.corrcoef(ra, rb)[0, 1]
        assert r == pytest.approx(expected, abs=1e-12)

    @given(arrays(np.float64, st.integers(2, 20), elements=finite, unique=True))
    def test_self_correlation(self, a):
        assert spearman_rank_corr(a, a) == pytest.approx(1.0, abs=1e-12)


class TestPCA:
    def test_planar_data_keeps_distances(self):
        rng = np.random.default_rng(0)
        basis, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        coeffs = rng.standard_normal((30, 2)) * [3.0, 1.0]
        X = coeffs @ basis.T + rng.standard_normal(5)
        Y = pca_project_2d(X)
        dX = np.linalg.norm(X[:, None] - X[None], axis=-1)
        dY = np.linalg.norm(Y[:, None] - Y[None], axis=-1)
        np.testing.assert_allclose(dY, dX, atol=1e-6)

    def test_isotropic_shares_equal(self):
        # vertices of a regular polygon: exactly isotropic second moments
        ang = 2 * np.pi * np.arange(12) / 12
        X = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(12)])
        _, var = pca_project_2d(X, return_variance=True)
        assert var[0] == pytest.approx(var[1], rel=1e-9)

    def test_rank_one(self):
        t = np.linspace(-1, 1, 20)
        X = np.outer(t, [1.0, 2.0, -1.0])
        _, var = pca_project_2d(X, return_variance=True)
        assert var[1] < 1e-20 * max(var[0], 1)

    def test_ordered_by_variance(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((200, 4)) * [0.1, 5.0, 1.0, 0.5]
        Y = pca_project_2d(X)
        assert Y[:, 0].var() >= Y[:, 1].var()

    def test_needs_two_columns(self):
        with pytest.raises(ValueError):
            pca_project_2d(np.ones((5, 1)))
