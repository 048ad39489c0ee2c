import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altsfda.data import (
    AugmentSpec, constant_expansion_holds, expansion_check, gen_gaussian_mixture, gen_two_moons,
    n_masked, neighbour_matrix, strong_aug, weak_aug,
)

EIGHT = np.array([[v, 0.0] for v in (0, 1, 2, 3, 10, 11, 12, 13)])


class TestTwoMoons:
    def test_rotation_zero_is_source(self):
        a = gen_two_moons(50, 0.1, 0.0, seed=3)
        b = gen_two_moons(50, 0.1, 0.0, seed=3)
        assert a.inputs.tobytes() == b.inputs.tobytes()

    def test_full_turn(self):
        a = gen_two_moons(50, 0.1, 0.0, seed=3)
        b = gen_two_moons(50, 0.1, 360.0, seed=3)
        np.testing.assert_allclose(b.inputs, a.inputs, atol=1e-9)

    def test_noiseless_arcs(self):
        ds = gen_two_moons(100, 0.0, seed=1)
        up, lo = ds.inputs[ds.labels == 0], ds.inputs[ds.labels == 1]
        np.testing.assert_allclose((up ** 2).sum(1), 1.0, atol=1e-12)
        assert np.all(up[:, 1] >= 0)
        np.testing.assert_allclose(((1 - lo[:, 0]) ** 2 + (0.5 - lo[:, 1]) ** 2), 1.0, atol=1e-12)
        assert np.all(lo[:, 1] <= 0.5)

    def test_rotation_about_centroid(self):
        a = gen_two_moons(80, 0.1, 0.0, seed=2)
        b = gen_two_moons(80, 0.1, 90.0, seed=2)
        np.testing.assert_allclose(b.inputs.mean(0), a.inputs.mean(0), atol=1e-12)
        c = a.inputs.mean(0)
        d = a.inputs - c
        np.testing.assert_allclose(b.inputs - c, np.column_stack([-d[:, 1], d[:, 0]]), atol=1e-12)

    def test_balanced_labels(self):
        ds = gen_two_moons(7, seed=0)
        assert np.bincount(ds.labels).tolist() == [7, 7]

    @pytest.mark.parametrize("kw", [dict(n_per_class=0), dict(n_per_class=5, noise_sd=-1.0)])
    def test_bad_args(self, kw):
        with pytest.raises(ValueError):
            gen_two_moons(**kw)

    def test_unlabeled_is_read_only(self):
        X = gen_two_moons(5, seed=0).unlabeled()
        with pytest.raises(ValueError):
            X[0, 0] = 1.0

    def test_csv(self, tmp_path):
        ds = gen_two_moons(4, seed=0)
        ds.to_csv(tmp_path / "d.csv")
        rows = list(csv.reader(open(tmp_path / "d.csv")))
        assert rows[0] == ["x0", "x1", "label", "domain"]
        assert len(rows) == 9
        assert float(rows[1][0]) == ds.inputs[0, 0]


class TestGaussianMixture:
    def test_null_shift_same_distribution(self):
        src, tgt = gen_gaussian_mixture(3, 4000, 3.0, seed=5)
        for c in range(3):
            a, b = src.inputs[src.labels == c], tgt.inputs[tgt.labels == c]
            np.testing.assert_allclose(a.mean(0), b.mean(0), atol=0.1)
            np.testing.assert_allclose(np.cov(a.T), np.cov(b.T), atol=0.1)

    def test_separable_limit(self):
        src, tgt = gen_gaussian_mixture(4, 50, class_separation=100.0, seed=0)
        d = ((tgt.inputs[:, None] - src.inputs[None]) ** 2).sum(-1)
        assert np.all(src.labels[d.argmin(1)] == tgt.labels)

    def test_deterministic_bytes(self):
        a = gen_gaussian_mixture(3, 100, seed=9, target_rotation=20, target_shift_vector=[1, -1])
        b = gen_gaussian_mixture(3, 100, seed=9, target_rotation=20, target_shift_vector=[1, -1])
        for x, y in zip(a, b):
            assert x.inputs.tobytes() == y.inputs.tobytes()
            assert x.labels.tobytes() == y.labels.tobytes()

    def test_shift_moves_means(self):
        src, tgt = gen_gaussian_mixture(3, 3000, seed=1, target_shift_vector=[2.0, 0.0])
        np.testing.assert_allclose(tgt.inputs.mean(0) - src.inputs.mean(0), [2.0, 0.0], atol=0.1)

    def test_one_class(self):
        with pytest.raises(ValueError):
            gen_gaussian_mixture(1, 10)


class TestAugment:
    def test_weak_zero_identity(self):
        x = np.array([0.3, -1.2, 5.0])
        out = weak_aug(x, AugmentSpec(weak_sd=0.0), np.random.default_rng(0))
        assert out.tobytes() == x.tobytes()

    @pytest.mark.parametrize("frac,dim", [(0.1, 2), (0.1, 10), (0.25, 10), (0.5, 7), (0.9, 20)])
    def test_mask_count(self, frac, dim):
        spec = AugmentSpec(strong_sd=0.0, mask_frac=frac, scale_low=1.0, scale_high=1.0)
        X = np.ones((30, dim))
        out = strong_aug(X, spec, np.random.default_rng(1))
        expected = int(np.floor(frac * dim + 0.5))
        assert n_masked(dim, frac) == expected
        assert np.all((out == 0).sum(1) == expected)

    def test_determinism(self):
        spec = AugmentSpec()
        X = np.random.default_rng(0).standard_normal((10, 4))
        a = strong_aug(X, spec, np.random.default_rng(7)), weak_aug(X, spec, np.random.default_rng(7))
        b = strong_aug(X, spec, np.random.default_rng(7)), weak_aug(X, spec, np.random.default_rng(7))
        assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()

    def test_strong_null(self):
        spec = AugmentSpec(weak_sd=0.0, strong_sd=0.0, mask_frac=0.0, scale_low=1.0, scale_high=1.0)
        x = np.array([1.5, -0.25, 3.0])
        assert strong_aug(x, spec, np.random.default_rng(0)).tobytes() == x.tobytes()

    @pytest.mark.parametrize("f", [1.0, 1.5])
    def test_full_mask_rejected(self, f):
        with pytest.raises(ValueError):
            AugmentSpec(mask_frac=f)

    def test_scale_range(self):
        spec = AugmentSpec(strong_sd=0.0, mask_frac=0.0, scale_low=0.5, scale_high=0.7)
        out = strong_aug(np.ones((200, 3)), spec, np.random.default_rng(0))
        assert out.min() >= 0.5 and out.max() <= 0.7
        # one scale per row
        assert np.all(out.std(1) < 1e-15)

    def test_fitted_uses_feature_std(self):
        X = np.column_stack([np.arange(10.0), 100 * np.arange(10.0)])
        spec = AugmentSpec(weak_sd=0.1).fitted(X)
        diffs = weak_aug(np.zeros((5000, 2)), spec, np.random.default_rng(0))
        ratio = diffs[:, 1].std() / diffs[:, 0].std()
        assert ratio == pytest.approx(100, rel=0.05)

    def test_weak_weaker_than_strong_by_default(self):
        s = AugmentSpec()
        assert s.weak_sd < s.strong_sd


class TestExpansion:
    def test_whole_set(self):
        res = expansion_check(EIGHT, range(8), 0.5)
        assert res.exterior_mass == 0.0 and res.exterior.size == 0

    def test_isolated_points(self):
        for S in [(0,), (1, 5), (2, 3, 7)]:
            assert expansion_check(EIGHT, S, 0.49).exterior_mass == 0.0

    def test_collinear_four(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        res = expansion_check(X, [0], 0.5)
        assert res.exterior.tolist() == [1]
        assert res.exterior_mass == 0.25

    def test_eight_point_hand_enumeration(self):
        # neighbours at 2r = 1 are the adjacent integers inside each block of four
        cases = {
            (0,): [1], (2,): [1, 3], (3,): [2], (3, 4): [2, 5],
            (0, 1, 2, 3): [], (1, 6): [0, 2, 5, 7], (0, 7): [1, 6],
        }
        for S, ext in cases.items():
            res = expansion_check(EIGHT, S, 0.5)
            assert res.exterior.tolist() == ext
            assert res.exterior_mass == len(ext) / 8
            assert res.subset_mass == len(S) / 8

    def test_constant_expansion_instance(self):
        # S = one block of four has no exterior, so any xi > 0 with q <= 1/2 fails
        holds, S = constant_expansion_holds(EIGHT, 0.5, 0.5, 0.25)
        assert not holds
        assert expansion_check(EIGHT, S, 0.5).exterior_mass < 0.25
        # a single chain of eight points expands every subset up to half mass
        chain = np.array([[v, 0.0] for v in range(8)])
        holds, _ = constant_expansion_holds(chain, 0.5, 0.5, 0.125)
        assert holds

    def test_requirement_reported(self):
        res = expansion_check(EIGHT, [0], 0.5, q=0.1, xi=0.5)
        assert res.required == 0.125 and res.satisfied

    def test_empty_subset(self):
        with pytest.raises(ValueError):
            expansion_check(EIGHT, [], 0.5)

    def test_too_many_points(self):
        with pytest.raises(ValueError):
            constant_expansion_holds(np.zeros((17, 2)), 0.1, 0.5, 0.5)

    @settings(max_examples=40)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.0))
    def test_symmetric_and_matches_pairs(self, seed, r):
        X = np.random.default_rng(seed).uniform(0, 2, (9, 2))
        A = neighbour_matrix(X, r)
        assert np.array_equal(A, A.T)
        for i, j in itertools.product(range(9), repeat=2):
            assert A[i, j] == (np.hypot(*(X[i] - X[j])) <= 2 * r)
