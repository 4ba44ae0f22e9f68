"""Generators, the pool/subsample protocol, corruption, and CSV persistence."""

import numpy as np
import pytest

from c2m import datasets
from c2m.errors import C2mError, DataFormatError


class TestBlobs:
    def test_zero_spread_puts_points_on_centers(self):
        ds = datasets.gen_blobs(4, centers=[(0.0, 0.0), (10.0, 10.0)], spread=0.0, seed=1)
        np.testing.assert_array_equal(ds.x, [[0, 0], [0, 0], [10, 10], [10, 10]])
        np.testing.assert_array_equal(ds.labels, [0, 0, 1, 1])

    def test_same_seed_is_identical(self):
        a = datasets.gen_blobs(50, k=4, seed=123)
        b = datasets.gen_blobs(50, k=4, seed=123)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_points_stay_within_gaussian_tail_bound(self):
        # max |offset| over n=200*2 coords and many seeds; P(any > 6 sigma) < 1e-6
        for seed in range(40):
            ds = datasets.gen_blobs(200, k=3, spread=1.0, seed=seed)
            centers = np.stack([ds.x[ds.labels == c].mean(axis=0) for c in range(3)])
            offsets = ds.x - centers[ds.labels]
            assert np.abs(offsets).max() < 6.0

    def test_rejects_more_clusters_than_points(self):
        with pytest.raises(C2mError):
            datasets.gen_blobs(2, k=3, seed=0)

    def test_random_centers_respect_min_separation(self):
        for seed in range(10):
            ds = datasets.gen_blobs(100, k=9, spread=1.0, seed=seed)
            centers = np.stack([ds.x[ds.labels == c].mean(axis=0) for c in range(9)])
            dist = np.linalg.norm(centers[:, None] - centers[None, :], axis=2)
            np.fill_diagonal(dist, np.inf)
            assert dist.min() > 4.0  # 5*spread minus empirical-mean slack


class TestAnisotropic:
    def test_identity_transform_matches_blobs(self):
        a = datasets.gen_anisotropic(60, k=3, transform=np.eye(2), seed=9)
        b = datasets.gen_blobs(60, k=3, seed=9)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_diagonal_transform_scales_first_coordinate(self):
        base = datasets.gen_blobs(30, k=2, seed=5)
        out = datasets.gen_anisotropic(30, k=2, transform=np.diag([2.0, 1.0]), seed=5)
        np.testing.assert_allclose(out.x[:, 0], 2.0 * base.x[:, 0])
        np.testing.assert_allclose(out.x[:, 1], base.x[:, 1])

    def test_labels_unchanged_by_transform(self):
        base = datasets.gen_blobs(30, k=3, seed=5)
        out = datasets.gen_anisotropic(30, k=3, transform=[[0.6, -0.6], [-0.4, 0.8]], seed=5)
        np.testing.assert_array_equal(out.labels, base.labels)

    def test_singular_transform_rejected(self):
        with pytest.raises(C2mError, match="singular"):
            datasets.gen_anisotropic(30, transform=[[1.0, 2.0], [2.0, 4.0]], seed=0)


class TestMoonsAndCircles:
    def test_noiseless_circles_have_exact_radii(self):
        ds = datasets.gen_circles(100, noise=0.0, radius_ratio=0.5, seed=3)
        norms = np.linalg.norm(ds.x, axis=1)
        outer = ds.labels == 0
        np.testing.assert_allclose(norms[outer], 1.0, atol=1e-12)
        np.testing.assert_allclose(norms[~outer], 0.5, atol=1e-12)

    def test_noiseless_moons_lie_on_their_arcs(self):
        ds = datasets.gen_moons(100, noise=0.0, seed=4)
        outer = ds.x[ds.labels == 0]
        inner = ds.x[ds.labels == 1]
        # upper arc: (cos t, sin t); lower arc: (1 - cos t, 0.5 - sin t)
        np.testing.assert_allclose(np.linalg.norm(outer, axis=1), 1.0, atol=1e-12)
        assert np.all(outer[:, 1] >= -1e-12)
        back = np.column_stack([1.0 - inner[:, 0], 0.5 - inner[:, 1]])
        np.testing.assert_allclose(np.linalg.norm(back, axis=1), 1.0, atol=1e-12)
        assert np.all(back[:, 1] >= -1e-12)

    def test_exactly_two_labels(self):
        assert set(datasets.gen_moons(43, seed=0).labels) == {0, 1}
        assert set(datasets.gen_circles(43, seed=0).labels) == {0, 1}

    def test_parameter_validation(self):
        with pytest.raises(C2mError):
            datasets.gen_circles(10, radius_ratio=1.5, seed=0)
        with pytest.raises(C2mError):
            datasets.gen_moons(10, noise=-0.1, seed=0)


class TestSubsample:
    def test_full_draw_is_a_permutation(self):
        pool = datasets.gen_blobs(40, k=3, seed=7)
        out = datasets.subsample(pool, 40, seed=1)
        assert sorted(map(tuple, out.x)) == sorted(map(tuple, pool.x))

    def test_sampled_labels_are_subset(self):
        pool = datasets.gen_blobs(500, k=5, seed=7)
        out = datasets.subsample(pool, 50, seed=2)
        assert set(out.labels) <= set(pool.labels)

    def test_draws_are_pairwise_distinct(self):
        pool = datasets.gen_blobs(1500, k=4, seed=7)
        seen = {datasets.subsample(pool, 200, seed=s).x.tobytes() for s in range(20)}
        assert len(seen) == 20

    def test_requires_two_labels_in_pool(self):
        pool = datasets.SampleDataset(np.random.default_rng(0).standard_normal((20, 2)),
                                      np.zeros(20, dtype=int))
        with pytest.raises(C2mError):
            datasets.subsample(pool, 5, seed=0)

    def test_oversized_draw_rejected(self):
        pool = datasets.gen_blobs(20, k=2, seed=0)
        with pytest.raises(C2mError):
            datasets.subsample(pool, 30, seed=0)


class TestCorrupt:
    def test_zero_count_is_identity(self):
        ds = datasets.gen_blobs(30, k=3, seed=11)
        out = datasets.corrupt(ds, 0, seed=5)
        np.testing.assert_array_equal(out.labels, ds.labels)

    def test_hamming_distance_is_exact(self):
        ds = datasets.gen_blobs(60, k=4, seed=11)
        for count in (1, 7, 33, 60):
            out = datasets.corrupt(ds, count, seed=count)
            assert int((out.labels != ds.labels).sum()) == count

    def test_two_cluster_full_corruption_flips_everything(self):
        ds = datasets.gen_blobs(20, k=2, seed=11)
        out = datasets.corrupt(ds, 20, seed=3)
        np.testing.assert_array_equal(out.labels, 1 - ds.labels)

    def test_single_label_rejected(self):
        ds = datasets.SampleDataset(np.random.default_rng(0).standard_normal((10, 2)),
                                    np.zeros(10, dtype=int))
        with pytest.raises(C2mError):
            datasets.corrupt(ds, 1, seed=0)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        ds = datasets.gen_blobs(25, k=3, seed=13)
        path = tmp_path / "ds.csv"
        datasets.save_dataset(ds, path)
        back = datasets.load_dataset(path)
        np.testing.assert_array_equal(back.x, ds.x)
        np.testing.assert_array_equal(back.labels, ds.labels)

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1,label\n1.0,2.0,0\n1.0\n")
        with pytest.raises(DataFormatError, match="line 3"):
            datasets.load_dataset(path)

    def test_missing_label_column_means_no_truth(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("f0,f1\n1.0,2.0\n3.0,4.0\n")
        ds = datasets.load_dataset(path)
        assert ds.labels is None
        assert ds.x.shape == (2, 2)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "head.csv"
        path.write_text("a,b\n1.0,2.0\n")
        with pytest.raises(DataFormatError, match="line 1"):
            datasets.load_dataset(path)

    def test_corpus_round_trip(self, tmp_path):
        corpus = datasets.build_corpus("moons", 3, points=40, pool_size=120,
                                       seed=0, role="test")
        manifest = datasets.save_corpus(corpus, tmp_path)
        back = datasets.load_corpus(manifest)
        assert back.role == "test"
        assert len(back) == 3
        for a, b in zip(back, corpus):
            np.testing.assert_array_equal(a.x, b.x)
            np.testing.assert_array_equal(a.labels, b.labels)


class TestBuildCorpus:
    def test_deterministic_and_sized(self):
        a = datasets.build_corpus("blobs", 5, points=60, pool_size=300, seed=42)
        b = datasets.build_corpus("blobs", 5, points=60, pool_size=300, seed=42)
        assert len(a) == 5
        for da, db in zip(a, b):
            np.testing.assert_array_equal(da.x, db.x)
        assert all(ds.n == 60 for ds in a)

    def test_unknown_family(self):
        with pytest.raises(C2mError, match="unknown family"):
            datasets.build_corpus("spirals", 2, points=20, pool_size=100, seed=0)

    def test_single_pool_shares_source(self):
        corpus = datasets.build_corpus("circles", 4, points=50, pools=1,
                                       pool_size=400, seed=3)
        assert len({ds.origin.split("+")[0] for ds in corpus}) == 1
