import numpy as np
import pytest

from mvcotrain.data import (
    MinMaxScale,
    MultiViewDataset,
    SynthSpec,
    batches,
    load_dataset,
    save_dataset,
    split,
    synth_multiview,
)
from mvcotrain.evaluation import accuracy, predict_logreg, train_logreg
from mvcotrain.exceptions import DataError


def write_dataset(dir_path, views, labels):
    dir_path.mkdir(parents=True, exist_ok=True)
    for v, rows in enumerate(views):
        (dir_path / f"view_{v}.csv").write_text(
            "\n".join(",".join(str(c) for c in row) for row in rows) + "\n"
        )
    (dir_path / "labels.csv").write_text("\n".join(str(y) for y in labels) + "\n")


class TestMultiViewDataset:
    def test_row_mismatch_rejected(self):
        with pytest.raises(DataError):
            MultiViewDataset([np.zeros((3, 2)), np.zeros((4, 2))], np.zeros(3, int), 1)

    def test_label_out_of_range_rejected(self):
        with pytest.raises(DataError):
            MultiViewDataset([np.zeros((2, 2))], np.array([0, 3]), 2)

    def test_non_finite_rejected(self):
        bad = np.array([[1.0, np.nan]])
        with pytest.raises(DataError):
            MultiViewDataset([bad], np.array([0]), 1)

    def test_subset_keeps_alignment(self):
        views = [np.arange(12.0).reshape(6, 2), np.arange(18.0).reshape(6, 3)]
        ds = MultiViewDataset(views, np.array([0, 1, 0, 1, 0, 1]), 2)
        sub = ds.subset([4, 1])
        np.testing.assert_array_equal(sub.views[0], views[0][[4, 1]])
        np.testing.assert_array_equal(sub.views[1], views[1][[4, 1]])
        np.testing.assert_array_equal(sub.labels, [0, 1])


class TestLoadDataset:
    def test_happy_path(self, tmp_path):
        write_dataset(
            tmp_path / "d",
            [[[1.5, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]],
             [[1.0], [2.0], [3.0], [4.0]]],
            [0, 1, 0, 1],
        )
        ds = load_dataset(tmp_path / "d")
        assert ds.n_samples == 4
        assert ds.n_views == 2
        assert ds.n_classes == 2
        assert ds.views[0][0, 0] == 1.5

    def test_missing_views_rejected(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(DataError, match="view_0"):
            load_dataset(tmp_path / "empty")

    def test_missing_labels_rejected(self, tmp_path):
        d = tmp_path / "d"
        d.mkdir()
        (d / "view_0.csv").write_text("1.0,2.0\n")
        with pytest.raises(DataError, match="labels"):
            load_dataset(d)

    def test_row_count_mismatch_names_both_counts(self, tmp_path):
        d = tmp_path / "d"
        d.mkdir()
        (d / "view_0.csv").write_text("1,2\n3,4\n5,6\n7,8\n")
        (d / "view_1.csv").write_text("1\n2\n3\n")
        (d / "labels.csv").write_text("0\n1\n0\n1\n")
        with pytest.raises(DataError, match=r"(?s)4.*3|3.*4"):
            load_dataset(d)

    def test_non_numeric_cell_is_located(self, tmp_path):
        d = tmp_path / "d"
        d.mkdir()
        (d / "view_0.csv").write_text("1.0,2.0\n1.0,oops\n")
        (d / "labels.csv").write_text("0\n1\n")
        with pytest.raises(DataError, match=r"view_0\.csv:2"):
            load_dataset(d)

    def test_negative_label_is_located(self, tmp_path):
        write_dataset(tmp_path / "d", [[[1.0], [2.0]]], [0, -1])
        with pytest.raises(DataError, match=r"labels\.csv:2"):
            load_dataset(tmp_path / "d")

    def test_gap_in_class_ids_warns_or_rejects(self, tmp_path):
        write_dataset(tmp_path / "d", [[[1.0], [2.0], [3.0]]], [0, 1, 5])
        with pytest.warns(UserWarning, match="no samples"):
            ds = load_dataset(tmp_path / "d")
        assert ds.n_classes == 6
        with pytest.raises(DataError, match="no samples"):
            load_dataset(tmp_path / "d", strict=True)

    def test_header_flag_skips_first_line(self, tmp_path):
        d = tmp_path / "d"
        d.mkdir()
        (d / "view_0.csv").write_text("f0,f1\n1.0,2.0\n3.0,4.0\n")
        (d / "labels.csv").write_text("label\n0\n1\n")
        ds = load_dataset(d, header=True)
        assert ds.n_samples == 2

    def test_save_load_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        views = [rng.standard_normal((7, 3)) * 1e-7, rng.standard_normal((7, 2)) * 1e8]
        ds = MultiViewDataset(views, rng.integers(0, 3, 7), 3)
        save_dataset(tmp_path / "rt", ds)
        back = load_dataset(tmp_path / "rt")
        for a, b in zip(back.views, ds.views):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestSplit:
    def test_balanced_even_split(self):
        ds = synth_multiview(
            SynthSpec(views=2, classes=4, samples_per_class=25, latent_dim=3,
                      noise_std=0.1, view_dims=(5, 6)),
            seed=1,
        )
        train, test = split(ds, 0.5, seed=3)
        assert train.n_samples == 50 and test.n_samples == 50
        for counts in (np.bincount(train.labels), np.bincount(test.labels)):
            assert np.all(np.abs(counts - 12.5) <= 0.5 + 1e-9)

    def test_deterministic(self):
        ds = synth_multiview(
            SynthSpec(views=1, classes=2, samples_per_class=10, latent_dim=2,
                      noise_std=0.1, view_dims=(4,)),
            seed=2,
        )
        a_train, a_test = split(ds, 0.6, seed=9)
        b_train, b_test = split(ds, 0.6, seed=9)
        np.testing.assert_array_equal(a_train.views[0], b_train.views[0])
        np.testing.assert_array_equal(a_test.labels, b_test.labels)

    def test_partition_and_alignment(self):
        n = 30
        marker = np.arange(n, dtype=np.float64)
        views = [
            np.column_stack([marker, np.ones(n)]),
            np.column_stack([marker, np.zeros(n)]),
        ]
        labels = np.arange(n) % 3
        ds = MultiViewDataset(views, labels, 3)
        train, test = split(ds, 0.5, seed=4)
        ids = np.sort(np.concatenate([train.views[0][:, 0], test.views[0][:, 0]]))
        np.testing.assert_array_equal(ids, marker)
        for part in (train, test):
            np.testing.assert_array_equal(part.views[0][:, 0], part.views[1][:, 0])
            np.testing.assert_array_equal(part.labels, part.views[0][:, 0] % 3)

    def test_tiny_class_rejected(self):
        ds = MultiViewDataset([np.zeros((3, 2))], np.array([0, 0, 1]), 2)
        with pytest.raises(ValueError, match="class 1"):
            split(ds, 0.5, seed=0)

    def test_ratio_bounds(self):
        ds = MultiViewDataset([np.zeros((4, 2))], np.array([0, 0, 1, 1]), 2)
        for ratio in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                split(ds, ratio, seed=0)


class TestBatches:
    def test_chunk_sizes(self):
        out = batches(10, 4, seed=0)
        assert [len(b) for b in out] == [4, 4, 2]

    def test_oversized_batch_is_full_permutation(self):
        out = batches(5, 8, seed=1)
        assert len(out) == 1
        np.testing.assert_array_equal(np.sort(out[0]), np.arange(5))

    def test_partition_property(self):
        out = batches(23, 5, seed=2)
        np.testing.assert_array_equal(np.sort(np.concatenate(out)), np.arange(23))

    def test_batch_size_must_be_positive(self):
        with pytest.raises(ValueError):
            batches(10, 0, seed=0)


class TestSynth:
    def test_deterministic(self):
        spec = SynthSpec(views=2, classes=3, samples_per_class=5, latent_dim=2,
                         noise_std=0.2, view_dims=(4, 3))
        a = synth_multiview(spec, seed=11)
        b = synth_multiview(spec, seed=11)
        for x, y in zip(a.views, b.views):
            np.testing.assert_array_equal(x, y)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_noiseless_two_classes_linearly_separable(self):
        spec = SynthSpec(views=2, classes=2, samples_per_class=20, latent_dim=3,
                         noise_std=0.0, view_dims=(6, 6))
        ds = synth_multiview(spec, seed=3)
        model = train_logreg(ds.views[0], ds.labels, iters=300)
        assert accuracy(predict_logreg(model, ds.views[0]), ds.labels) == 1.0

    def test_single_view_degenerate(self):
        spec = SynthSpec(views=1, classes=2, samples_per_class=4, latent_dim=2,
                         noise_std=0.1, view_dims=(3,))
        ds = synth_multiview(spec, seed=5)
        assert ds.n_views == 1
        assert ds.n_samples == 8

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SynthSpec(views=0)
        with pytest.raises(ValueError):
            SynthSpec(noise_std=-0.1)
        with pytest.raises(ValueError):
            SynthSpec(views=2, view_dims=(4,))

    def test_shapes_and_counts(self):
        spec = SynthSpec(views=2, classes=3, samples_per_class=7, latent_dim=2,
                         noise_std=0.1, view_dims=(4, 9))
        ds = synth_multiview(spec, seed=6)
        assert ds.view_dims == (4, 9)
        np.testing.assert_array_equal(np.bincount(ds.labels), [7, 7, 7])


class TestMinMaxScale:
    def test_train_features_land_in_unit_interval(self):
        rng = np.random.default_rng(7)
        train = [rng.standard_normal((20, 4)) * 5]
        scaler = MinMaxScale.fit(train)
        scaled = scaler.apply(train)[0]
        assert scaled.min() == pytest.approx(0.0)
        assert scaled.max() == pytest.approx(1.0)

    def test_same_transform_applied_to_test(self):
        train = [np.array([[0.0], [10.0]])]
        test = [np.array([[5.0], [20.0]])]
        scaler = MinMaxScale.fit(train)
        out = scaler.apply(test)[0]
        np.testing.assert_allclose(out, [[0.5], [2.0]])  # test may leave [0,1]

    def test_constant_feature_maps_to_zero(self):
        train = [np.full((4, 2), 3.0)]
        scaler = MinMaxScale.fit(train)
        np.testing.assert_array_equal(scaler.apply(train)[0], np.zeros((4, 2)))
