import numpy as np
import pytest

from onsetml.data import (
    FeatureMatrix,
    SplitSpec,
    apply_standardization,
    compute_imputation_medians,
    impute_missing,
    load_csv,
    make_folds,
    standardize,
    stratified_split,
    summarize,
    synth_dataset,
)
from onsetml.errors import DataError
from onsetml.svm import SvmTrainConfig, predict_labels, train_sb_svm


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def small_matrix(values, labels, names=None):
    values = np.asarray(values, dtype=float)
    if names is None:
        names = tuple(f"col_{i}" for i in range(values.shape[1]))
    return FeatureMatrix(values, np.asarray(labels), names)


class TestLoadCsv:
    def test_pima_shape(self, pima):
        assert pima.n_samples == 768
        assert pima.n_features == 8
        assert pima.column_names[0] == "Pregnancies"
        assert pima.column_names[-1] == "Age"

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv")

    def test_header_only_is_empty(self, tmp_path):
        path = write_csv(tmp_path, "a,b,label\n")
        with pytest.raises(DataError, match="empty dataset"):
            load_csv(path)

    def test_non_numeric_cell_names_position(self, tmp_path):
        rows = ["1,2,3,0", "4,5,6,1", "7,8,9,0", "1,2,abc,1"]
        path = write_csv(tmp_path, "a,b,c,label\n" + "\n".join(rows) + "\n")
        with pytest.raises(DataError, match=r"row 3, column 2"):
            load_csv(path)

    def test_ragged_row(self, tmp_path):
        path = write_csv(tmp_path, "a,b,label\n1,2,0\n1,2\n")
        with pytest.raises(DataError, match="ragged row 1"):
            load_csv(path)

    def test_label_outside_01(self, tmp_path):
        path = write_csv(tmp_path, "a,label\n1,0\n2,2\n")
        with pytest.raises(DataError, match=r"label outside \{0,1\}"):
            load_csv(path)

    def test_non_finite_cell(self, tmp_path):
        path = write_csv(tmp_path, "a,label\nnan,0\n")
        with pytest.raises(DataError, match="non-finite"):
            load_csv(path)

    def test_headerless_names(self, tmp_path):
        path = write_csv(tmp_path, "1,2,0\n3,4,1\n")
        m = load_csv(path, has_header=False)
        assert m.column_names == ("col_0", "col_1")


class TestSummarize:
    def test_counts(self):
        m = small_matrix([[1.0], [2.0], [3.0]], [1, 1, 0])
        s = summarize(m)
        assert (s.n_positive, s.n_negative) == (2, 1)

    def test_all_negative(self):
        m = small_matrix([[1.0], [2.0]], [0, 0])
        assert summarize(m).n_positive == 0

    def test_pima_counts(self, pima):
        s = summarize(pima)
        assert s.n_samples == 768
        assert s.n_positive == 268
        assert s.n_negative == 500

    def test_missing_counts_match_direct_enumeration(self, pima):
        flagged = ["Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI"]
        s = summarize(pima, zero_as_missing_columns=flagged)
        by_name = {c.name: c for c in s.columns}
        for name in flagged:
            j = pima.column_names.index(name)
            assert by_name[name].missing_count == int((pima.values[:, j] == 0).sum())
        assert by_name["Age"].missing_count == 0

    def test_column_stats(self):
        m = small_matrix([[1.0, 5.0], [3.0, 5.0]], [0, 1])
        s = summarize(m)
        assert s.columns[0].minimum == 1.0
        assert s.columns[0].maximum == 3.0
        assert s.columns[0].mean == 2.0


class TestImpute:
    def test_zero_replaced_by_nonzero_median(self):
        m = small_matrix([[2.0], [0.0], [4.0]], [0, 1, 0])
        out = impute_missing(m, [0])
        assert out.values[:, 0].tolist() == [2.0, 3.0, 4.0]

    def test_column_without_zeros_unchanged(self):
        m = small_matrix([[2.0], [3.0], [4.0]], [0, 1, 0])
        out = impute_missing(m, [0])
        assert np.array_equal(out.values, m.values)

    def test_all_zero_column_errors(self):
        m = small_matrix([[0.0], [0.0]], [0, 1])
        with pytest.raises(DataError, match="entirely zero"):
            impute_missing(m, [0])

    def test_column_by_name(self):
        m = small_matrix([[2.0, 1.0], [0.0, 1.0]], [0, 1], names=("g", "x"))
        out = impute_missing(m, ["g"])
        assert out.values[1, 0] == 2.0
        medians = compute_imputation_medians(m, ["g"])
        assert medians == {0: 2.0}


class TestStandardize:
    def test_hand_values(self):
        m = small_matrix([[1.0], [2.0], [3.0]], [0, 1, 0])
        out, stats = standardize(m)
        expected = np.array([-1.2247, 0.0, 1.2247])
        assert np.abs(out.values[:, 0] - expected).max() < 1e-4
        assert stats.mean[0] == 2.0

    def test_constant_column(self):
        m = small_matrix([[5.0], [5.0], [5.0]], [0, 1, 0])
        out, stats = standardize(m)
        assert np.array_equal(out.values[:, 0], np.zeros(3))
        assert stats.scale[0] == 1.0

    def test_idempotent(self):
        rng = np.random.RandomState(0)
        m = small_matrix(rng.randn(50, 3) * 4 + 1, rng.randint(0, 2, 50))
        once, _ = standardize(m)
        twice, _ = standardize(once)
        assert np.abs(twice.values - once.values).max() < 1e-9

    def test_statistics_reusable_on_unseen_rows(self):
        m = small_matrix([[1.0], [2.0], [3.0]], [0, 1, 0])
        _, stats = standardize(m)
        other = small_matrix([[2.0], [4.0]], [0, 1])
        out = apply_standardization(other, stats)
        assert out.values[0, 0] == 0.0  # same mean as the fit set


class TestStratifiedSplit:
    def test_per_class_rounding(self):
        rng = np.random.RandomState(1)
        labels = np.array([1] * 60 + [0] * 40)
        m = small_matrix(rng.randn(100, 2), labels)
        train, test = stratified_split(m, SplitSpec(train_fraction=0.7, seed=3))
        assert int(train.labels.sum()) == 42
        assert train.n_samples - int(train.labels.sum()) == 28
        assert test.n_samples == 30

    def test_deterministic(self):
        rng = np.random.RandomState(2)
        m = small_matrix(rng.randn(40, 2), rng.randint(0, 2, 40))
        a = stratified_split(m, SplitSpec(seed=9))
        b = stratified_split(m, SplitSpec(seed=9))
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].values, b[1].values)

    def test_tiny_balanced(self):
        m = small_matrix(np.arange(8).reshape(4, 2), [0, 1, 0, 1])
        train, test = stratified_split(m, SplitSpec(train_fraction=0.5, seed=0))
        assert int(train.labels.sum()) == 1 and int(test.labels.sum()) == 1
        assert train.n_samples == test.n_samples == 2

    def test_exact_partition(self):
        rng = np.random.RandomState(3)
        m = small_matrix(rng.randn(101, 2), rng.randint(0, 2, 101))
        train, test = stratified_split(m, SplitSpec(train_fraction=0.66, seed=1))
        assert train.n_samples + test.n_samples == 101
        joined = np.vstack([train.values, test.values])
        assert np.unique(joined, axis=0).shape[0] == np.unique(m.values, axis=0).shape[0]

    def test_small_class_errors(self):
        m = small_matrix([[1.0], [2.0], [3.0]], [1, 0, 0])
        with pytest.raises(DataError, match="class 1"):
            stratified_split(m, SplitSpec())


class TestMakeFolds:
    def test_pima_fold_sizes(self, pima):
        assignment = make_folds(pima, k=5, seed=0)
        sizes = sorted(np.bincount(assignment.fold_index).tolist())
        assert sizes == [153, 153, 154, 154, 154]

    def test_small_balanced(self):
        m = small_matrix(np.arange(8).reshape(4, 2), [0, 1, 0, 1])
        assignment = make_folds(m, k=2, seed=0)
        for fold in range(2):
            idx = assignment.test_indices(fold)
            assert sorted(m.labels[idx].tolist()) == [0, 1]

    def test_k_exceeds_minority(self):
        m = small_matrix(np.arange(20).reshape(10, 2), [1] * 5 + [0] * 5)
        with pytest.raises(DataError, match="cannot build 6 folds"):
            make_folds(m, k=6, seed=0)

    def test_deterministic_and_partition(self):
        rng = np.random.RandomState(4)
        m = small_matrix(rng.randn(53, 2), rng.randint(0, 2, 53))
        a = make_folds(m, k=4, seed=7)
        b = make_folds(m, k=4, seed=7)
        assert np.array_equal(a.fold_index, b.fold_index)
        all_test = np.concatenate([a.test_indices(f) for f in range(4)])
        assert sorted(all_test.tolist()) == list(range(53))

    def test_within_class_balance(self):
        rng = np.random.RandomState(5)
        labels = np.array([1] * 23 + [0] * 40)
        m = small_matrix(rng.randn(63, 2), labels)
        assignment = make_folds(m, k=5, seed=2)
        for cls in (0, 1):
            per_fold = [
                int((m.labels[assignment.test_indices(f)] == cls).sum())
                for f in range(5)
            ]
            assert max(per_fold) - min(per_fold) <= 1


class TestSynthDataset:
    def test_requested_counts(self):
        m = synth_dataset(n=2132, n_features=10, positive_fraction=0.64, seed=0)
        s = summarize(m)
        assert s.n_samples == 2132
        assert s.n_features == 10
        assert s.n_positive == round(0.64 * 2132)

    def test_bit_identical_per_seed(self):
        a = synth_dataset(200, 4, 0.5, 2.0, seed=11)
        b = synth_dataset(200, 4, 0.5, 2.0, seed=11)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.labels, b.labels)

    def test_separable_clouds_are_linearly_separable(self):
        m = synth_dataset(200, 5, 0.5, separation=10.0, seed=3)
        train, test = stratified_split(m, SplitSpec(train_fraction=0.7, seed=0))
        model, _ = train_sb_svm(train, SvmTrainConfig(C=1.0, max_passes=4000))
        acc = float((predict_labels(model, test.values) == test.labels).mean())
        assert acc >= 0.99

    def test_zero_separation_gives_chance_accuracy(self):
        m = synth_dataset(400, 5, 0.3, separation=0.0, seed=6)
        train, test = stratified_split(m, SplitSpec(train_fraction=0.7, seed=0))
        model, _ = train_sb_svm(
            train, SvmTrainConfig(C=1.0, max_passes=4000, class_balance=False)
        )
        acc = float((predict_labels(model, test.values) == test.labels).mean())
        assert 0.5 <= acc <= 0.82  # majority share is 0.7; no real signal exists

    def test_validation(self):
        with pytest.raises(DataError):
            synth_dataset(2, 3)
        with pytest.raises(DataError):
            synth_dataset(10, 3, positive_fraction=1.0)
