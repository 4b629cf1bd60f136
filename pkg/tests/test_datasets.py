import numpy as np
import pytest

from interplab import analysis, datasets
from interplab.datasets import Dataset
from interplab.errors import CsvFormatError


class TestDatasetValidation:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="y must have shape"):
            Dataset(x=np.ones((3, 2)), y=np.ones(4), kind="regression")

    def test_rejects_nan(self):
        x = np.ones((3, 2))
        x[1, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            Dataset(x=x, y=np.ones(3), kind="regression")

    def test_classification_needs_sign_labels(self):
        with pytest.raises(ValueError, match="labels"):
            Dataset(x=np.ones((2, 2)), y=np.array([1.0, 0.5]), kind="classification")

    def test_absorbed_flips_negative_rows(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        y = np.array([1.0, -1.0])
        d = Dataset(x=x, y=y, kind="classification")
        np.testing.assert_allclose(d.absorbed(), [[1, 2], [-3, -4]])

    def test_absorbed_regression_raises(self):
        d = Dataset(x=np.ones((2, 2)), y=np.ones(2), kind="regression")
        with pytest.raises(ValueError):
            d.absorbed()

    def test_split_dims_must_agree(self):
        a = Dataset(x=np.ones((2, 2)), y=np.ones(2), kind="regression")
        b = Dataset(x=np.ones((2, 3)), y=np.ones(2), kind="regression")
        with pytest.raises(ValueError):
            datasets.SplitDataset(train=a, test=b)


class TestRegressionGenerator:
    def test_deterministic_in_seed(self):
        d1 = datasets.gen_regression(10, 20, seed=7)
        d2 = datasets.gen_regression(10, 20, seed=7)
        np.testing.assert_array_equal(d1.x, d2.x)
        np.testing.assert_array_equal(d1.y, d2.y)
        d3 = datasets.gen_regression(10, 20, seed=8)
        assert not np.array_equal(d1.x, d3.x)

    def test_ground_truth_is_unit_norm(self):
        d = datasets.gen_regression(5, 40, seed=42)
        assert np.linalg.norm(d.w_star) == pytest.approx(1.0)

    def test_covariance_is_perturbed_identity(self):
        d = datasets.gen_regression(5, 40, zeta_sq=10.0, seed=42)
        diag = np.diag(d.sigma)
        np.testing.assert_array_equal(d.sigma, np.diag(diag))
        assert np.all(diag >= 1.0)
        assert diag.max() > 1.0
        # zeta_sq = 0 collapses to the identity
        d0 = datasets.gen_regression(5, 40, zeta_sq=0.0, seed=42)
        np.testing.assert_allclose(d0.sigma, np.eye(40))

    def test_noiseless_targets_are_realizable(self):
        d = datasets.gen_regression(8, 30, noise_var=0.0, seed=1)
        np.testing.assert_allclose(d.y, d.x @ d.w_star)
        assert d.noise_var == 0.0

    def test_label_noise_recorded(self):
        d = datasets.gen_regression(8, 30, noise_var=0.5, seed=1)
        assert d.noise_var == 0.5
        assert not np.allclose(d.y, d.x @ d.w_star)

    def test_sample_seed_redraws_features_only(self):
        base = datasets.gen_regression(10, 20, seed=3)
        fresh = datasets.gen_regression(10, 20, seed=3, sample_seed=99)
        np.testing.assert_array_equal(fresh.w_star, base.w_star)
        np.testing.assert_array_equal(fresh.sigma, base.sigma)
        assert not np.array_equal(fresh.x, base.x)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            datasets.gen_regression(0, 5)
        with pytest.raises(ValueError):
            datasets.gen_regression(5, 5, noise_var=-1.0)


class TestMixtureGenerator:
    def test_shapes_and_balance(self):
        split = datasets.gen_relative_margin(40, 60, seed=0)
        assert split.train.x.shape == (40, 2)
        assert split.test.x.shape == (60, 2)
        assert split.train.y.sum() == 0.0  # even split
        assert set(np.unique(split.train.y)) == {-1.0, 1.0}

    def test_training_sample_is_separable(self):
        split = datasets.gen_relative_margin(50, 50, seed=5)
        sol = analysis.max_margin(split.train)
        assert sol.gamma > 0

    def test_population_parameters_attached(self):
        split = datasets.gen_relative_margin(20, 20, seed=0)
        np.testing.assert_array_equal(split.train.sigma, datasets.REL_MARGIN_SIGMA)
        np.testing.assert_array_equal(
            split.train.meta["mu_pos"], datasets.REL_MARGIN_MU_POS
        )

    def test_deterministic(self):
        a = datasets.gen_relative_margin(30, 30, seed=11)
        b = datasets.gen_relative_margin(30, 30, seed=11)
        np.testing.assert_array_equal(a.train.x, b.train.x)
        np.testing.assert_array_equal(a.test.y, b.test.y)


class TestTwoPointGenerator:
    @pytest.mark.parametrize("a", [0.9, 0.5, 0.1, 0.02])
    def test_closed_form_direction_has_unit_functional_margin(self, a):
        d = datasets.gen_two_point(a)
        margins = d.absorbed() @ d.w_star
        np.testing.assert_allclose(margins, 1.0, atol=1e-12)
        assert d.meta["margin"] == pytest.approx(1.0 / np.linalg.norm(d.w_star))

    def test_geometry(self):
        d = datasets.gen_two_point(0.3)
        np.testing.assert_allclose(d.x[0], [-1.0, 0.0])
        assert np.linalg.norm(d.x[1]) == pytest.approx(1.0)
        assert d.meta["b"] == pytest.approx(np.sqrt(1 - 0.09))

    @pytest.mark.parametrize("a", [0.0, 1.0, -0.5, 1.3])
    def test_rejects_degenerate_separation(self, a):
        with pytest.raises(ValueError):
            datasets.gen_two_point(a)


class TestRandomFeaturesGenerator:
    def test_shapes_and_labels(self):
        split = datasets.gen_random_features(30, 50, d=80, seed=2)
        assert split.train.x.shape == (30, 80)
        assert split.test.x.shape == (50, 80)
        assert np.all(np.abs(split.train.y) == 1.0)
        assert split.train.kind == "classification"

    def test_labels_binarize_latent_response(self):
        split = datasets.gen_random_features(25, 25, d=60, noise_var=0.0, seed=4)
        for part in (split.train, split.test):
            latent = part.x @ part.w_star
            np.testing.assert_array_equal(part.y, np.where(latent >= 0, 1.0, -1.0))

    def test_train_test_share_ground_truth(self):
        split = datasets.gen_random_features(10, 10, d=40, seed=9)
        np.testing.assert_array_equal(split.train.w_star, split.test.w_star)


class TestCsvLoader:
    @pytest.fixture
    def csv_file(self, tmp_path):
        rng = np.random.default_rng(42)
        path = tmp_path / "data.csv"
        rows = ["f1,f2,const,target"]
        for _ in range(20):
            a, b = (float(v) for v in rng.standard_normal(2))
            rows.append(f"{a!r},{b!r},3.5,{a + 2 * b!r}")
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_subset_split_partitions_rows(self, csv_file):
        split = datasets.load_csv(csv_file, "target", subset_n=12, seed=0)
        assert split.train.n == 12
        assert split.test.n == 8
        assert split.train.d == 3

    def test_standardization_fitted_on_train(self, csv_file):
        split = datasets.load_csv(csv_file, "target", subset_n=12, seed=0)
        np.testing.assert_allclose(split.train.x[:, :2].mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(split.train.x[:, :2].std(axis=0), 1.0, atol=1e-12)
        # constant column maps to zero rather than dividing by zero
        np.testing.assert_array_equal(split.train.x[:, 2], 0.0)
        np.testing.assert_array_equal(split.test.x[:, 2], 0.0)
        # test rows use the train statistics, so they are not exactly centered
        assert abs(split.test.x[:, 0].mean()) > 0

    def test_explicit_test_file(self, csv_file, tmp_path):
        other = tmp_path / "test.csv"
        other.write_text("f1,f2,const,target\n1.0,2.0,3.5,5.0\n")
        split = datasets.load_csv(csv_file, "target", test_path=other)
        assert split.train.n == 20
        assert split.test.n == 1

    def test_mismatched_test_header(self, csv_file, tmp_path):
        other = tmp_path / "test.csv"
        other.write_text("f1,f2,target\n1.0,2.0,5.0\n")
        with pytest.raises(CsvFormatError, match="header differs"):
            datasets.load_csv(csv_file, "target", test_path=other)

    def test_classification_binarizes_at_train_median(self, csv_file):
        split = datasets.load_csv(
            csv_file, "target", subset_n=12, seed=0, classification=True
        )
        assert set(np.unique(split.train.y)) <= {-1.0, 1.0}
        assert split.train.kind == "classification"

    def test_missing_target_column(self, csv_file):
        with pytest.raises(CsvFormatError, match="not found"):
            datasets.load_csv(csv_file, "label", subset_n=5)

    def test_non_numeric_cell_reports_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1.0,2.0\n1.0,oops\n")
        with pytest.raises(CsvFormatError, match="line 3.*'b'.*'oops'"):
            datasets.load_csv(path, "b", subset_n=1)

    def test_no_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("a,b\n")
        with pytest.raises(CsvFormatError, match="no data rows"):
            datasets.load_csv(path, "b", subset_n=1)

    def test_subset_without_leftover_needs_test(self, csv_file):
        with pytest.raises(ValueError, match="test"):
            datasets.load_csv(csv_file, "target", subset_n=20)
