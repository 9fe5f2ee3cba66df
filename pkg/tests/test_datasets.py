import numpy as np
import pytest

from peakfit.datasets import available, load_dataset, parse_transform, read_csv_column
from peakfit.errors import PeakfitError


def test_available():
    assert available() == ["iris_petal_length", "newcomb", "rainfall", "shoshoni", "snapper"]


@pytest.mark.parametrize("name", available())
def test_loads_finite(name):
    ds = load_dataset(name)
    assert ds.values.ndim == 1 and ds.values.size > 0
    assert np.all(np.isfinite(ds.values))
    assert ds.provenance


def test_newcomb_shift():
    ds = load_dataset("newcomb")
    assert ds.values.size == 66
    assert ds.values.min() == 0.0
    assert np.sort(ds.values)[1] == 42.0
    assert ds.transform == "+44 shift"


def test_shoshoni():
    v = load_dataset("shoshoni").values
    assert v.size == 20 and np.all((v > 0) & (v < 1))


def test_iris_species_means():
    ds = load_dataset("iris_petal_length")
    assert ds.values.size == 150
    labels = np.array(ds.labels)
    means = [ds.values[labels == s].mean() for s in ("setosa", "versicolor", "virginica")]
    np.testing.assert_allclose(means, [1.46, 4.26, 5.55], atol=0.02)


def test_iris_matches_sklearn():
    sklearn_datasets = pytest.importorskip("sklearn.datasets")
    ref = sklearn_datasets.load_iris().data[:, 2]
    np.testing.assert_array_equal(load_dataset("iris_petal_length").values, ref)


def test_reconstructions_flagged():
    for name in ("snapper", "rainfall"):
        assert load_dataset(name).provenance.startswith("RECONSTRUCTION")


def test_rainfall_transforms():
    raw = load_dataset("rainfall", "identity").values
    np.testing.assert_array_equal(load_dataset("rainfall").values, np.log1p(raw))
    np.testing.assert_allclose(load_dataset("rainfall", "scale:0.1").values, 0.1 * raw)
    assert raw.max() == 300.0


@pytest.mark.parametrize("bad", ["sqrt", "scale:-1", "scale:x"])
def test_bad_transform(bad):
    with pytest.raises(PeakfitError):
        parse_transform(bad)


def test_unknown_lists_available():
    with pytest.raises(PeakfitError, match="available: iris_petal_length, newcomb"):
        load_dataset("galaxies")


class TestCsv:
    def test_header_detected(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("y\n1.5\n2\n-3e-1\n", encoding="utf-8")
        np.testing.assert_array_equal(read_csv_column(p), [1.5, 2.0, -0.3])

    def test_no_header_and_column(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("1,10\n2,20\n\n3,30\n", encoding="utf-8")
        np.testing.assert_array_equal(read_csv_column(p), [1, 2, 3])
        np.testing.assert_array_equal(read_csv_column(p, 1), [10, 20, 30])

    @pytest.mark.parametrize("text, msg", [("", "no data"), ("y\n", "no data"),
                                           ("1\nabc\n", "not numeric"), ("1\nnan\n", "non-finite")])
    def test_errors(self, tmp_path, text, msg):
        p = tmp_path / "c.csv"
        p.write_text(text, encoding="utf-8")
        with pytest.raises(PeakfitError, match=msg):
            read_csv_column(p)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1\n2\n", encoding="utf-8")
        with pytest.raises(PeakfitError, match="no column 1"):
            read_csv_column(p, 1)

    def test_missing_file(self, tmp_path):
        with pytest.raises(PeakfitError, match="cannot read"):
            read_csv_column(tmp_path / "nope.csv")
