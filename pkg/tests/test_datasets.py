import numpy as np
import pytest

from imcc import Dataset, compute_stats, load_arff, load_csv, normalize, random_split, save_csv
from imcc.datasets import NormStats, read_label_xml, read_numeric_csv
from imcc.errors import (
    ConfigurationError,
    ParseError,
    UnsupportedFeatureError,
    ValidationError,
)

DENSE_ARFF = """\
% tiny example
@relation tiny

@attribute f1 numeric
@attribute f2 real
@attribute lab1 {0,1}
@attribute lab2 {0,1}

@data
0.5,1.5,1,0
-0.25,2.0,0,1
3.0,4.0,1,1
"""

SPARSE_ARFF = """\
@relation tinysparse
@attribute a numeric
@attribute b numeric
@attribute c numeric
@attribute lab {0,1}
@data
{0 1.5, 3 1}
{1 2.5}
"""

XML_LABELS = """\
<?xml version="1.0" encoding="utf-8"?>
<labels xmlns="http://example.org/labels">
  <label name="lab1"></label>
  <label name="lab2"></label>
</labels>
"""


class TestArff:
    def test_dense_with_trailing_count(self, tmp_path):
        path = tmp_path / "tiny.arff"
        path.write_text(DENSE_ARFF)
        data = load_arff(path, 2)
        assert data.num_examples == 3
        assert data.num_features == 2
        assert data.num_labels == 2
        assert data.labels.tolist() == [[1, -1], [-1, 1], [1, 1]]
        assert data.feature_names == ("f1", "f2")
        assert data.label_names == ("lab1", "lab2")

    def test_dense_with_xml(self, tmp_path):
        arff = tmp_path / "tiny.arff"
        arff.write_text(DENSE_ARFF)
        xml = tmp_path / "tiny.xml"
        xml.write_text(XML_LABELS)
        data = load_arff(arff, xml)
        assert data.label_names == ("lab1", "lab2")
        assert data.features[0].tolist() == [0.5, 1.5]

    def test_sparse_rows_default_to_zero(self, tmp_path):
        path = tmp_path / "sp.arff"
        path.write_text(SPARSE_ARFF)
        data = load_arff(path, 1)
        assert data.features.tolist() == [[1.5, 0.0, 0.0], [0.0, 2.5, 0.0]]
        assert data.labels.tolist() == [[1], [-1]]

    def test_malformed_body_reports_line(self, tmp_path):
        path = tmp_path / "bad.arff"
        path.write_text(DENSE_ARFF.replace("3.0,4.0,1,1", "3.0,oops,1,1"))
        with pytest.raises(ParseError, match=r"bad\.arff:12"):
            load_arff(path, 2)

    def test_wide_nominal_rejected(self, tmp_path):
        path = tmp_path / "nom.arff"
        path.write_text(
            "@relation x\n@attribute color {red,green}\n@attribute lab {0,1}\n"
            "@data\nred,1\n"
        )
        with pytest.raises(UnsupportedFeatureError):
            load_arff(path, 1)

    def test_unknown_xml_label_name(self, tmp_path):
        arff = tmp_path / "tiny.arff"
        arff.write_text(DENSE_ARFF)
        xml = tmp_path / "bad.xml"
        xml.write_text(XML_LABELS.replace("lab2", "nosuch"))
        with pytest.raises(ConfigurationError, match="nosuch"):
            load_arff(arff, xml)

    def test_missing_values_rejected(self, tmp_path):
        path = tmp_path / "missing.arff"
        path.write_text(DENSE_ARFF.replace("0.5,1.5,1,0", "?,1.5,1,0"))
        with pytest.raises(UnsupportedFeatureError, match="missing"):
            load_arff(path, 2)

    def test_read_label_xml(self, tmp_path):
        xml = tmp_path / "l.xml"
        xml.write_text(XML_LABELS)
        assert read_label_xml(xml) == ["lab1", "lab2"]


class TestCsv:
    def test_basic_remap(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0.1,0.2,1,0\n")
        data = load_csv(path, 2)
        assert data.features.tolist() == [[0.1, 0.2]]
        assert data.labels.tolist() == [[1, -1]]

    def test_empty_file_is_parse_error(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="empty"):
            load_csv(path, 1)

    def test_all_positive_labels(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("\n".join("0.0,1.0,1,1" for _ in range(4)) + "\n")
        data = load_csv(path, 2)
        assert np.all(data.labels == 1)

    def test_header_autodetected(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("x,y,tag\n1.0,2.0,1\n3.0,4.0,0\n")
        data = load_csv(path, 1)
        assert data.feature_names == ("x", "y")
        assert data.label_names == ("tag",)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1.0,2.0,1\n1.0,1\n")
        with pytest.raises(ParseError, match="ragged"):
            load_csv(path, 1)

    def test_label_outside_domain_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0,3\n")
        with pytest.raises(ValidationError, match="outside"):
            load_csv(path, 1)

    def test_round_trip(self, tmp_path, make_dataset):
        rng = np.random.default_rng(7)
        data = make_dataset(rng, 20, 4, 3)
        path = tmp_path / "rt.csv"
        save_csv(data, path)
        back = load_csv(path, 3)
        np.testing.assert_allclose(back.features, data.features, atol=1e-12)
        assert np.array_equal(back.labels, data.labels)
        assert back.feature_names == data.feature_names

    def test_read_numeric_csv_header_mismatch(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("a,b\n1.0,2.0,3.0\n")
        with pytest.raises(ParseError):
            read_numeric_csv(path)


class TestDatasetType:
    def test_rejects_bad_labels(self):
        with pytest.raises(ValidationError):
            Dataset(np.ones((2, 1)), np.array([[1], [2]]), ("f",), ("l",))

    def test_rejects_nonfinite_features(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[np.nan]]), np.array([[1]]), ("f",), ("l",))

    def test_arrays_are_readonly(self, make_dataset):
        data = make_dataset(np.random.default_rng(0), 3, 2, 2)
        with pytest.raises(ValueError):
            data.features[0, 0] = 1.0


class TestNormalize:
    def test_zscore_two_points(self):
        data = Dataset(
            np.array([[1.0], [3.0]]), np.array([[1], [-1]]), ("f",), ("l",)
        )
        out, stats = normalize(data, "zscore")
        np.testing.assert_allclose(out.features, [[-1.0], [1.0]])
        np.testing.assert_allclose(stats.center, [2.0])

    def test_zscore_constant_column_centers_only(self):
        data = Dataset(
            np.array([[5.0, 1.0], [5.0, 3.0]]), np.array([[1], [-1]]), ("a", "b"), ("l",)
        )
        out, stats = normalize(data, "zscore")
        np.testing.assert_allclose(out.features[:, 0], [0.0, 0.0])
        assert stats.scale[0] == 1.0

    def test_minmax(self):
        data = Dataset(
            np.array([[0.0], [2.0], [4.0]]),
            np.array([[1], [-1], [1]]),
            ("f",),
            ("l",),
        )
        out, _ = normalize(data, "minmax")
        np.testing.assert_allclose(out.features, [[0.0], [0.5], [1.0]])

    def test_round_trip_inversion(self, make_dataset):
        rng = np.random.default_rng(5)
        data = make_dataset(rng, 30, 6, 2)
        for method in ("zscore", "minmax", "none"):
            out, stats = normalize(data, method)
            back = stats.inverse(out.features)
            np.testing.assert_allclose(back, data.features, rtol=1e-10, atol=1e-10)

    def test_unknown_method(self, make_dataset):
        data = make_dataset(np.random.default_rng(0), 3, 2, 2)
        with pytest.raises(ConfigurationError):
            normalize(data, "robust")

    def test_norm_stats_rejects_zero_scale(self):
        with pytest.raises(ValidationError):
            NormStats(np.zeros(2), np.array([1.0, 0.0]))


class TestSplit:
    def test_80_20_counts(self, make_dataset):
        data = make_dataset(np.random.default_rng(1), 10, 3, 2)
        train, test = random_split(data, 0.8, seed=0)
        assert train.num_examples == 8
        assert test.num_examples == 2

    def test_same_seed_same_split(self, make_dataset):
        data = make_dataset(np.random.default_rng(2), 25, 3, 2)
        a = random_split(data, 0.8, seed=9)
        b = random_split(data, 0.8, seed=9)
        np.testing.assert_array_equal(a[0].features, b[0].features)
        np.testing.assert_array_equal(a[1].features, b[1].features)

    def test_partition_is_disjoint_and_exhaustive(self, make_dataset):
        rng = np.random.default_rng(3)
        data = make_dataset(rng, 17, 2, 2)
        rows = {tuple(r) for r in data.features}
        for seed in range(100):
            train, test = random_split(data, 0.6, seed=seed)
            got = {tuple(r) for r in train.features} | {tuple(r) for r in test.features}
            assert got == rows
            assert train.num_examples + test.num_examples == 17

    def test_distinct_seeds_usually_differ(self, make_dataset):
        data = make_dataset(np.random.default_rng(4), 12, 2, 2)
        splits = {
            tuple(map(tuple, random_split(data, 0.5, seed=s)[0].features))
            for s in range(20)
        }
        assert len(splits) > 1

    def test_empty_part_rejected(self, make_dataset):
        data = make_dataset(np.random.default_rng(5), 3, 2, 2)
        with pytest.raises(ConfigurationError):
            random_split(data, 0.01, seed=0)


class TestStats:
    def test_single_example(self):
        data = Dataset(np.ones((1, 2)), np.array([[1, -1]]), ("a", "b"), ("x", "y"))
        meta = compute_stats(data)
        assert meta.label_cardinality == 1.0
        assert meta.label_density == 0.5
        assert meta.distinct_label_sets == 1
        assert meta.proportion_distinct == 1.0

    def test_duplicate_rows(self):
        data = Dataset(
            np.ones((2, 2)), np.array([[1, 1], [1, 1]]), ("a", "b"), ("x", "y")
        )
        meta = compute_stats(data)
        assert meta.label_cardinality == 2.0
        assert meta.label_density == 1.0
        assert meta.distinct_label_sets == 1
        assert meta.proportion_distinct == 0.5

    def test_density_cardinality_relation(self, make_dataset):
        rng = np.random.default_rng(6)
        for _ in range(10):
            data = make_dataset(rng, int(rng.integers(2, 30)), 3, int(rng.integers(2, 6)))
            meta = compute_stats(data)
            assert abs(meta.label_density * meta.num_labels - meta.label_cardinality) < 1e-12
            assert 1 <= meta.distinct_label_sets <= meta.num_examples
