"""Multi-label dataset loading, validation, normalization and splitting.

On-disk label encodings {0,1} and {-1,+1} are both accepted; internally
labels are always {-1,+1}. Supported formats: ARFF (dense and sparse bodies,
numeric and binary-nominal attributes, label columns named by a MULAN-style
XML list or taken as the trailing k attributes) and plain numeric CSV with
trailing label columns.
"""

from __future__ import annotations

import csv
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    ParseError,
    UnsupportedFeatureError,
    ValidationError,
)


def _freeze(arr):
    # C-contiguous so BLAS rounding is identical before and after a
    # serialization round trip; read-only to back the immutability contract.
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix (n, d) with label matrix (n, q) in {-1,+1}."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    label_names: tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or labels.ndim != 2:
            raise ValidationError("features and labels must be 2-D matrices")
        n, d = features.shape
        q = labels.shape[1]
        if labels.shape[0] != n:
            raise ValidationError(
                f"row mismatch: {n} feature rows vs {labels.shape[0]} label rows"
            )
        if n < 1 or d < 1 or q < 1:
            raise ValidationError("need at least one example, feature and label")
        if not np.all(np.isfinite(features)):
            raise ValidationError("features contain non-finite entries")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValidationError("labels must contain only -1 and +1")
        if len(self.feature_names) != d or len(self.label_names) != q:
            raise ValidationError("name sequences must match matrix widths")
        object.__setattr__(self, "features", _freeze(features))
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "label_names", tuple(self.label_names))

    @property
    def num_examples(self):
        return self.features.shape[0]

    @property
    def num_features(self):
        return self.features.shape[1]

    @property
    def num_labels(self):
        return self.labels.shape[1]

    def take(self, indices) -> "Dataset":
        """Row subset as a new Dataset."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx], self.labels[idx], self.feature_names, self.label_names
        )

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names, self.label_names)


@dataclass(frozen=True)
class DatasetMeta:
    num_examples: int
    num_features: int
    num_labels: int
    label_cardinality: float
    label_density: float
    distinct_label_sets: int
    proportion_distinct: float

    def to_dict(self):
        return {
            "num_examples": self.num_examples,
            "num_features": self.num_features,
            "num_labels": self.num_labels,
            "label_cardinality": self.label_cardinality,
            "label_density": self.label_density,
            "distinct_label_sets": self.distinct_label_sets,
            "proportion_distinct": self.proportion_distinct,
        }


@dataclass(frozen=True)
class NormStats:
    """Per-feature affine normalization: x -> (x - center) / scale."""

    center: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64)
        scale = np.asarray(self.scale, dtype=np.float64)
        if center.shape != scale.shape or center.ndim != 1:
            raise ValidationError("center and scale must be 1-D and equal length")
        if not np.all(scale > 0):
            raise ValidationError("scales must be strictly positive")
        object.__setattr__(self, "center", _freeze(center))
        object.__setattr__(self, "scale", _freeze(scale))

    @classmethod
    def identity(cls, d):
        return cls(np.zeros(d), np.ones(d))

    def transform(self, features):
        return (np.asarray(features, dtype=np.float64) - self.center) / self.scale

    def inverse(self, features):
        return np.asarray(features, dtype=np.float64) * self.scale + self.center

    def apply(self, data: Dataset) -> Dataset:
        return data.with_features(self.transform(data.features))


# ---------------------------------------------------------------------------
# ARFF

_ATTR_RE = re.compile(
    r"""^@attribute\s+(?:'(?P<sq>[^']*)'|"(?P<dq>[^"]*)"|(?P<bare>\S+))\s+(?P<type>.+)$""",
    re.IGNORECASE,
)

_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _parse_arff_header(lines, path):
    """Yields (attributes, data_start_line). attributes = [(name, is_binary_nominal)]."""
    attributes = []
    for lineno, raw in lines:
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        lowered = line.lower()
        if lowered.startswith("@relation"):
            continue
        if lowered.startswith("@attribute"):
            m = _ATTR_RE.match(line)
            if m is None:
                raise ParseError("malformed @attribute line", path, lineno)
            name = m.group("sq") or m.group("dq") or m.group("bare")
            type_spec = m.group("type").strip()
            if type_spec.lower() in _NUMERIC_TYPES:
                attributes.append(name)
            elif type_spec.startswith("{") and type_spec.endswith("}"):
                values = {
                    v.strip().strip("'\"") for v in type_spec[1:-1].split(",")
                }
                if values <= {"0", "1"}:
                    attributes.append(name)
                else:
                    raise UnsupportedFeatureError(
                        f"{path}:{lineno}: nominal attribute {name!r} has domain "
                        f"{sorted(values)}; only binary {{0,1}} nominals are supported"
                    )
            else:
                raise UnsupportedFeatureError(
                    f"{path}:{lineno}: attribute {name!r} has unsupported type "
                    f"{type_spec!r}"
                )
            continue
        if lowered.startswith("@data"):
            if not attributes:
                raise ParseError("@data before any @attribute", path, lineno)
            return attributes
        raise ParseError(f"unexpected line {line[:40]!r}", path, lineno)
    raise ParseError("no @data section found", path, None)


def _parse_value(token, path, lineno):
    token = token.strip().strip("'\"")
    if token == "?":
        raise UnsupportedFeatureError(
            f"{path}:{lineno}: missing values ('?') are not supported"
        )
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", path, lineno) from None


def _parse_arff_body(lines, num_attrs, path):
    rows = []
    for lineno, raw in lines:
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("{"):
            if not line.endswith("}"):
                raise ParseError("unterminated sparse row", path, lineno)
            row = np.zeros(num_attrs, dtype=np.float64)
            body = line[1:-1].strip()
            if body:
                for pair in body.split(","):
                    parts = pair.split()
                    if len(parts) != 2:
                        raise ParseError(
                            f"sparse entry {pair.strip()!r} is not 'index value'",
                            path,
                            lineno,
                        )
                    try:
                        idx = int(parts[0])
                    except ValueError:
                        raise ParseError(
                            f"sparse index {parts[0]!r} is not an integer", path, lineno
                        ) from None
                    if not 0 <= idx < num_attrs:
                        raise ParseError(
                            f"sparse index {idx} out of range [0, {num_attrs})",
                            path,
                            lineno,
                        )
                    row[idx] = _parse_value(parts[1], path, lineno)
            rows.append(row)
        else:
            tokens = line.split(",")
            if len(tokens) != num_attrs:
                raise ParseError(
                    f"expected {num_attrs} values, found {len(tokens)}", path, lineno
                )
            rows.append(
                np.array([_parse_value(t, path, lineno) for t in tokens])
            )
    if not rows:
        raise ParseError("empty @data section", path, None)
    return np.vstack(rows)


def read_label_xml(path) -> list[str]:
    """Label names from a MULAN-style XML list (<label name="..."/> entries)."""
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise ParseError(f"invalid XML: {exc}", path) from None
    names = [
        el.get("name")
        for el in root.iter()
        if el.tag.rsplit("}", 1)[-1] == "label" and el.get("name")
    ]
    if not names:
        raise ParseError("no <label name=.../> entries found", path)
    return names


def _remap_labels(raw, names):
    labels = np.empty(raw.shape, dtype=np.int64)
    ok = np.isin(raw, (0.0, 1.0, -1.0))
    if not np.all(ok):
        i, j = np.argwhere(~ok)[0]
        raise ValidationError(
            f"label {names[j]!r} has value {raw[i, j]!r} outside {{0, 1, -1}}"
        )
    labels[raw > 0] = 1
    labels[raw <= 0] = -1
    return labels


def load_arff(path, label_spec) -> Dataset:
    """Load an ARFF file.

    ``label_spec`` is either an integer (the trailing k attributes are
    labels) or a path to a MULAN label-list XML naming the label attributes.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    with path.open("r", encoding="utf-8") as fh:
        lines = list(enumerate(fh, start=1))
    attributes = _parse_arff_header(iter(lines), path)
    data_idx = next(
        i for i, (_, raw) in enumerate(lines) if raw.strip().lower().startswith("@data")
    )
    matrix = _parse_arff_body(iter(lines[data_idx + 1 :]), len(attributes), path)

    if isinstance(label_spec, int):
        if not 1 <= label_spec < len(attributes):
            raise ConfigurationError(
                f"label count {label_spec} must be in [1, {len(attributes) - 1}]"
            )
        label_cols = list(range(len(attributes) - label_spec, len(attributes)))
    else:
        wanted = set(read_label_xml(label_spec))
        label_cols = [i for i, name in enumerate(attributes) if name in wanted]
        missing = wanted - {attributes[i] for i in label_cols}
        if missing:
            raise ConfigurationError(
                f"label names not present in ARFF attributes: {sorted(missing)}"
            )
    feature_cols = [i for i in range(len(attributes)) if i not in set(label_cols)]
    if not feature_cols:
        raise ConfigurationError("every attribute was declared a label")

    label_names = [attributes[i] for i in label_cols]
    return Dataset(
        matrix[:, feature_cols],
        _remap_labels(matrix[:, label_cols], label_names),
        tuple(attributes[i] for i in feature_cols),
        tuple(label_names),
    )


# ---------------------------------------------------------------------------
# CSV


def _is_number(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def read_numeric_csv(path):
    """Rectangular numeric CSV as (matrix, column_names).

    A header row is auto-detected when the first line has any non-numeric
    cell; otherwise names are generated as col0..col{k-1}.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [(i, row) for i, row in enumerate(reader, start=1) if row]
    if not rows:
        raise ParseError("empty file", path)

    first_line, first = rows[0]
    names = None
    if any(not _is_number(cell) for cell in first):
        names = [cell.strip() for cell in first]
        rows = rows[1:]
        if not rows:
            raise ParseError("no data rows after header", path, first_line)

    width = len(rows[0][1])
    matrix = np.empty((len(rows), width), dtype=np.float64)
    for out_i, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(
                f"ragged row: expected {width} cells, found {len(row)}", path, lineno
            )
        for j, cell in enumerate(row):
            if not _is_number(cell):
                raise ParseError(f"non-numeric cell {cell!r}", path, lineno)
            matrix[out_i, j] = float(cell)
    if names is None:
        names = [f"col{j}" for j in range(width)]
    if len(names) != width:
        raise ParseError("header width does not match data width", path, first_line)
    return matrix, names


def load_csv(path, num_labels) -> Dataset:
    """Load a numeric CSV whose trailing ``num_labels`` columns are labels."""
    matrix, names = read_numeric_csv(path)
    if not 1 <= num_labels < matrix.shape[1]:
        raise ConfigurationError(
            f"label count {num_labels} must be in [1, {matrix.shape[1] - 1}]"
        )
    d = matrix.shape[1] - num_labels
    label_names = names[d:]
    return Dataset(
        matrix[:, :d],
        _remap_labels(matrix[:, d:], label_names),
        tuple(names[:d]),
        tuple(label_names),
    )


def save_csv(data: Dataset, path, header=True):
    """Write a Dataset as CSV (features to 17 significant digits, labels as
    integers); ``load_csv`` round-trips it."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(list(data.feature_names) + list(data.label_names))
        for x, y in zip(data.features, data.labels):
            writer.writerow([f"{v:.17g}" for v in x] + [str(int(v)) for v in y])


# ---------------------------------------------------------------------------
# Normalization, splitting, statistics


def normalize(data: Dataset, method="zscore") -> tuple[Dataset, NormStats]:
    """Fit per-feature normalization on ``data`` and apply it.

    zscore: mean 0 / std 1 (constant features are centered only);
    minmax: range [0,1] (constant features map to 0); none: identity.
    """
    X = data.features
    if method == "none":
        stats = NormStats.identity(X.shape[1])
    elif method == "zscore":
        center = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        stats = NormStats(center, scale)
    elif method == "minmax":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        span = np.where(span > 0, span, 1.0)
        stats = NormStats(lo, span)
    else:
        raise ConfigurationError(
            f"unknown normalization {method!r}; expected none, zscore or minmax"
        )
    return stats.apply(data), stats


def random_split(data: Dataset, train_fraction, seed) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive train/test partition.

    Indices are drawn from numpy's PCG64 generator seeded with ``seed``, so
    identical seeds give identical splits. Train size is
    round(train_fraction * n).
    """
    n = data.num_examples
    if n < 2:
        raise ConfigurationError("need at least two examples to split")
    if not 0 < train_fraction < 1:
        raise ConfigurationError("train_fraction must lie strictly in (0, 1)")
    n_train = int(round(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise ConfigurationError(
            f"train_fraction {train_fraction} leaves an empty part for n={n}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return data.take(train_idx), data.take(test_idx)


def compute_stats(data: Dataset) -> DatasetMeta:
    """Label cardinality/density and distinct label-set counts."""
    positives = (data.labels == 1).sum(axis=1)
    cardinality = float(positives.mean())
    distinct = int(np.unique(data.labels, axis=0).shape[0])
    n, q = data.num_examples, data.num_labels
    return DatasetMeta(
        num_examples=n,
        num_features=data.num_features,
        num_labels=q,
        label_cardinality=cardinality,
        label_density=cardinality / q,
        distinct_label_sets=distinct,
        proportion_distinct=distinct / n,
    )
