"""Dataset representation, CSV ingestion, encoding and stratified splitting.

Labels are coded ``1`` for the positive class and ``0`` for the negative
class. Following the confusion-matrix convention used throughout this
package, *positive* is the majority class unless the schema says otherwise.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"
SD_FLOOR = 1e-12
MISSING_TOKENS = frozenset({"", "?"})


class DataError(ValueError):
    """Raised for malformed schemas, CSV files or dataset contents."""


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.values:
                raise DataError(f"categorical feature {self.name!r} has an empty value set")
            if len(set(self.values)) != len(self.values):
                raise DataError(f"categorical feature {self.name!r} has duplicate values")
        elif self.values:
            raise DataError(f"numeric feature {self.name!r} cannot list values")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


@dataclass(frozen=True)
class Schema:
    features: tuple
    label: str
    positive: Optional[str] = None

    @property
    def names(self):
        return [f.name for f in self.features]

    def to_text(self) -> str:
        lines = []
        for f in self.features:
            lines.append(" ".join([f.name, f.kind, *f.values]))
        label = f"label {self.label}"
        if self.positive is not None:
            label += f" positive={self.positive}"
        lines.append(label)
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        """Hash of feature names and kinds (value sets included)."""
        text = "\n".join(" ".join([f.name, f.kind, *f.values]) for f in self.features)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def parse_schema(text: str) -> Schema:
    """Parse the plain-text schema descriptor.

    One line per feature, ``name kind [values...]``, and one
    ``label <name> [positive=<value>]`` line. Blank lines and ``#`` comments
    are ignored.
    """
    features = []
    label = None
    positive = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "label":
            if label is not None:
                raise DataError(f"schema line {lineno}: duplicate label line")
            if len(parts) < 2:
                raise DataError(f"schema line {lineno}: label line needs a column name")
            label = parts[1]
            for extra in parts[2:]:
                key, _, value = extra.partition("=")
                if key != "positive" or not value:
                    raise DataError(f"schema line {lineno}: unexpected label option {extra!r}")
                positive = value
            continue
        if len(parts) < 2:
            raise DataError(f"schema line {lineno}: expected 'name kind [values...]'")
        name, kind, values = parts[0], parts[1], tuple(parts[2:])
        try:
            features.append(Feature(name, kind, values))
        except DataError as exc:
            raise DataError(f"schema line {lineno}: {exc}") from None
    if label is None:
        raise DataError("schema has no label line")
    if not features:
        raise DataError("schema declares no features")
    names = [f.name for f in features]
    if len(set(names)) != len(names):
        raise DataError("schema has duplicate feature names")
    if label in names:
        raise DataError(f"label column {label!r} is also declared as a feature")
    return Schema(tuple(features), label, positive)


def load_schema(path) -> Schema:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read schema {path}: {exc.strerror or exc}") from None
    return parse_schema(text)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable tabular sample.

    ``X`` is an ``n x d`` float array: numeric cells hold their value and
    categorical cells hold the index into the feature's value set (``-1``
    marks a value outside the set, only possible with ``strict=False``).
    ``y`` holds 1 for positive and 0 for negative, or is ``None`` for
    unlabeled data.
    """

    schema: Schema
    X: np.ndarray
    y: Optional[np.ndarray]
    classes: tuple = ("positive", "negative")
    name: str = "dataset"

    def __post_init__(self):
        self.X.setflags(write=False)
        if self.y is not None:
            self.y.setflags(write=False)

    @property
    def features(self):
        return self.schema.features

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.array([f.is_categorical for f in self.features], dtype=bool)

    def class_counts(self, rows=None):
        y = self.y if rows is None else self.y[np.asarray(rows, dtype=np.intp)]
        n_pos = int(np.count_nonzero(y))
        return n_pos, int(y.shape[0]) - n_pos

    def label_names(self, y) -> list:
        return [self.classes[0] if v else self.classes[1] for v in y]


def _parse_cell(feature: Feature, cell: str, lineno: int, strict: bool) -> float:
    if cell in MISSING_TOKENS:
        raise DataError(f"line {lineno}: missing value for {feature.name!r} (imputation is not supported)")
    if feature.is_categorical:
        try:
            return float(feature.values.index(cell))
        except ValueError:
            if strict:
                raise DataError(
                    f"line {lineno}: value {cell!r} not in value set of {feature.name!r}"
                ) from None
            return -1.0
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse {cell!r} as a number for {feature.name!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {lineno}: non-finite value {cell!r} for {feature.name!r}")
    return value


def load_csv(path, schema: Schema, label_column: Optional[str] = None, *,
             require_label: bool = True, classes: Optional[Sequence[str]] = None,
             strict: bool = True) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    The header must contain every schema feature; the label column is
    ``label_column`` or the schema's label. With ``require_label=False`` a
    file without the label column loads as unlabeled data. ``classes`` fixes
    the (positive, negative) label strings, as a fitted model does at
    prediction time; otherwise polarity comes from the schema or, failing
    that, the more frequent label is positive.
    """
    label_column = label_column or schema.label
    if not os.path.isfile(path):
        raise DataError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]

    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    missing = [name for name in schema.names if name not in header]
    if missing:
        raise DataError(f"{path}: header lacks schema feature(s) {', '.join(missing)}")
    has_label = label_column in header
    if require_label and not has_label:
        raise DataError(f"{path}: header lacks label column {label_column!r}")
    unknown = set(header) - set(schema.names) - {label_column}
    if unknown:
        raise DataError(f"{path}: columns not in schema: {', '.join(sorted(unknown))}")
    if not rows:
        raise DataError(f"{path}: no data rows")

    cols = [header.index(name) for name in schema.names]
    lab = header.index(label_column) if has_label else None
    X = np.empty((len(rows), len(cols)), dtype=np.float64)
    raw_labels = []
    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} cells, found {len(row)}")
        for j, (feat, c) in enumerate(zip(schema.features, cols)):
            X[i, j] = _parse_cell(feat, row[c].strip(), lineno, strict)
        if lab is not None:
            cell = row[lab].strip()
            if cell in MISSING_TOKENS:
                raise DataError(f"line {lineno}: missing label")
            raw_labels.append(cell)

    name = Path(path).stem
    if lab is None:
        return Dataset(schema, X, None, tuple(classes) if classes else ("positive", "negative"), name)

    distinct = sorted(set(raw_labels))
    if len(distinct) > 2:
        raise DataError(f"{path}: label column has {len(distinct)} distinct values, expected 2")
    if classes is not None:
        pos, neg = classes
        bad = set(distinct) - {pos, neg}
        if bad:
            raise DataError(f"{path}: unexpected label value(s) {', '.join(sorted(bad))}")
    elif schema.positive is not None:
        pos = schema.positive
        if len(distinct) == 2 and pos not in distinct:
            raise DataError(f"{path}: declared positive class {pos!r} not among labels {distinct}")
        others = [v for v in distinct if v != pos]
        neg = others[0] if others else "negative"
    else:
        counts = {v: raw_labels.count(v) for v in distinct}
        # most frequent first; ties broken by lexical order
        ordered = sorted(distinct, key=lambda v: (-counts[v], v))
        pos = ordered[0]
        neg = ordered[1] if len(ordered) > 1 else "negative"
    y = np.fromiter((1 if v == pos else 0 for v in raw_labels), dtype=np.int8, count=len(raw_labels))
    return Dataset(schema, X, y, (pos, neg), name)


def imbalance_cv_counts(n_pos: int, n_neg: int) -> float:
    """Population coefficient of variation of two class counts."""
    n = n_pos + n_neg
    if n < 1:
        raise DataError("need at least one sample")
    return abs(n_pos - n_neg) / n


def imbalance_cv(dataset: Dataset) -> float:
    return imbalance_cv_counts(*dataset.class_counts())


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


def stratified_split(dataset_or_labels, ratios=(0.5, 0.25, 0.25), seed=0) -> SplitIndices:
    """Seeded per-class shuffle and 50:25:25-style partition.

    Within each class the train and validation sizes are rounded down and
    the remainder goes to test. Positive rows are drawn first, then negative
    rows, from one ``numpy.random.default_rng(seed)`` stream.
    """
    y = dataset_or_labels.y if isinstance(dataset_or_labels, Dataset) else np.asarray(dataset_or_labels)
    if y is None:
        raise DataError("cannot split unlabeled data")
    r_train, r_val, r_test = ratios
    if min(ratios) < 0 or abs(r_train + r_val + r_test - 1.0) > 1e-9:
        raise DataError(f"split ratios must be non-negative and sum to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        if idx.size < 4:
            raise DataError(f"class {cls} has {idx.size} samples; stratified split needs at least 4")
        idx = rng.permutation(idx)
        n_tr = int(math.floor(r_train * idx.size + 1e-9))
        n_va = int(math.floor(r_val * idx.size + 1e-9))
        parts[0].append(idx[:n_tr])
        parts[1].append(idx[n_tr:n_tr + n_va])
        parts[2].append(idx[n_tr + n_va:])
    train, val, test = (np.sort(np.concatenate(p)).astype(np.intp) for p in parts)
    return SplitIndices(train, val, test)


@dataclass(frozen=True, eq=False)
class EncoderState:
    """Column layout and standardization parameters.

    ``features`` lists the encoded source features in output order.
    Numeric features contribute one z-scored column; categorical features
    contribute one column per value in their schema value set.
    """

    features: tuple
    kinds: tuple
    means: np.ndarray
    sds: np.ndarray
    sizes: tuple
    _offsets: tuple = field(default=(), repr=False)

    def __post_init__(self):
        offsets, pos = [], 0
        for size in self.sizes:
            offsets.append(pos)
            pos += size
        object.__setattr__(self, "_offsets", tuple(offsets))

    @property
    def width(self) -> int:
        return int(sum(self.sizes))


def fit_encoder(dataset: Dataset, train, features=None) -> EncoderState:
    """Fit z-score parameters on ``train`` rows; one-hot maps cover the full value sets."""
    train = np.asarray(train, dtype=np.intp)
    if train.size == 0:
        raise DataError("cannot fit an encoder on zero rows")
    features = tuple(range(dataset.d)) if features is None else tuple(int(j) for j in features)
    kinds, means, sds, sizes = [], [], [], []
    for j in features:
        feat = dataset.features[j]
        if feat.is_categorical:
            kinds.append(CATEGORICAL)
            means.append(0.0)
            sds.append(1.0)
            sizes.append(len(feat.values))
        else:
            col = dataset.X[train, j]
            kinds.append(NUMERIC)
            means.append(float(col.mean()))
            sds.append(max(float(col.std()), SD_FLOOR))
            sizes.append(1)
    return EncoderState(features, tuple(kinds), np.array(means), np.array(sds), tuple(sizes))


def encode(dataset: Dataset, rows, encoder: EncoderState, extra_column=None) -> np.ndarray:
    """Encode ``rows`` as ``[standardized numerics | one-hot categoricals | extra]``.

    Columns follow the encoder's feature order. A constant training column
    encodes to 0. Out-of-set categorical indices (``-1``) encode as all zeros.
    """
    rows = np.asarray(rows, dtype=np.intp)
    width = encoder.width + (0 if extra_column is None else 1)
    out = np.zeros((rows.size, width), dtype=np.float64)
    for j, kind, mean, sd, size, off in zip(encoder.features, encoder.kinds, encoder.means,
                                            encoder.sds, encoder.sizes, encoder._offsets):
        col = dataset.X[rows, j]
        if kind == NUMERIC:
            out[:, off] = (col - mean) / sd
        else:
            codes = col.astype(np.intp)
            ok = codes >= 0
            out[np.flatnonzero(ok), off + codes[ok]] = 1.0
    if extra_column is not None:
        extra = np.asarray(extra_column)
        if extra.shape != (rows.size,):
            raise DataError(f"extra column has {extra.size} entries for {rows.size} rows")
        out[:, -1] = (extra != 0).astype(np.float64)
    return out


def decode(matrix: np.ndarray, encoder: EncoderState) -> np.ndarray:
    """Invert :func:`encode` on the encoder's columns (extra column ignored).

    Returns raw numeric values and category indices; all-zero one-hot
    blocks decode to ``-1``.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    out = np.empty((matrix.shape[0], len(encoder.features)), dtype=np.float64)
    for i, (kind, mean, sd, size, off) in enumerate(zip(encoder.kinds, encoder.means, encoder.sds,
                                                         encoder.sizes, encoder._offsets)):
        if kind == NUMERIC:
            out[:, i] = matrix[:, off] * sd + mean
        else:
            block = matrix[:, off:off + size]
            codes = block.argmax(axis=1).astype(np.float64)
            codes[block.max(axis=1) <= 0] = -1.0
            out[:, i] = codes
    return out


BUNDLED = ("pima", "german_credit", "breast_cancer", "page_blocks")


def bundled_path(name: str):
    """Return ``(csv_path, schema_path)`` of a bundled public dataset."""
    if name not in BUNDLED:
        raise DataError(f"no bundled dataset named {name!r}; choose from {', '.join(BUNDLED)}")
    here = Path(__file__).resolve().parent / "datasets"
    return here / f"{name}.csv", here / f"{name}.schema"


def load_bundled(name: str) -> Dataset:
    csv_path, schema_path = bundled_path(name)
    return load_csv(csv_path, load_schema(schema_path))
