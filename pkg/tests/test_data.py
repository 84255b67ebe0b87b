import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superensemble.data import (BUNDLED, DataError, decode, encode, fit_encoder, imbalance_cv,
                                imbalance_cv_counts, load_bundled, load_csv, parse_schema, stratified_split)

from conftest import make_dataset

SCHEMA = "color categorical red green blue\nsize numeric\nlabel y\n"


def test_parse_schema_roundtrip():
    s = parse_schema("# comment\n" + SCHEMA)
    assert s.names == ["color", "size"]
    assert s.features[0].values == ("red", "green", "blue")
    assert parse_schema(s.to_text()) == s
    assert s.fingerprint() == parse_schema(s.to_text()).fingerprint()


@pytest.mark.parametrize("text", [
    "a numeric\n",                                  # no label
    "label y\n",                                    # no features
    "a numeric\na numeric\nlabel y\n",              # duplicate feature
    "a categorical\nlabel y\n",                     # empty value set
    "a categorical x x\nlabel y\n",                 # duplicate value
    "a ordinal\nlabel y\n",                         # unknown kind
    "a numeric\nlabel y\nlabel z\n",                # two label lines
    "y numeric\nlabel y\n",                         # label is a feature
])
def test_parse_schema_rejects(text):
    with pytest.raises(DataError):
        parse_schema(text)


def test_fingerprint_tracks_value_sets():
    a = parse_schema(SCHEMA)
    b = parse_schema(SCHEMA.replace("blue", "teal"))
    assert a.fingerprint() != b.fingerprint()


def test_load_csv_encodes_categories_and_polarity(write_csv):
    path = write_csv("d.csv", "size,color,y\n1.5,red,a\n2,blue,b\n3,green,a\n")
    ds = load_csv(path, parse_schema(SCHEMA))
    assert ds.X.tolist() == [[0, 1.5], [2, 2.0], [1, 3.0]]
    assert ds.classes == ("a", "b")          # majority label is positive
    assert ds.y.tolist() == [1, 0, 1]
    assert not ds.X.flags.writeable


def test_load_csv_declared_positive(write_csv):
    path = write_csv("d.csv", "color,size,y\nred,1,a\nblue,2,b\ngreen,3,a\n")
    ds = load_csv(path, parse_schema(SCHEMA.replace("label y", "label y positive=b")))
    assert ds.classes == ("b", "a")
    assert ds.y.tolist() == [0, 1, 0]


def test_load_csv_unlabeled(write_csv):
    path = write_csv("d.csv", "color,size\nred,1\n")
    with pytest.raises(DataError):
        load_csv(path, parse_schema(SCHEMA))
    ds = load_csv(path, parse_schema(SCHEMA), require_label=False, classes=("a", "b"))
    assert ds.y is None and ds.classes == ("a", "b")


@pytest.mark.parametrize("body", [
    "color,y\nred,a\n",                 # missing feature column
    "color,size,y,extra\nred,1,a,0\n",  # column not in schema
    "color,size,y\nred,?,a\n",          # missing value
    "color,size,y\nred,,a\n",           # empty cell
    "color,size,y\npurple,1,a\n",       # value outside the set
    "color,size,y\nred,abc,a\n",        # not a number
    "color,size,y\nred,inf,a\n",        # not finite
    "color,size,y\nred,1,a\nred,2,b\nred,3,c\n",  # three labels
    "color,size,y\nred,1\n",            # short row
    "color,size,y\n",                   # no rows
])
def test_load_csv_errors(write_csv, body):
    with pytest.raises(DataError):
        load_csv(write_csv("d.csv", body), parse_schema(SCHEMA))


def test_missing_file():
    with pytest.raises(DataError):
        load_csv("/nonexistent/file.csv", parse_schema(SCHEMA))


def test_non_strict_unknown_category(write_csv):
    path = write_csv("d.csv", "color,size,y\npurple,1,a\nred,2,b\n")
    ds = load_csv(path, parse_schema(SCHEMA), strict=False)
    assert ds.X[0, 0] == -1
    enc = fit_encoder(ds, [0, 1])
    assert encode(ds, [0], enc)[0, :3].tolist() == [0, 0, 0]


@pytest.mark.parametrize("counts,expected", [
    ((201, 85), 0.41), ((700, 300), 0.40), ((4913, 560), 0.80), ((500, 268), 0.30),
])
def test_imbalance_cv_published_values(counts, expected):
    assert abs(round(imbalance_cv_counts(*counts), 2) - expected) <= 0.005


def test_imbalance_cv_edge_cases():
    assert imbalance_cv_counts(50, 50) == 0.0
    assert imbalance_cv_counts(10, 0) == 1.0
    with pytest.raises(DataError):
        imbalance_cv_counts(0, 0)


def test_bundled_datasets_load():
    expected = {"pima": (768, 500), "german_credit": (1000, 700), "breast_cancer": (277, 196),
                "page_blocks": (5472, 4913)}
    for name in BUNDLED:
        ds = load_bundled(name)
        assert (ds.n, ds.class_counts()[0]) == expected[name]
    assert round(imbalance_cv(load_bundled("pima")), 2) == 0.30


def test_stratified_split_sizes_pima():
    ds = load_bundled("pima")
    s = stratified_split(ds, seed=3)
    # per class: floor(n/2), floor(n/4), remainder
    assert (s.train.size, s.validation.size, s.test.size) == (250 + 134, 125 + 67, 125 + 67)
    assert ds.class_counts(s.train) == (250, 134)
    assert ds.class_counts(s.test) == (125, 67)


@settings(max_examples=60, deadline=None)
@given(n_pos=st.integers(4, 60), n_neg=st.integers(4, 60), seed=st.integers(0, 2**32))
def test_stratified_split_partition(n_pos, n_neg, seed):
    y = np.array([1] * n_pos + [0] * n_neg)
    s = stratified_split(y, seed=seed)
    allidx = np.concatenate([s.train, s.validation, s.test])
    assert sorted(allidx.tolist()) == list(range(y.size))
    assert y[s.train].sum() == n_pos // 2
    assert y[s.validation].sum() == n_pos // 4
    assert (y[s.train] == 0).sum() == n_neg // 2
    again = stratified_split(y, seed=seed)
    assert np.array_equal(s.test, again.test)


def test_stratified_split_rejects_tiny_class():
    with pytest.raises(DataError):
        stratified_split(np.array([1, 1, 1, 0, 0, 0, 0, 0]))


def test_encoder_standardizes_on_train_rows_only():
    ds = make_dataset([[0, 1.0], [1, 3.0], [2, 100.0]], [1, 0, 1], categorical=(0,))
    enc = fit_encoder(ds, [0, 1])
    Z = encode(ds, [0, 1, 2], enc, extra_column=[1, 0, 1])
    assert Z.shape == (3, 3 + 1 + 1)
    assert Z[:, :3].tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert Z[:2, 3].tolist() == [-1.0, 1.0]
    assert Z[2, 3] == pytest.approx(98.0)
    assert Z[:, 4].tolist() == [1, 0, 1]


def test_encoder_constant_column_and_subset():
    ds = make_dataset([[5.0, 1.0], [5.0, 2.0]], [1, 0])
    enc = fit_encoder(ds, [0, 1], features=[1, 0])
    Z = encode(ds, [0, 1], enc)
    assert Z[:, 1].tolist() == [0.0, 0.0]
    assert Z[:, 0].tolist() == [-1.0, 1.0]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_decode_inverts_encode(seed):
    r = np.random.default_rng(seed)
    X = np.column_stack([r.normal(size=20) * 10, r.integers(0, 4, 20), r.normal(size=20)])
    ds = make_dataset(X, r.integers(0, 2, 20), categorical=(1,), values={1: 4})
    enc = fit_encoder(ds, np.arange(20))
    back = decode(encode(ds, np.arange(20), enc), enc)
    np.testing.assert_allclose(back, X, rtol=1e-12, atol=1e-12)
