import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from petbench.data import (
    AttributeSchema, Dataset, Encoder, ParseError, SchemaError, StratificationError,
    binarize_target, clean, drop_columns, encode, load_csv, split,
)

from conftest import ADULT_CSV, STUDENT_CSV, make_dataset

# Counted with `grep -vc '?' data/adult/adult.csv` minus the header line.
ADULT_RAW_ROWS = 48842
ADULT_CLEAN_ROWS = 45222

SCHEMA = [AttributeSchema("a"), AttributeSchema("b", "integer"), AttributeSchema("y")]


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- load_csv ------------------------------------------------------------------

def test_load_header_in_any_order(tmp_path):
    d = load_csv(write(tmp_path, "y,a,b\nyes,x,1\nno,z,2\n"), SCHEMA, "y")
    assert d.names == ["a", "b", "y"]
    assert d.rows == (("x", "1", "yes"), ("z", "2", "no"))


def test_load_empty_file_with_header(tmp_path):
    assert load_csv(write(tmp_path, "a,b,y\n"), SCHEMA, "y").n == 0


def test_short_row_reports_its_line(tmp_path):
    with pytest.raises(ParseError) as info:
        load_csv(write(tmp_path, "a,b,y\nx,1,yes\nx,2\n"), SCHEMA, "y")
    assert info.value.line == 3


def test_unknown_column(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, "a,b,y,extra\nx,1,yes,0\n"), SCHEMA, "y")


def test_missing_column(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, "a,y\nx,yes\n"), SCHEMA, "y")


def test_semicolon_and_quoted_fields(tmp_path):
    d = load_csv(write(tmp_path, 'a;b;y\n"x;1";3;"yes"\n'), SCHEMA, "y", delimiter=";")
    assert d.rows == (("x;1", "3", "yes"),)


def test_numeric_column_rejects_text(tmp_path):
    with pytest.raises(ParseError):
        load_csv(write(tmp_path, "a,b,y\nx,one,yes\n"), SCHEMA, "y")


def test_numeric_column_accepts_missing_token(tmp_path):
    d = load_csv(write(tmp_path, "a,b,y\nx,?,yes\n"), SCHEMA, "y")
    assert d.rows[0][1] == "?"


def test_duplicate_schema_names_rejected():
    with pytest.raises(SchemaError):
        Dataset((AttributeSchema("a"), AttributeSchema("a")), (), "a")


@pytest.mark.skipif(not ADULT_CSV.exists(), reason="Adult data not fetched")
def test_adult_raw_and_clean_counts(adult_config):
    raw = load_csv(adult_config.dataset.path, adult_config.dataset.schema, "income")
    assert raw.n == ADULT_RAW_ROWS
    assert clean(raw).n == ADULT_CLEAN_ROWS
    assert set(clean(raw).column("income")) == {"<=50K", ">50K"}


# --- clean ---------------------------------------------------------------------

def test_clean_without_missing_is_identity():
    d = make_dataset({"a": ["x", "y"], "y": [0, 1]}, "y")
    assert clean(d) == d


def test_clean_drops_rows_and_keeps_order():
    d = make_dataset({"a": ["x", "?", "z"], "y": [1, 2, 3]}, "y")
    assert clean(d).rows == (("x", "1"), ("z", "3"))


def test_custom_missing_token():
    schema = (AttributeSchema("a", missing_token="NA"), AttributeSchema("y"))
    d = Dataset(schema, (("NA", "1"), ("?", "2")), "y")
    assert clean(d).rows == (("?", "2"),)


cells = st.sampled_from(["a", "b", "?"])


@given(st.lists(st.tuples(cells, cells), max_size=30))
def test_clean_is_idempotent_and_leaves_no_missing(rows):
    d = Dataset((AttributeSchema("p"), AttributeSchema("q")), tuple(rows), "q")
    once = clean(d)
    assert clean(once) == once
    assert all("?" not in row for row in once.rows)
    assert list(once.rows) == [r for r in rows if "?" not in r]


def test_drop_columns():
    d = make_dataset({"a": [1], "b": [2], "y": [3]}, "y")
    assert drop_columns(d, ["b"]).names == ["a", "y"]
    with pytest.raises(SchemaError):
        drop_columns(d, ["y"])


# --- binarize_target -------------------------------------------------------------

def test_binarize_threshold_is_inclusive():
    d = make_dataset({"g": [9, 10, 20]}, "g", kinds={"g": "integer"})
    out = binarize_target(d, 10)
    assert out.column("g") == ["fail", "pass", "pass"]
    assert out.attribute("g").kind == "categorical"


def test_binarize_all_below():
    d = make_dataset({"g": [1, 5, 9]}, "g", kinds={"g": "integer"})
    assert set(binarize_target(d, 10).column("g")) == {"fail"}


def test_binarize_rejects_categorical_target():
    with pytest.raises(TypeError):
        binarize_target(make_dataset({"g": ["A"]}, "g"), 10)


@given(st.lists(st.integers(0, 20), max_size=40), st.integers(0, 20))
def test_binarize_preserves_n(grades, threshold):
    d = make_dataset({"g": grades}, "g", kinds={"g": "integer"})
    assert binarize_target(d, threshold).n == d.n


@pytest.mark.skipif(not STUDENT_CSV.exists(), reason="Student Performance file not supplied")
def test_student_class_balance():
    from petbench.config import load_config
    from conftest import ROOT

    d = load_config(ROOT / "configs" / "student.yaml").dataset.load()
    assert d.n == 649
    # G3 >= 10 in the Portuguese file, counted from the raw CSV
    raw = load_csv(STUDENT_CSV, load_config(ROOT / "configs" / "student.yaml").dataset.schema,
                   "G3", ";")
    expected = sum(float(g) >= 10 for g in raw.column("G3"))
    assert d.column("G3").count("pass") == expected


# --- split -----------------------------------------------------------------------

def test_split_balanced_ten():
    d = make_dataset({"i": range(10), "y": [0, 1] * 5}, "y")
    train, test = split(d, 0.2, seed=3)
    assert (train.n, test.n) == (8, 2)
    assert sorted(test.column("y")) == ["0", "1"]
    assert split(d, 0.2, seed=3) == (train, test)


def test_split_two_rows_half():
    d = make_dataset({"i": [0, 1], "y": ["a", "b"]}, "y")
    train, test = split(d, 0.5, seed=0)
    assert train.n == test.n == 1
    assert {train.column("y")[0], test.column("y")[0]} == {"a", "b"}


def test_split_seeds_change_membership():
    d = make_dataset({"i": range(50), "y": [0, 1] * 25}, "y")
    reference = set(split(d, 0.2, seed=0)[1].column("i"))
    differing = sum(set(split(d, 0.2, seed=s)[1].column("i")) != reference for s in range(1, 101))
    assert differing >= 99


def test_split_rejects_bad_fraction():
    d = make_dataset({"y": [0, 1]}, "y")
    with pytest.raises(ValueError):
        split(d, 1.0)


def test_stratification_error_is_a_value_error():
    assert issubclass(StratificationError, ValueError)


@settings(max_examples=60)
@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=60),
       st.floats(0.05, 0.95), st.integers(0, 10_000))
def test_split_partitions_and_sizes(labels, fraction, seed):
    d = make_dataset({"i": range(len(labels)), "y": labels}, "y")
    train, test = split(d, fraction, seed)
    ids_train, ids_test = train.column("i"), test.column("i")
    assert not set(ids_train) & set(ids_test)
    assert sorted(ids_train + ids_test, key=int) == d.column("i")
    assert test.n == int(np.floor(fraction * d.n + 0.5))
    # stratified: each class within one row of its proportional share
    for c in set(labels):
        share = fraction * labels.count(c)
        assert abs(test.column("y").count(c) - share) < 1 + 1e-9


# --- encode ----------------------------------------------------------------------

def test_one_hot():
    d = make_dataset({"c": ["A", "B"], "y": [0, 1]}, "y")
    X, y = encode(d)[0]
    assert X.tolist() == [[1, 0], [0, 1]]
    assert y.tolist() == [0, 1]


def test_min_max():
    d = make_dataset({"v": [0, 5, 10], "y": [0, 1, 0]}, "y", kinds={"v": "integer"})
    X, _ = encode(d)[0]
    assert X[:, 0].tolist() == [0.0, 0.5, 1.0]


def test_generalized_values_are_distinct_categories():
    d = make_dataset({"z": ["1*", "10"], "y": [0, 1]}, "y")
    enc = Encoder().fit(d)
    assert enc.feature_names() == ["z=1*", "z=10"]


def test_unseen_category_is_zero_block():
    train = make_dataset({"c": ["A", "B"], "y": [0, 1]}, "y")
    test = make_dataset({"c": ["C"], "y": [0]}, "y")
    (X_train, _), (X_test, _) = encode(train, test)
    assert X_train.shape[1] == 2
    assert X_test.tolist() == [[0, 0]]


def test_test_data_scaled_with_train_statistics():
    train = make_dataset({"v": [0, 10], "y": [0, 1]}, "y", kinds={"v": "integer"})
    test = make_dataset({"v": [20], "y": [0]}, "y", kinds={"v": "integer"})
    X_test, _ = encode(train, test)[1]
    assert X_test[0, 0] == 2.0


def test_suppressed_numeric_gets_indicator():
    d = make_dataset({"v": [0, "*", 4], "y": [0, 1, 0]}, "y", kinds={"v": "integer"})
    enc = Encoder().fit(d)
    X, _ = enc.transform(d)
    assert enc.feature_names() == ["v", "v=*"]
    assert X.tolist() == [[0, 0], [0, 1], [1, 0]]


def test_interval_labels_fall_back_to_one_hot():
    d = make_dataset({"v": ["[20,30)", "[30,40)"], "y": [0, 1]}, "y", kinds={"v": "integer"})
    assert Encoder().fit(d).n_features == 2


def test_labels_must_be_binary():
    with pytest.raises(ValueError):
        Encoder().fit(make_dataset({"c": [1, 2, 3], "y": ["a", "b", "c"]}, "y"))


@given(st.lists(st.sampled_from(["red", "green", "blue", "*"]), min_size=2, max_size=30))
def test_one_hot_round_trip(values):
    d = make_dataset({"c": values, "y": [0, 1] * (len(values) // 2) + [0] * (len(values) % 2)}, "y")
    enc = Encoder().fit(d, labels=["0", "1"])
    X, _ = enc.transform(d)
    assert (X.sum(axis=1) == 1).all()
    assert enc.decode_categories("c", X.argmax(axis=1)) == values
