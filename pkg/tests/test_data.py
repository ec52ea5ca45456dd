"""CSV round-trips, header/schema handling, and parse failures."""
import numpy as np
import pytest

from spnmix.data import Dataset, load_csv, save_csv, MetaType
from spnmix.errors import InvalidData, MixedTypeColumn, ParseError


def sample_dataset():
    values = np.array([
        [0.1, 3.0, -2.5],
        [np.nan, 7.0, 0.0],
        [1e-17, np.nan, 123456.789],
        [-4.25, 0.0, np.nan],
    ])
    metas = [MetaType.CONTINUOUS, MetaType.DISCRETE, MetaType.CONTINUOUS]
    return Dataset(values, metas, names=["a", "count", "c"])


def test_round_trip_is_lossless(tmp_path):
    ds = sample_dataset()
    p = tmp_path / "d.csv"
    save_csv(p, ds)
    back = load_csv(p)
    assert back.names == ds.names
    assert back.meta_types == ds.meta_types
    # repr() serialization keeps every float bit
    np.testing.assert_array_equal(back.values, ds.values)
    np.testing.assert_array_equal(back.observed, ds.observed)


def test_missing_cells_serialize_as_question_mark():
    txt = sample_dataset().to_csv_text()
    line = txt.splitlines()[2]          # second data row
    assert line.split(",")[0] == "?"


def test_discrete_cells_serialize_without_decimal_point():
    txt = sample_dataset().to_csv_text()
    assert txt.splitlines()[1].split(",")[1] == "3"


def test_comments_and_blank_lines_are_skipped(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# provenance note\n\nx:C,y:D\n1.5,2\n\n# trailing\n0.5,?\n")
    ds = load_csv(p)
    assert ds.n_rows == 2
    assert ds.names == ("x", "y")
    assert np.isnan(ds.values[1, 1])


def test_header_requires_meta_codes_without_schema(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y:D\n1,2\n")
    with pytest.raises(ParseError) as ei:
        load_csv(p)
    assert ei.value.line == 1 and ei.value.column == 0


def test_schema_supplies_missing_meta_codes(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n1.5,2\n")
    ds = load_csv(p, schema=["c", "d"])
    assert ds.meta_types == (MetaType.CONTINUOUS, MetaType.DISCRETE)


def test_schema_length_mismatch(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ParseError):
        load_csv(p, schema=["c"])


def test_non_numeric_cell_reports_position(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x:C,y:C\n1.0,2.0\n3.0,oops\n")
    with pytest.raises(ParseError) as ei:
        load_csv(p)
    assert ei.value.line == 3
    assert ei.value.column == 1
    assert "oops" in str(ei.value)


def test_ragged_row_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x:C,y:C\n1.0\n")
    with pytest.raises(ParseError) as ei:
        load_csv(p)
    assert ei.value.line == 2


def test_infinite_cell_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x:C\ninf\n")
    with pytest.raises(ParseError):
        load_csv(p)


def test_fractional_value_in_discrete_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x:D\n2\n2.5\n")
    with pytest.raises(MixedTypeColumn):
        load_csv(p)


def test_empty_file_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("")
    with pytest.raises(ParseError):
        load_csv(p)


def test_constructor_rejects_fractional_discrete():
    with pytest.raises(MixedTypeColumn):
        Dataset(np.array([[1.5]]), [MetaType.DISCRETE])


def test_constructor_rejects_observed_inf():
    with pytest.raises(InvalidData):
        Dataset(np.array([[np.inf]]), [MetaType.CONTINUOUS])


def test_constructor_shape_checks():
    with pytest.raises(InvalidData):
        Dataset(np.zeros(3), [MetaType.CONTINUOUS])
    with pytest.raises(InvalidData):
        Dataset(np.zeros((2, 2)), [MetaType.CONTINUOUS])
    with pytest.raises(InvalidData):
        Dataset(np.zeros((2, 1)), [MetaType.CONTINUOUS], names=["a", "b"])


def test_content_hash_ignores_comments_but_not_values(tmp_path):
    ds = sample_dataset()
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_csv(p1, ds, comments=["run one"])
    save_csv(p2, ds, comments=["totally different note"])
    assert load_csv(p1).content_hash() == load_csv(p2).content_hash()
    bumped = ds.values.copy()
    bumped[0, 0] += 1e-9
    assert ds.replace_values(bumped).content_hash() != ds.content_hash()


def test_ranges_and_take_rows():
    ds = sample_dataset()
    lo, hi = ds.ranges()[1]
    assert (lo, hi) == (0.0, 7.0)
    sub = ds.take_rows(np.array([2, 0]))
    assert sub.n_rows == 2
    np.testing.assert_array_equal(sub.values[1], ds.values[0])
    empty_col = Dataset(np.array([[np.nan], [np.nan]]),
                        [MetaType.CONTINUOUS])
    assert all(np.isnan(v) for v in empty_col.ranges()[0])
