import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magsense.dataset import COLUMNS, HEADER, Dataset, read_csv, to_csv_text, write_csv
from magsense.errors import SchemaError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
maybe = st.one_of(finite, st.just(float("nan")))


@st.composite
def datasets(draw):
    n = draw(st.integers(1, 12))
    t = np.cumsum(np.abs(draw(st.lists(st.floats(0, 1e6), min_size=n, max_size=n))))
    cols = {"time_s": t}
    for name in ("cycle_id", "block_id"):
        cols[name] = draw(st.lists(st.integers(-2**40, 2**40), min_size=n, max_size=n))
    for name in ("load_n", "ref_stress_pa", "ref_strain", "ref_temp_c", "l_temp_ch_h"):
        cols[name] = draw(st.lists(maybe, min_size=n, max_size=n))
    cols["l_strain_ch_h"] = draw(st.lists(finite, min_size=n, max_size=n))
    return Dataset(**cols)


def _same(a, b):
    for name in COLUMNS:
        x, y = getattr(a, name), getattr(b, name)
        assert np.array_equal(x, y, equal_nan=True), name


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_round_trip_lossless(tmp_path_factory, ds):
    path = tmp_path_factory.mktemp("ds") / "d.csv"
    write_csv(ds, path)
    _same(ds, read_csv(path))


def test_line_endings_and_header(tmp_path):
    ds = Dataset.build(2, time_s=[0.0, 1.0], l_strain_ch_h=[31.8e-6, 31.9e-6])
    write_csv(ds, tmp_path / "d.csv")
    raw = (tmp_path / "d.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert raw.split(b"\n")[0].decode() == HEADER
    assert to_csv_text(ds).count("\n") == 3


def _write(tmp_path, header, row):
    p = tmp_path / "d.csv"
    p.write_text(header + "\n" + row + "\n")
    return p


def test_unknown_column(tmp_path):
    p = _write(tmp_path, HEADER + ",extra", "0,0,0,,,,,1e-5,,1")
    with pytest.raises(SchemaError, match="extra"):
        read_csv(p)


def test_missing_column(tmp_path):
    p = _write(tmp_path, HEADER.replace(",ref_temp_c", ""), "0,0,0,,,,1e-5,")
    with pytest.raises(SchemaError, match="ref_temp_c"):
        read_csv(p)


def test_reordered_header_rejected(tmp_path):
    cols = list(COLUMNS)
    cols[0], cols[1] = cols[1], cols[0]
    p = _write(tmp_path, ",".join(cols), "0,0,0,,,,,1e-5,")
    with pytest.raises(SchemaError):
        read_csv(p)


def test_required_column_empty(tmp_path):
    p = _write(tmp_path, HEADER, "0,0,0,,,,,1e-5,")
    with pytest.raises(SchemaError, match="ref_temp_c"):
        read_csv(p, required=("ref_temp_c",))


def test_row_validation(tmp_path):
    with pytest.raises(SchemaError):
        read_csv(_write(tmp_path, HEADER, "0,0,0,,,,,"))
    with pytest.raises(SchemaError):
        read_csv(_write(tmp_path, HEADER, "0,x,0,,,,,1e-5,"))
    with pytest.raises(SchemaError, match="no inductance"):
        read_csv(_write(tmp_path, HEADER, "0,0,0,,,,,,"))
    with pytest.raises(SchemaError, match="non-decreasing"):
        Dataset.build(2, time_s=[1.0, 0.0], l_strain_ch_h=1e-5)
    with pytest.raises(SchemaError):
        Dataset.build(1, bogus=1.0)
