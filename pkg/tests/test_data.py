"""CSV ingestion, validation errors and column mapping."""

import numpy as np
import pytest

from damcmc.data import DEFAULT_COLUMN_MAP, fixture_path, load_iv_csv
from damcmc.errors import EmptyInput, MalformedRow, MissingColumn

HEADER = "logpgp95,avexpr,logem4,lat_abst,africa,asia,other\n"


def write_csv(tmp_path, body, header=HEADER, name="data.csv"):
    path = tmp_path / name
    path.write_text(header + body)
    return path


class TestRoundTrip:
    def test_three_row_fixture(self, tmp_path):
        path = write_csv(
            tmp_path,
            "8.5,6.0,4.5,0.30,1,0,0\n"
            "7.2,5.5,6.1,0.10,0,1,0\n"
            "9.9,9.0,2.2,0.45,0,0,0\n",
        )
        with pytest.warns(UserWarning, match="64"):
            data = load_iv_csv(path)
        assert np.array_equal(data.y, [8.5, 7.2, 9.9])
        assert np.array_equal(data.x, [6.0, 5.5, 9.0])
        assert np.array_equal(data.z, [4.5, 6.1, 2.2])
        assert np.array_equal(data.controls[:, 0], [0.30, 0.10, 0.45])
        assert np.array_equal(data.controls[:, 1], [1, 0, 0])  # africa
        assert np.array_equal(data.controls[:, 2], [0, 1, 0])  # asia
        assert np.array_equal(data.controls[:, 3], [0, 0, 0])  # other
        assert data.control_names == ("latitude", "africa", "asia", "other_cont")

    def test_idempotent_and_order_preserving(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,1,0,0\n7.2,5.5,6.1,0.10,0,1,0\n")
        with pytest.warns(UserWarning):
            a = load_iv_csv(path)
        with pytest.warns(UserWarning):
            b = load_iv_csv(path)
        assert np.array_equal(a.y, b.y)
        assert a.y[0] == 8.5  # first file row stays first

    def test_shipped_fixture_has_expected_sample_size(self, recwarn):
        data = load_iv_csv(fixture_path())
        assert data.y.shape == (64,)
        assert len(recwarn) == 0  # no sample-size warning for n == 64

    def test_normalize_latitude(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,4.5,-45.0,1,0,0\n7.2,5.5,6.1,9.0,0,1,0\n")
        with pytest.warns(UserWarning):
            data = load_iv_csv(path, normalize_latitude=True)
        assert np.allclose(data.controls[:, 0], [0.5, 0.1])


class TestValidation:
    def test_blank_cell(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,,0.30,1,0,0\n")
        with pytest.raises(MalformedRow) as exc:
            load_iv_csv(path)
        assert exc.value.line == 2
        assert "logem4" in str(exc.value)

    def test_non_numeric(self, tmp_path):
        path = write_csv(tmp_path, "8.5,abc,4.5,0.30,1,0,0\n")
        with pytest.raises(MalformedRow, match="non-numeric"):
            load_iv_csv(path)

    def test_non_finite(self, tmp_path):
        path = write_csv(tmp_path, "inf,6.0,4.5,0.30,1,0,0\n")
        with pytest.raises(MalformedRow, match="non-finite"):
            load_iv_csv(path)

    def test_dummy_out_of_range(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,2,0,0\n")
        with pytest.raises(MalformedRow, match="must be 0 or 1"):
            load_iv_csv(path)

    def test_two_dummies_set(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,1,1,0\n")
        with pytest.raises(MalformedRow, match="more than one"):
            load_iv_csv(path)

    def test_line_numbers_account_for_header(self, tmp_path):
        path = write_csv(
            tmp_path,
            "8.5,6.0,4.5,0.30,1,0,0\n"
            "7.2,5.5,6.1,0.10,0,3,0\n",
        )
        with pytest.raises(MalformedRow) as exc:
            load_iv_csv(path)
        assert exc.value.line == 3


class TestColumnMapping:
    def test_missing_column(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,1,0\n", header="logpgp95,avexpr,logem4,lat_abst,africa,asia\n")
        with pytest.raises(MissingColumn) as exc:
            load_iv_csv(path)
        assert "other" in str(exc.value)

    def test_remap(self, tmp_path):
        header = "gdp,risk,mortality,latitude,af,as_,oth\n"
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,1,0,0\n", header=header)
        colmap = {
            "y": "gdp", "x": "risk", "z": "mortality", "latitude": "latitude",
            "africa": "af", "asia": "as_", "other_cont": "oth",
        }
        with pytest.warns(UserWarning):
            data = load_iv_csv(path, column_map=colmap)
        assert data.y[0] == 8.5

    def test_partial_remap_keeps_defaults(self, tmp_path):
        header = HEADER.replace("logpgp95", "gdp")
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,1,0,0\n", header=header)
        with pytest.warns(UserWarning):
            data = load_iv_csv(path, column_map={"y": "gdp"})
        assert data.y[0] == 8.5

    def test_unknown_field_rejected(self, tmp_path):
        path = write_csv(tmp_path, "8.5,6.0,4.5,0.30,1,0,0\n")
        with pytest.raises(MissingColumn, match="unknown model fields"):
            load_iv_csv(path, column_map={"bogus": "col"})

    def test_default_map_is_total(self):
        assert set(DEFAULT_COLUMN_MAP) == {
            "y", "x", "z", "latitude", "africa", "asia", "other_cont",
        }


class TestFileErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_iv_csv(tmp_path / "nope.csv")

    def test_header_only(self, tmp_path):
        path = write_csv(tmp_path, "")
        with pytest.raises(EmptyInput):
            load_iv_csv(path)
