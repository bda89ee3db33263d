import numpy as np
import pytest

from maganc import utils
from maganc.data_models.stage import Axis


class TestFormatValue:
    @pytest.mark.parametrize(
        "value, expected",
        [
            (None, ""),
            (True, "true"),
            (1 / 3, "0.333333333"),
            (np.float64(2.0), "2"),
            (12, "12"),
            (Axis.Y, "y"),
            (">=60", ">=60"),
        ],
    )
    def test_cells(self, value, expected):
        assert utils.format_value(value) == expected


class TestWriteTableCsv:
    def test_comment_header_and_rows(self, tmp_path):
        path = utils.write_table_csv(
            tmp_path / "out" / "table.csv",
            ["axis", "rms_nt"],
            [[Axis.X, 1.5], [Axis.Z, None]],
            utils.provenance_comment("abc123", 7),
        )

        assert path.read_text() == "# config_hash=abc123 seed=7\naxis,rms_nt\nx,1.5\nz,\n"

    def test_without_comment(self, tmp_path):
        path = utils.write_table_csv(tmp_path / "t.csv", ["a"], [[1]])

        assert path.read_text() == "a\n1\n"


class TestDecimate:
    def test_keeps_every_nth_row(self):
        values = np.arange(12.0).reshape(4, 3)

        assert utils.decimate(values, 2).tolist() == [[0.0, 1.0, 2.0], [6.0, 7.0, 8.0]]

    def test_rejects_zero_factor(self):
        with pytest.raises(ValueError):
            utils.decimate(np.zeros((2, 3)), 0)


def test_format_vector():
    assert utils.format_vector([1.0, 0.123456, 2e-7]) == "1/0.1235/2e-07"
