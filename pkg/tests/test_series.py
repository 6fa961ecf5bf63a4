import numpy as np
import pytest

from tirever.errors import DataError
from tirever.series import Frequency, TimeSeries, demean, load_csv, reverse, write_csv


class TestTimeSeries:
    def test_values_are_read_only_copies(self):
        raw = np.array([1.0, 2.0, 3.0])
        s = TimeSeries(raw)
        raw[0] = 99.0
        assert s.values[0] == 1.0
        with pytest.raises(ValueError):
            s.values[1] = 0.0

    @pytest.mark.parametrize("bad", [[1.0, np.nan], [np.inf], []])
    def test_rejects_invalid_values(self, bad):
        with pytest.raises(DataError):
            TimeSeries(np.array(bad, dtype=float))

    def test_frequency_parsing(self):
        assert TimeSeries([1.0], "Quarterly").frequency is Frequency.QUARTERLY
        assert Frequency.MONTHLY.observations_per_year == 12
        with pytest.raises(DataError, match="unknown frequency"):
            Frequency.parse("weekly")

    def test_reverse_and_demean(self):
        s = TimeSeries([1.0, 2.0, 6.0], "annual", "x")
        assert reverse(s).values.tolist() == [6.0, 2.0, 1.0]
        assert reverse(s).frequency is Frequency.ANNUAL
        assert demean(s).values.sum() == pytest.approx(0.0)


class TestCsv:
    def test_round_trip_is_exact(self, tmp_path, rng):
        s = TimeSeries(rng.standard_normal(50) * 1e3, label="z")
        path = tmp_path / "z.csv"
        write_csv(s, path)
        back = load_csv(path)
        assert np.array_equal(back.values, s.values)
        assert back.label == "z"

    def test_headerless_single_column(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1.5\n2.5\n\n3.5\n")
        assert load_csv(path).values.tolist() == [1.5, 2.5, 3.5]

    def test_named_and_indexed_columns(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("year,soi,nao\n2000,1,10\n2001,2,20\n")
        assert load_csv(path).values.tolist() == [10.0, 20.0]
        assert load_csv(path, "soi").values.tolist() == [1.0, 2.0]
        assert load_csv(path, 1).values.tolist() == [1.0, 2.0]
        with pytest.raises(DataError, match="not found"):
            load_csv(path, "enso")

    def test_error_names_the_file_line(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("index,value\n1,0.5\n2,abc\n")
        with pytest.raises(DataError, match=r"row 3: non-numeric value 'abc'"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_csv(tmp_path / "nope.csv")
