import numpy as np
import pytest

from thermocircuit.compare import HISTOGRAM_BIN, compare, error_stats
from thermocircuit.exceptions import ParseError
from thermocircuit.simulate import TimeSeries, Trajectory
from thermocircuit.tsio import format_trajectory, ingest_timeseries, read_timeseries_text


def test_two_channels(tmp_path):
    p = tmp_path / "in.csv"
    p.write_text("time,T_out,Q_heater\n0,5,100\n600,6,100\n1200,7,0\n")
    ts = ingest_timeseries(p)
    assert ts.names == ["T_out", "Q_heater"]
    assert ts.dt == 600.0
    assert np.array_equal(ts["T_out"], [5, 6, 7])


def test_single_row_uses_default_step():
    ts = read_timeseries_text("time,T\n0,3\n", default_dt=300.0)
    assert len(ts) == 1 and ts.dt == 300.0


def test_non_uniform_step():
    with pytest.raises(ParseError, match="non-uniform") as exc:
        read_timeseries_text("time,T\n0,1\n600,1\n1500,1\n", "w.csv")
    assert exc.value.line == 4


def test_non_numeric_cell_location():
    with pytest.raises(ParseError, match="non-numeric") as exc:
        read_timeseries_text("time,T,Q\n0,1,2\n600,x,2\n")
    assert (exc.value.line, exc.value.column) == (3, 2)


def test_duplicate_channel():
    with pytest.raises(ParseError, match="duplicate channel 'T'") as exc:
        read_timeseries_text("time,T,T\n0,1,2\n")
    assert exc.value.column == 3


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty"),
        ("t,T\n0,1\n", "first column"),
        ("time,T\n", "no data rows"),
        ("time,T\n0,1,2\n", "expected 2 cells"),
        ("time,T\n0,nan\n", "non-finite"),
        ("time,T\n600,1\n0,1\n", "increase"),
        ("time,,T\n0,1,2\n", "empty column"),
    ],
)
def test_malformed_inputs(text, message):
    with pytest.raises(ParseError, match=message):
        read_timeseries_text(text)


def test_comments_and_blank_lines_skipped():
    ts = read_timeseries_text("# weather\ntime,T\n\n0,1\n600,2\n")
    assert np.array_equal(ts["T"], [1, 2])


def test_missing_file(tmp_path):
    with pytest.raises(ParseError, match="cannot read"):
        ingest_timeseries(tmp_path / "none.csv")


def _traj(values, dt=600.0, label="T"):
    values = np.asarray(values, dtype=float)
    return Trajectory(dt * np.arange(len(values)), values[:, None], (label,))


def test_format_round_trip_is_exact():
    vals = np.random.default_rng(0).normal(20, 3, 50)
    text = format_trajectory(_traj(vals))
    back = read_timeseries_text(text)
    assert np.array_equal(back["T"], vals)
    assert text == format_trajectory(_traj(vals))


def test_compare_identical():
    vals = np.linspace(15, 25, 100)
    s = compare(_traj(vals), TimeSeries(600.0, {"T": vals}))["T"]
    assert s.mean == 0.0 and s.std == 0.0 and s.min == 0.0 and s.max == 0.0
    assert sum(s.counts) == 100


def test_compare_constant_offset():
    vals = np.linspace(15, 25, 100)
    s = compare(_traj(vals + 0.5), TimeSeries(600.0, {"T": vals}))["T"]
    assert np.isclose(s.mean, 0.5, rtol=1e-12)
    assert s.std < 1e-12


def test_compare_alternating():
    sign = np.where(np.arange(100) % 2 == 0, 1.0, -1.0)
    vals = np.full(100, 20.0)
    s = compare(_traj(vals + sign), TimeSeries(600.0, {"T": vals}))["T"]
    assert s.mean == 0.0 and s.std == 1.0
    assert s.median == 0.0 and s.q25 == -1.0 and s.q75 == 1.0


def test_compare_interpolates_and_restricts_window():
    # simulation every 300 s over [0, 3000], measurement every 600 s from 1200 on
    t = 300.0 * np.arange(11)
    sim = Trajectory(t, (2 * t)[:, None], ("T",))
    meas = TimeSeries(600.0, {"T": 2 * (1200.0 + 600.0 * np.arange(6)) + 1.0}, start=1200.0)
    s = compare(sim, meas)["T"]
    assert s.n == 4
    assert np.isclose(s.mean, -1.0)


def test_compare_no_overlap():
    with pytest.raises(ValueError, match="do not overlap"):
        compare(_traj([1, 2, 3]), TimeSeries(600.0, {"T": [1, 2]}, start=1e6))
    with pytest.raises(ValueError, match="no output"):
        compare(_traj([1, 2, 3]), TimeSeries(600.0, {"X": [1, 2]}))


def test_histogram_bins():
    s = error_stats([0.0, 0.05, 0.15, 0.31])
    assert np.allclose(s.bin_edges, [0.0, 0.1, 0.2, 0.3, 0.4])
    assert s.counts == (2, 1, 0, 1)
    assert HISTOGRAM_BIN == 0.1
    s = error_stats([-0.25, 0.25], bin_width=0.5)
    assert np.allclose(s.bin_edges, [-0.5, 0.0, 0.5])
    with pytest.raises(ValueError):
        error_stats([])
    with pytest.raises(ValueError):
        error_stats([1.0], bin_width=0.0)
