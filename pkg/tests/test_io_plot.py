import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freqbias import io as fio
from freqbias.analysis import ComparisonReport, estimate_kappa
from freqbias.pde import frozen_trace
from freqbias.spectral import FrequencyGrid, Normal, SampleGrid, SpectralSnapshot, SpectralTrace, make_rng
from freqbias.svgplot import (
    Panel,
    nice_ticks,
    plot_kappa_overlay,
    plot_kappa_panels,
    plot_snapshot_grid,
    save_figure,
)

FG = FrequencyGrid.for_samples(SampleGrid())


def _trace(seed=0, n=5):
    rng = make_rng(seed, 6)
    u0 = SpectralSnapshot(FG, rng.normal(size=241) + 1j * rng.normal(size=241), 0.0)
    return frozen_trace(u0, Normal(10.0), np.linspace(0, 40, n))


# -------------------------------------------------------------------- csv


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_format_round_trips(v):
    assert float(fio.fmt(v)) == v


def test_number_format_special_values():
    assert [fio.fmt(v) for v in (np.nan, np.inf, -np.inf, True, np.int64(3))] == ["nan", "inf", "-inf", "1", "3"]


def test_trace_csv_schema_and_round_trip(tmp_path):
    tr = _trace()
    path = fio.write_trace(str(tmp_path / "t.csv"), tr)
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "time,xi,re,im,abs"
    assert len(lines) == 1 + 5 * 241
    back = fio.read_trace(path)
    assert np.array_equal(back.values, tr.values)
    assert np.array_equal(back.times, tr.times)
    assert np.array_equal(back.freqs, tr.freqs)


def test_kappa_csv_round_trip(tmp_path):
    vals = np.ones((11, 241), dtype=complex)
    vals[:, :3] = 0.0
    prof = estimate_kappa(SpectralTrace(FG, np.arange(11.0), vals))
    path = fio.write_kappa(str(tmp_path / "k.csv"), prof)
    with open(path) as fh:
        assert fh.readline().strip() == "xi,kappa,r2,valid"
    back = fio.read_kappa(path)
    assert np.array_equal(back.valid, prof.valid)
    assert np.array_equal(back.kappa, prof.kappa, equal_nan=True)


def test_comparison_files(tmp_path):
    rep = ComparisonReport(np.array([0.0, 1.0]), np.array([0.0, 0.25]), np.array([0.0, 0.1]), 0.9, 0.25, (0.5, 8.0))
    csv_path, txt = fio.write_comparison(str(tmp_path / "cmp.csv"), rep)
    with open(csv_path) as fh:
        assert fh.read().splitlines() == ["nn_time,model_time,rel_l2", "0,0,0", "1,0.25,0.10000000000000001"]
    with open(txt) as fh:
        assert fh.read() == "time_scale = 0.25\nspearman = 0.90000000000000002\nband_min = 0.5\nband_max = 8\n"


def test_csv_output_is_bit_stable(tmp_path):
    a = fio.write_trace(str(tmp_path / "a.csv"), _trace(3))
    b = fio.write_trace(str(tmp_path / "b.csv"), _trace(3))
    assert fio.sha256(a) == fio.sha256(b)


def test_reading_empty_or_ragged_files_fails(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("time,xi,re,im,abs\n")
    with pytest.raises(ValueError, match="no data"):
        fio.read_trace(str(empty))
    ragged = tmp_path / "r.csv"
    ragged.write_text("time,xi,re,im,abs\n0,0,1,0,1\n0,1,1,0,1\n1,0,1,0,1\n")
    with pytest.raises(ValueError, match="ragged"):
        fio.read_trace(str(ragged))


# ------------------------------------------------------------------- svg


def test_ticks_cover_range():
    ticks = nice_ticks(0.0, 60.0)
    assert ticks[0] == 0.0 and ticks[-1] == 60.0
    assert all(b > a for a, b in zip(ticks, ticks[1:]))
    assert nice_ticks(3.0, 3.0)


def test_empty_figure_raises_without_writing(tmp_path):
    path = tmp_path / "x.svg"
    with pytest.raises(ValueError, match="nothing to plot"):
        save_figure(str(path), [Panel("empty")])
    with pytest.raises(ValueError):
        plot_kappa_overlay(str(path), {})
    with pytest.raises(ValueError):
        plot_snapshot_grid(str(path), {})
    assert not path.exists()


def test_svg_is_well_formed_and_byte_identical(tmp_path):
    prof = estimate_kappa(_trace(1, 11))
    paths = [plot_kappa_overlay(str(tmp_path / f"{i}.svg"), {"normal": prof}) for i in range(2)]
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()
    root = ET.parse(paths[0]).getroot()
    assert root.tag.endswith("svg")
    assert any(el.tag.endswith("polyline") for el in root.iter())


def test_log_axis_breaks_lines_at_nonpositive_values(tmp_path):
    p = Panel("gap", logy=True).line([0, 1, 2, 3, 4], [1.0, 2.0, 0.0, 3.0, 4.0])
    path = save_figure(str(tmp_path / "g.svg"), [p])
    polylines = [el for el in ET.parse(path).getroot().iter() if el.tag.endswith("polyline")]
    assert len(polylines) == 2


def test_panels_and_snapshot_grid(tmp_path):
    prof = estimate_kappa(_trace(2, 11))
    a = plot_kappa_panels(str(tmp_path / "p.svg"), {"depth 2": {"x": prof}, "depth 3": {"x": prof}})
    b = plot_snapshot_grid(str(tmp_path / "s.svg"), {"nn": _trace(2, 11), "fem": _trace(4, 3)})
    assert os.path.getsize(a) > 0 and os.path.getsize(b) > 0
    ET.parse(b)
