import json
import math
import os

import numpy as np
import pytest

from ghostfringe.correlation import SliceCurve
from ghostfringe.io import CSV_HEADER, MetricLine, RunReport, emit_csv, emit_plot, read_csv


def curve(oracle=True):
    x = np.linspace(-1e-3, 1e-3, 5)
    g = np.array([1.1, 1.2, np.nan, 1.2, 1.1])
    flags = np.array([False, False, True, False, False])
    c = SliceCurve(x, g, np.full(5, 0.01), flags, "delta")
    return c.with_oracle(np.array([1.0, 1.25, 2.0, 1.25, 1.0])) if oracle else c


def test_csv_layout_and_round_trip(tmp_path):
    p = emit_csv(curve(), tmp_path / "c.csv", {"config_hash": "abc", "seed": 4})
    lines = open(p).read().splitlines()
    assert lines[0] == "# config_hash=abc; seed=4" and lines[1] == CSV_HEADER
    assert lines[4].split(",")[1:3] == ["", ""] and lines[4].endswith(",dark")
    assert lines[2].endswith(",ok")
    meta, cols = read_csv(p)
    assert meta == {"config_hash": "abc", "seed": "4"}
    np.testing.assert_array_equal(cols["coordinate_m"], curve().coords)
    np.testing.assert_array_equal(cols["g2"], curve().g2)
    np.testing.assert_array_equal(cols["oracle_g2"], curve().oracle)
    assert cols["flag"] == ["ok", "ok", "dark", "ok", "ok"]


def test_csv_without_oracle_and_bytes_deterministic(tmp_path):
    a = emit_csv(curve(False), tmp_path / "a.csv")
    b = emit_csv(curve(False), tmp_path / "b.csv")
    assert open(a, "rb").read() == open(b, "rb").read()
    _, cols = read_csv(a)
    assert np.all(np.isnan(cols["oracle_g2"]))


def test_plot_is_deterministic_svg_with_legend(tmp_path):
    a = emit_plot([curve()], tmp_path / "a.svg", title="t")
    b = emit_plot([curve()], tmp_path / "b.svg", title="t")
    text = open(a).read()
    assert text.lstrip().startswith("<?xml") and "<svg" in text
    assert open(a, "rb").read() == open(b, "rb").read()
    assert "oracle" in text and "Monte Carlo" in text
    with pytest.raises(ValueError):
        emit_plot([], tmp_path / "c.svg")


def test_metric_line_format():
    line = MetricLine("double", "visibility", 0.3321, 0.004, 0.333, 0.02, "PASS")
    assert line.format() == ("pairing=double metric=visibility value=0.3321 uncertainty=0.004 "
                             "expected=0.333 tolerance=0.02 verdict=PASS")
    info = MetricLine("a", "period", math.nan, math.nan, note="no minima")
    assert info.format().endswith('verdict=INFO note="no minima"')
    assert "value=nan" in info.format() and "expected=n/a" in info.format()


def test_report_verdicts_and_json(tmp_path):
    r = RunReport("run", "[scheme]\nscheme = B\n", "0123456789abcdef", 1)
    r.add("double", "visibility", 0.33, 0.01, 0.333, 0.02, "PASS")
    r.add("double", "published_visibility", 0.33, 0.01, 0.333, 0.02, "AGREE")
    assert r.passed and len(r.checks) == 1
    r.add("double", "period", math.nan, math.nan, 767e-6, 8e-6, "FAIL")
    assert not r.passed
    assert r.summary().splitlines()[-1] == "checks=2 failed=1 overall=FAIL"
    paths = r.write(tmp_path)
    doc = json.load(open(paths["json"]))
    assert doc["schema"] == "ghostfringe.run-report/1" and doc["passed"] is False
    assert doc["metrics"][2]["value"] is None
    assert open(paths["summary"]).read() == r.summary() + "\n"
    assert set(os.listdir(tmp_path)) == {"report.json", "summary.txt"}
