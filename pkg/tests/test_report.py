"""Tests for report emission and series export."""

import json

import numpy as np
import pytest

from core import InjectionRecord, RandomRegime
from evaluation import ScoreEntry, ScoreStatus
from pipeline import (
    DEFAULT_LEVELS, METHODS, ExperimentConfig, ExperimentReport, LevelSummary, MethodName, MethodResult,
    ReportFormat, ResultStatus, emit_report, level_label, load_report, report_rows, write_series_csv
)
from pipeline.report import CSV_COLUMNS, SERIES_COLUMNS

STATIONS = ["S1", "S2", "S3", "S4", "S5"]


def make_result(method: MethodName, level: float) -> MethodResult:
    stations = {
        s: ScoreEntry(ioa=0.9 - level / 2 - j / 100, rmse=1.0 + level, n_cells=10 + j)
        for j, s in enumerate(STATIONS)
    }
    return MethodResult(method=method, level=level, stations=stations,
                        pooled=ScoreEntry(ioa=0.8 - level / 2, rmse=1.0 + level, n_cells=60))


def make_report(levels=DEFAULT_LEVELS, results=None) -> ExperimentReport:
    if results is None:
        results = [make_result(m, lv) for m in METHODS for lv in levels]
    return ExperimentReport(
        version="0.1.0",
        config=ExperimentConfig(missing_levels=list(levels) or [0.5]),
        seed=0,
        station_ids=STATIONS,
        selected_lambda=1.0,
        levels=[LevelSummary(level=lv, seed=j, injected_cells=60, missing_cells=70) for j, lv in enumerate(levels)],
        results=results,
    )


def test_csv_row_count_and_order():
    """Test one row per station plus pooled, for every method and level."""
    frame = report_rows(make_report())

    # 4 methods x 7 levels x (5 stations + pooled)
    assert len(frame) == 168
    assert list(frame.columns) == CSV_COLUMNS
    first = frame.iloc[:6]
    assert first["method"].tolist() == ["SI"] * 6
    assert first["scope"].tolist() == STATIONS + ["pooled"]
    assert frame["method"].iloc[-1] == "KNN-SINDy"


def test_csv_formatting():
    """Test exact text of the first rows."""
    lines = emit_report(make_report(levels=[0.5]), ReportFormat.CSV).decode("utf-8").split("\n")

    assert lines[0] == "method,level,scope,ioa,rmse,n_cells"
    assert lines[1] == "SI,0.5,S1,0.65,1.5,10"
    assert lines[6] == "SI,0.5,pooled,0.55,1.5,60"
    assert lines[-1] == ""


def test_csv_header_only():
    """Test a report without levels."""
    report = make_report(levels=[], results=[])
    assert emit_report(report, "csv") == b"method,level,scope,ioa,rmse,n_cells\n"


def test_csv_failed_and_unscorable_cells():
    """Test empty values for failed entries and unscorable stations."""
    results = [make_result(m, 0.5) for m in METHODS]
    results[1] = MethodResult(method=MethodName.KNN, level=0.5, status=ResultStatus.FAILED,
                              error="NoObservedData: station S1")
    results[0].stations["S2"] = ScoreEntry(status=ScoreStatus.UNSCORABLE, rmse=2.0, n_cells=1)
    lines = emit_report(make_report(levels=[0.5], results=results), "csv").decode("utf-8").split("\n")

    assert lines[2] == "SI,0.5,S2,,,1"
    assert lines[7] == "KNN,0.5,S1,,,"
    assert lines[12] == "KNN,0.5,pooled,,,"


def test_json_round_trip():
    """Test that the JSON report loads back to an equal report."""
    report = make_report()
    data = emit_report(report)

    assert data.endswith(b"\n")
    assert json.loads(data)["config"]["soft_impute"]["lambda"] == pytest.approx(1.0)
    assert load_report(data) == report


def test_incomplete_report_rejected():
    """Test that every (method, level) pair must be present."""
    with pytest.raises(ValueError):
        make_report(levels=[0.5], results=[make_result(MethodName.SI, 0.5)])


def test_level_label():
    """Test file-name labels."""
    assert level_label(0.1) == "0.10"
    assert level_label(0.7) == "0.70"


def test_series_csv(tmp_path, build_matrix):
    """Test the long-format series export."""
    truth = build_matrix([[1.0, np.nan], [3.0, 4.0]])
    estimate = build_matrix([[1.0, 2.5], [3.5, 4.0]])
    record = InjectionRecord(seed=1, regime=RandomRegime(fraction=0.3), cells=[(1, 0)])

    path = write_series_csv(truth, {"SI": estimate}, record, tmp_path / "out" / "series_0.30.csv")

    assert path.read_text().split("\n") == [
        ",".join(SERIES_COLUMNS),
        "2016-01-01T00:00,S1,1,1,,,,0",
        "2016-01-01T00:00,S2,,2.5,,,,0",
        "2016-01-01T01:00,S1,3,3.5,,,,1",
        "2016-01-01T01:00,S2,4,4,,,,0",
        "",
    ]
