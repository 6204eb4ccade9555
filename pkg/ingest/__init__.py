"""CSV ingestion and normalization."""

from .csv_io import (
    BadHeader, NonMonotonicTime, BadNumber,
    parse_csv, write_csv, read_csv_file, write_csv_file,
    parse_timestamp, parse_timestamps, format_timestamp, format_timestamps
)
from .normalization import (
    DegenerateStation, SpaceMismatch, StationScale, NormParams,
    fit_normalization, normalize, denormalize
)
from .summary import StationSummary, summarize

__all__ = [
    "BadHeader", "NonMonotonicTime", "BadNumber",
    "parse_csv", "write_csv", "read_csv_file", "write_csv_file",
    "parse_timestamp", "parse_timestamps", "format_timestamp", "format_timestamps",
    "DegenerateStation", "SpaceMismatch", "StationScale", "NormParams",
    "fit_normalization", "normalize", "denormalize",
    "StationSummary", "summarize"
]
