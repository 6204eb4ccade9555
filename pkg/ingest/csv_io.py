"""Station CSV reading and writing.

File layout: header ``timestamp,<station_1>,...,<station_S>``, one row per hour,
timestamps as ``YYYY-MM-DDTHH:00`` (local standard time, no offset), values as
decimal literals. Empty cells and the tokens ``NA``, ``NaN`` and ``-999`` mark
missing values.
"""

import io
import logging
import re
from typing import Iterable, Union

import numpy as np
import pandas as pd

from core import GapDynError, SeriesMatrix, Space

logger = logging.getLogger(__name__)

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"
MISSING_TOKENS = frozenset({"", "NA", "NaN", "-999"})
STATION_ID_PATTERN = re.compile(r"^[^,\"\s]+$")


class BadHeader(GapDynError):
    """CSV header is malformed."""
    pass


class NonMonotonicTime(GapDynError):
    """CSV timestamps are out of order or duplicated."""
    pass


class BadNumber(GapDynError):
    """A CSV cell could not be parsed."""
    pass


def parse_timestamp(text: str) -> int:
    """Convert ``YYYY-MM-DDTHH:00`` to epoch hours."""
    return int(parse_timestamps([text])[0])


def parse_timestamps(texts: Iterable[str]) -> np.ndarray:
    """Vectorized ``YYYY-MM-DDTHH:00`` -> epoch hours.

    Raises:
        BadNumber: If a timestamp is malformed or not on the hour
    """
    texts = pd.Series(list(texts), dtype=object)
    try:
        parsed = pd.to_datetime(texts, format=TIMESTAMP_FORMAT, errors="raise")
    except (ValueError, TypeError) as e:
        raise BadNumber(f"Unparseable timestamp: {e}")
    if (parsed.dt.minute != 0).any():
        bad = texts[parsed.dt.minute != 0].iloc[0]
        raise BadNumber(f"Timestamp not on the hour: {bad!r}")
    return parsed.values.astype("datetime64[h]").astype(np.int64)


def format_timestamp(hour: int) -> str:
    return format_timestamps([hour])[0]


def format_timestamps(hours: Iterable[int]) -> list:
    stamps = pd.to_datetime(np.asarray(list(hours), dtype=np.int64), unit="h")
    return list(stamps.strftime("%Y-%m-%dT%H:00"))


def _parse_header(header_line: str) -> tuple:
    columns = header_line.rstrip("\r").split(",")
    if not columns or columns[0] != "timestamp":
        raise BadHeader(f"First column must be 'timestamp', got {columns[0] if columns else ''!r}")
    station_ids = columns[1:]
    if not station_ids:
        raise BadHeader("Header names no stations")
    for station_id in station_ids:
        if not STATION_ID_PATTERN.match(station_id):
            raise BadHeader(f"Malformed station id {station_id!r}")
    if len(set(station_ids)) != len(station_ids):
        raise BadHeader(f"Duplicated station ids in header: {station_ids}")
    return tuple(station_ids)


def parse_csv(data: Union[bytes, str]) -> SeriesMatrix:
    """Parse a station CSV into a raw-space series.

    Hours absent from the file (within its covered span) come back as fully
    masked rows so the result keeps hourly cadence.

    Raises:
        BadHeader: If the column names are malformed
        NonMonotonicTime: If timestamps are out of order or duplicated
        BadNumber: If a value or timestamp cell cannot be parsed
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if not text.strip():
        raise BadHeader("Empty CSV input")

    header_line = text.split("\n", 1)[0]
    station_ids = _parse_header(header_line)

    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            skip_blank_lines=True,
        )
    except pd.errors.ParserError as e:
        raise BadNumber(f"Malformed CSV row: {e}")
    if frame.shape[1] != len(station_ids) + 1:
        raise BadHeader(f"Expected {len(station_ids) + 1} columns, found {frame.shape[1]}")

    if len(frame) == 0:
        logger.debug("CSV has a header but no rows")
        return SeriesMatrix(timestamps=[], values=np.empty((0, len(station_ids))),
                            mask=np.empty((0, len(station_ids)), dtype=bool),
                            station_ids=station_ids, space=Space.RAW)

    hours = parse_timestamps(frame["timestamp"].str.strip())
    steps = np.diff(hours)
    if np.any(steps <= 0):
        bad_row = int(np.argmax(steps <= 0)) + 1
        raise NonMonotonicTime(
            f"Timestamp {frame['timestamp'].iloc[bad_row]!r} at data row {bad_row + 1} "
            f"does not follow {frame['timestamp'].iloc[bad_row - 1]!r}"
        )

    tokens = frame[list(station_ids)].apply(lambda col: col.str.strip())
    missing = tokens.isin(MISSING_TOKENS).to_numpy()
    numbers = tokens.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    unparsed = ~missing & ~np.isfinite(numbers)
    if unparsed.any():
        row, col = np.argwhere(unparsed)[0]
        raise BadNumber(
            f"Unparseable value {tokens.iat[row, col]!r} at data row {row + 1}, station {station_ids[col]!r}"
        )

    n_rows = int(hours[-1] - hours[0]) + 1
    values = np.full((n_rows, len(station_ids)), np.nan)
    mask = np.zeros((n_rows, len(station_ids)), dtype=bool)
    offsets = hours - hours[0]
    values[offsets] = np.where(missing, np.nan, numbers)
    mask[offsets] = ~missing

    inserted = n_rows - len(frame)
    if inserted:
        logger.info(f"Inserted {inserted} fully masked rows to restore hourly cadence")

    return SeriesMatrix(
        timestamps=np.arange(hours[0], hours[-1] + 1, dtype=np.int64),
        values=values,
        mask=mask,
        station_ids=station_ids,
        space=Space.RAW,
    )


def write_csv(m: SeriesMatrix) -> bytes:
    """Render a series in the station CSV format (6 significant digits, missing as empty).

    An observed value whose 6-digit form reads as a missing token (-999.0004
    gives "-999") is written with its shortest round-trip repr instead.
    """
    rendered = np.char.mod("%.6g", m.values).astype(object)
    clash = m.mask & np.isin(rendered, list(MISSING_TOKENS))
    rendered[clash] = [repr(float(v)) for v in m.values[clash]]
    rendered[~m.mask] = ""

    frame = pd.DataFrame(rendered, columns=list(m.station_ids))
    frame.insert(0, "timestamp", format_timestamps(m.timestamps))
    text = frame.to_csv(index=False, lineterminator="\n")
    return text.encode("utf-8")


def read_csv_file(path: str) -> SeriesMatrix:
    with open(path, "rb") as f:
        return parse_csv(f.read())


def write_csv_file(m: SeriesMatrix, path: str) -> None:
    with open(path, "wb") as f:
        f.write(write_csv(m))
    logger.info(f"Wrote {m.n_rows} rows x {m.n_stations} stations to {path}")
