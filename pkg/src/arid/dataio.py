"""CSV ingestion, preprocessing, and artefact injection for recorded series."""

from __future__ import annotations

import csv

import numpy as np

from .errors import HorizonTooShort, IndexOutOfRange, ParseError, RaggedRows
from .model import TimeSeries


def load_csv(path, has_header: bool = False, sample_rate_hz: float | None = None) -> TimeSeries:
    """Read a numeric CSV with one column per channel, rows in time order.

    Parse failures point at the offending row and column (one-based, header
    included in the row count).
    """
    names = None
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for row_idx, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(cell.strip() == "" for cell in raw):
                continue
            if has_header and names is None and not rows:
                names = tuple(cell.strip() for cell in raw)
                continue
            if width is None:
                width = len(raw)
            elif len(raw) != width:
                raise RaggedRows(f"row {row_idx} has {len(raw)} values, expected {width}")
            parsed = []
            for col_idx, cell in enumerate(raw, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError as exc:
                    raise ParseError(f"row {row_idx}, column {col_idx}: cannot parse {cell.strip()!r}") from exc
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    if names is not None and len(names) != width:
        raise RaggedRows(f"header has {len(names)} names, data rows have {width} values")
    return TimeSeries(np.array(rows), sample_rate_hz, names)


def write_csv(series: TimeSeries, path) -> None:
    """Write values with 17 significant digits so a re-read is bit-exact."""
    with open(path, "w", newline="") as fh:
        if series.channel_names is not None:
            fh.write(",".join(series.channel_names) + "\n")
        for row in series.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def first_difference(y: TimeSeries) -> TimeSeries:
    """Difference consecutive rows; removes slow drift before fitting."""
    if y.n_steps < 2:
        raise HorizonTooShort("need at least two steps to difference")
    return TimeSeries(np.diff(y.values, axis=0), y.sample_rate_hz, y.channel_names)


def inject_artefact(y: TimeSeries, channel: int, t_start: int, t_end: int, std: float, seed: int) -> TimeSeries:
    """Replace one channel's window with white noise (one-based, inclusive bounds)."""
    if not 1 <= channel <= y.n_channels:
        raise IndexOutOfRange(f"channel {channel} outside 1..{y.n_channels}")
    if not 1 <= t_start <= t_end <= y.n_steps:
        raise IndexOutOfRange(f"window [{t_start}, {t_end}] outside 1..{y.n_steps}")
    if std < 0:
        raise ValueError("std must be nonnegative")
    rng = np.random.Generator(np.random.Philox(key=seed))
    values = y.values.copy()
    values[t_start - 1:t_end, channel - 1] = std * rng.standard_normal(t_end - t_start + 1)
    return TimeSeries(values, y.sample_rate_hz, y.channel_names)
