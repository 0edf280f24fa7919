"""CSV reading and writing for scans, spectra and fit reports.

Files are plain comma-separated text with one header row. Lines starting with
``#`` before the header carry ``key=value`` metadata.
"""

from __future__ import annotations

import csv
import io
import math
import sys

FLOAT_FORMAT = "%.10e"


class CsvFormatError(ValueError):
    """Malformed CSV input; the message names the offending line."""


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        return FLOAT_FORMAT % float(v)
    return str(v)


def write_table(target, header, rows, meta=None):
    """Write metadata lines, a header and rows to a path, a stream or ``"-"``."""
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={format_value(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    text = buf.getvalue()
    if target is None or target == "-":
        sys.stdout.write(text)
    elif hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return text


def read_table(source, numeric=True):
    """Parse a CSV file into ``(meta, header, columns)``.

    ``columns`` maps each header name to a list of floats. With ``numeric=False``
    cells that are not numbers are kept as strings (fit reports have a text
    column). Raises :class:`CsvFormatError` with a 1-based line number on
    malformed input.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            with open(source, newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise CsvFormatError(f"{source}: cannot read ({exc.strerror})") from exc
    meta = {}
    header = None
    columns = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if header is not None:
                continue
            body = stripped[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        fields = next(csv.reader([line]))
        fields = [f.strip() for f in fields]
        if header is None:
            if any(_is_number(f) for f in fields):
                raise CsvFormatError(f"line {lineno}: expected a header row, found numbers")
            if len(set(fields)) != len(fields) or not all(fields):
                raise CsvFormatError(f"line {lineno}: header names must be unique and non-empty")
            header = fields
            columns = {name: [] for name in header}
            continue
        if len(fields) != len(header):
            raise CsvFormatError(f"line {lineno}: expected {len(header)} fields, found {len(fields)}")
        for name, f in zip(header, fields):
            try:
                value = float(f)
            except ValueError:
                if not numeric:
                    columns[name].append(f)
                    continue
                raise CsvFormatError(f"line {lineno}: {f!r} is not a number (column {name})") from None
            if not math.isfinite(value):
                raise CsvFormatError(f"line {lineno}: non-finite value in column {name}")
            columns[name].append(value)
    if header is None:
        raise CsvFormatError("line 1: no header row found")
    return meta, header, columns


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


SPECTRUM_X = ("detuning_ir_mhz", "detuning_mhz")
SPECTRUM_Y = ("counts",)
SPECTRUM_ERR = ("count_errors", "counts_err", "sigma")


def read_spectrum(source, min_points=10):
    """Read a spectrum CSV into a :class:`~darkfluor.fitting.SpectrumData`."""
    from .fitting import SpectrumData

    _, header, cols = read_table(source)
    x_name = next((n for n in SPECTRUM_X if n in cols), None)
    y_name = next((n for n in SPECTRUM_Y if n in cols), None)
    if x_name is None or y_name is None:
        raise CsvFormatError(f"line 1: spectrum needs columns {SPECTRUM_X[0]} and counts, found {header}")
    e_name = next((n for n in SPECTRUM_ERR if n in cols), None)
    x, y = cols[x_name], cols[y_name]
    if len(x) < min_points:
        raise CsvFormatError(f"spectrum has {len(x)} data rows, at least {min_points} required")
    try:
        return SpectrumData(x, y, cols[e_name] if e_name else None)
    except ValueError as exc:
        raise CsvFormatError(f"invalid spectrum: {exc}") from exc


def write_spectrum(target, data, meta=None):
    header = ["detuning_ir_mhz", "counts"]
    rows = list(zip(data.detunings, data.counts))
    if data.count_errors is not None:
        header.append("count_errors")
        rows = [r + (e,) for r, e in zip(rows, data.count_errors)]
    return write_table(target, header, rows, meta)
