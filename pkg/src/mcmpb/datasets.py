"""Count-frequency datasets: CSV reading/writing and the bundled fixtures.

File format::

    # truncated_at_zero=true        (optional)
    count,frequency
    1,18
    2,35
"""

from __future__ import annotations

import io
from pathlib import Path

from .inference import DataError, FrequencyData


class DatasetParseError(DataError):
    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


FIXTURES: dict[str, FrequencyData] = {
    # bacterial clumps per field in a milk film
    "bacterial": FrequencyData.from_counts(
        [56, 104, 80, 62, 42, 27, 9, 9, 5, 3, 2, 0, 0, 0, 0, 0, 0, 0, 0, 1]
    ),
    # males among 12 children, Saxony
    "saxony": FrequencyData.from_counts(
        [3, 24, 104, 286, 670, 1033, 1343, 1112, 829, 478, 181, 45, 7]
    ),
    # linnet clutch sizes; counted from 1
    "linnet": FrequencyData.from_counts(
        [18, 35, 210, 1355, 3492, 299, 5], start=1, truncated_at_zero=True
    ),
    # weekly trips by car-owning Dutch households
    "trip": FrequencyData.from_counts(
        [75, 312, 384, 421, 307, 183, 77, 47, 15, 9, 5, 0, 0, 1, 2, 0, 0, 1]
    ),
}


def _parse_int(text: str, line: int, column: int, what: str) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise DatasetParseError(f"{what} {text.strip()!r} is not an integer", line, column) from None
    if value < 0:
        raise DatasetParseError(f"{what} must be nonnegative, got {value}", line, column)
    return value


def parse_dataset(text: str, truncated_at_zero: bool | None = None) -> FrequencyData:
    """Parse the CSV format; ``truncated_at_zero`` overrides the metadata line."""
    truncated = False
    header_seen = False
    rows: list[tuple[int, int]] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                if key.strip() == "truncated_at_zero":
                    v = value.strip().lower()
                    if v not in ("true", "false"):
                        raise DatasetParseError(f"truncated_at_zero must be true or false, got {v!r}",
                                                lineno, 1)
                    truncated = v == "true"
            continue
        cells = line.split(",")
        if not header_seen:
            names = [c.strip().lower() for c in cells]
            if names != ["count", "frequency"]:
                raise DatasetParseError("expected header 'count,frequency'", lineno, 1)
            header_seen = True
            continue
        if len(cells) != 2:
            raise DatasetParseError(f"expected 2 fields, found {len(cells)}", lineno,
                                    min(len(cells), 3))
        value = _parse_int(cells[0], lineno, 1, "count")
        freq = _parse_int(cells[1], lineno, 2, "frequency")
        if rows and value <= rows[-1][0]:
            raise DatasetParseError("counts must be strictly increasing", lineno, 1)
        rows.append((value, freq))
    if not header_seen:
        raise DatasetParseError("empty dataset: missing 'count,frequency' header", 1)
    if not rows:
        raise DatasetParseError("no data rows", 2)
    if truncated_at_zero is not None:
        truncated = truncated_at_zero
    values, freqs = zip(*rows)
    return FrequencyData(values, freqs, truncated)


def read_dataset(path, truncated_at_zero: bool | None = None) -> FrequencyData:
    return parse_dataset(Path(path).read_text(), truncated_at_zero)


def format_dataset(data: FrequencyData) -> str:
    lines = []
    if data.truncated_at_zero:
        lines.append("# truncated_at_zero=true")
    lines.append("count,frequency")
    lines += [f"{v},{f}" for v, f in zip(data.values, data.frequencies)]
    return "\n".join(lines) + "\n"


def load(name_or_path, truncated_at_zero: bool | None = None) -> FrequencyData:
    """A bundled fixture by name, otherwise a CSV file path."""
    p = Path(name_or_path)
    if not p.exists() and str(name_or_path) in FIXTURES:
        data = FIXTURES[str(name_or_path)]
        if truncated_at_zero is not None and truncated_at_zero != data.truncated_at_zero:
            data = FrequencyData(data.values, data.frequencies, truncated_at_zero)
        return data
    return read_dataset(p, truncated_at_zero)
