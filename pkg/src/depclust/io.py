"""CSV and partition-file reading and writing."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import Partition
from .errors import InputError, SpecError
from .estimators import SampleMatrix

MISSING = {"", "na", "nan", "null", "none", "?"}


def parse_csv(text: str) -> SampleMatrix:
    """Header row of labels, then one numeric row per observation."""
    rows = list(csv.reader(io.StringIO(text)))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise InputError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise InputError("header row has an empty column name")
    m = len(header)
    values = np.empty((len(rows) - 1, m))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != m:
            raise InputError(f"row {r} has {len(row)} fields, header has {m}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell.lower() in MISSING:
                raise InputError(f"missing value at row {r}, column {header[c]!r}")
            try:
                values[r - 2, c] = float(cell)
            except ValueError:
                raise InputError(f"non-numeric value {cell!r} at row {r}, "
                                 f"column {header[c]!r}") from None
            if not np.isfinite(values[r - 2, c]):
                raise InputError(f"non-finite value at row {r}, column {header[c]!r}")
    return SampleMatrix(values, tuple(header))


def read_csv(path) -> SampleMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return parse_csv(text)


def format_csv(data: SampleMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(data.labels)
    for row in data.values:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def parse_partition(text: str) -> list[list[str]]:
    """One block per line, labels separated by commas; blank lines ignored."""
    blocks = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        labels = [x.strip() for x in line.split(",") if x.strip()]
        blocks.append(labels)
    if not blocks:
        raise SpecError("partition file is empty")
    return blocks


def read_partition(path) -> list[list[str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return parse_partition(text)


def format_partition(blocks: Sequence[Sequence[str]]) -> str:
    return "".join(",".join(b) + "\n" for b in blocks)


def partitions_on_common_universe(a: list[list[str]], b: list[list[str]]) -> tuple[Partition, Partition]:
    """Index both label partitions against the same ordered universe."""
    ua = [x for blk in a for x in blk]
    ub = [x for blk in b for x in blk]
    if set(ua) != set(ub) or len(ua) != len(set(ua)) or len(ub) != len(set(ub)):
        raise SpecError("partitions do not cover the same set of labels exactly once")
    universe = sorted(ua)
    return Partition.from_labels(a, universe), Partition.from_labels(b, universe)
