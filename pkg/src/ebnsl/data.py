"""Binary CSV ingestion and sufficient statistics."""

from __future__ import annotations

import csv
import threading
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import CountVector, Dataset, ParseError, make_parent_set


class CsvParseError(ParseError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f"row {row}" + (f", column {column!r}" if column is not None else "") + ": "
        super().__init__(where + message)


def load_csv(path) -> Dataset:
    """Read a header + 0/1 CSV file.

    Row numbers in errors are file line numbers (the header is row 1).
    Missing files raise ``FileNotFoundError``.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty file: header required") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise CsvParseError("blank variable name in header", row=1)
        seen = set()
        for h in header:
            if h in seen:
                raise CsvParseError(f"duplicate variable name {h!r}", row=1, column=h)
            seen.add(h)

        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CsvParseError(f"expected {len(header)} fields, found {len(rec)}", row=lineno)
            vals = []
            for name, cell in zip(header, rec):
                cell = cell.strip()
                if cell == "0":
                    vals.append(0)
                elif cell == "1":
                    vals.append(1)
                else:
                    raise CsvParseError(f"non-binary value {cell!r}", row=lineno, column=name)
            rows.append(vals)
    if not rows:
        raise CsvParseError("no instances")
    return Dataset(tuple(header), np.array(rows, dtype=np.uint8))


def save_csv(dataset: Dataset, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.names)
        w.writerows(dataset.values.tolist())


def counts(dataset: Dataset, child: int, parents: Iterable[int]) -> CountVector:
    parents = make_parent_set(parents)
    n = dataset.n
    if not 0 <= child < n:
        raise ValueError(f"child index {child} out of range")
    if child in parents:
        raise ValueError(f"child {child} cannot be among its parents")
    if parents and parents[-1] >= n:
        raise ValueError(f"parent index {parents[-1]} out of range")
    k = len(parents)
    vals = dataset.values
    if k:
        weights = np.left_shift(1, np.arange(k, dtype=np.int64))
        config = vals[:, list(parents)].astype(np.int64) @ weights
    else:
        config = np.zeros(dataset.N, dtype=np.int64)
    flat = np.bincount(config * 2 + vals[:, child], minlength=2 << k)
    return CountVector(child, parents, flat.reshape(-1, 2))


class CountCache:
    """Thread-safe memo of :func:`counts` keyed by (child, parents)."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __call__(self, child: int, parents) -> CountVector:
        key = (child, make_parent_set(parents))
        with self._lock:
            hit = self._memo.get(key)
        if hit is None:
            hit = counts(self.dataset, *key)
            with self._lock:
                self._memo.setdefault(key, hit)
        return hit
