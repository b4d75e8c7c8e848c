"""Multivariate series container, lagged candidate sets and target alignment."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import (
    ConstantColumn,
    CSVParseError,
    NonFinite,
    SeriesError,
    SeriesTooShort,
)

__all__ = [
    "MultivariateSeries",
    "LaggedVariable",
    "AlignedSample",
    "standardize",
    "build_candidate_set",
    "align",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class MultivariateSeries:
    """``n`` samples of ``K`` real-valued variables, stored samples x variables.

    The array is copied and frozen on construction.
    """

    data: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise SeriesError(f"expected a 2-D array (samples x variables), got ndim={data.ndim}")
        n, K = data.shape
        if n < 2 or K < 2:
            raise SeriesError(f"need at least 2 samples and 2 variables, got shape {data.shape}")
        bad = ~np.isfinite(data)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise NonFinite(int(row), int(col))
        data.setflags(write=False)
        labels = tuple(str(s) for s in self.labels) if self.labels else tuple(f"X{j + 1}" for j in range(K))
        if len(labels) != K:
            raise SeriesError(f"{len(labels)} labels given for {K} variables")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def K(self) -> int:
        return self.data.shape[1]

    def permute(self, order: Sequence[int]) -> "MultivariateSeries":
        """Reorder variables; column ``j`` of the result is column ``order[j]`` here."""
        order = list(order)
        return MultivariateSeries(self.data[:, order], tuple(self.labels[j] for j in order))

    def decimate(self, q: int) -> "MultivariateSeries":
        """Keep every ``q``-th sample. No anti-alias filtering is applied."""
        if q < 1:
            raise SeriesError(f"decimation factor must be >= 1, got {q}")
        return MultivariateSeries(self.data[::q], self.labels)


class LaggedVariable(NamedTuple):
    """Past value of variable ``var`` at ``lag`` samples before the present."""

    var: int
    lag: int

    def __str__(self):
        return f"x{self.var + 1}(t-{self.lag})"


@dataclass(frozen=True)
class AlignedSample:
    """Lagged columns and the target, row-aligned to the same physical time.

    ``matrix[:, c]`` holds the samples of ``candidates[c]``.
    """

    target: np.ndarray
    matrix: np.ndarray
    candidates: tuple

    @property
    def n_eff(self) -> int:
        return self.target.shape[0]

    @property
    def columns(self) -> dict:
        return {lv: self.matrix[:, c] for c, lv in enumerate(self.candidates)}

    def column(self, lv: LaggedVariable) -> np.ndarray:
        return self.matrix[:, self.candidates.index(lv)]


def standardize(series: MultivariateSeries) -> MultivariateSeries:
    """Zero-mean, unit sample standard deviation (``ddof=1``) per column."""
    data = series.data
    mean = data.mean(axis=0)
    sd = data.std(axis=0, ddof=1)
    for j in range(series.K):
        # relative test: a column of identical values can carry rounding residue
        if sd[j] == 0.0 or sd[j] <= 1e-14 * max(1.0, abs(mean[j])):
            raise ConstantColumn(j, series.labels[j])
    return MultivariateSeries((data - mean) / sd, series.labels)


def build_candidate_set(K: int, L: int) -> list[LaggedVariable]:
    """All ``K * L`` strictly-past lagged variables, variable-major then lag."""
    if K < 2 or L < 1:
        raise ValueError(f"need K >= 2 and L >= 1, got K={K}, L={L}")
    return [LaggedVariable(j, lag) for j in range(K) for lag in range(1, L + 1)]


def align(
    series: MultivariateSeries,
    target_index: int,
    candidates: Sequence[LaggedVariable],
    horizon: int = 1,
) -> AlignedSample:
    """Materialize lagged columns against the ``horizon``-step-ahead target.

    With ``L`` the largest lag among ``candidates``, row ``t`` holds
    ``data[t + L - lag, var]`` for each candidate and the target
    ``data[t + L + horizon - 1, target_index]``.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not 0 <= target_index < series.K:
        raise IndexError(f"target_index {target_index} out of range for K={series.K}")
    candidates = tuple(LaggedVariable(*c) for c in candidates)
    if not candidates:
        raise ValueError("candidate set is empty")
    L = max(c.lag for c in candidates)
    n_eff = series.n - L - (horizon - 1)
    if n_eff < 1:
        raise SeriesTooShort(f"series of length {series.n} too short for L={L}, horizon={horizon}")
    data = series.data
    matrix = np.empty((n_eff, len(candidates)))
    for c, (var, lag) in enumerate(candidates):
        matrix[:, c] = data[L - lag : L - lag + n_eff, var]
    target = data[L + horizon - 1 : L + horizon - 1 + n_eff, target_index].copy()
    matrix.setflags(write=False)
    target.setflags(write=False)
    return AlignedSample(target=target, matrix=matrix, candidates=candidates)


def _parse_row(fields, lineno):
    values = []
    for field_ in fields:
        text = field_.strip()
        if not text:
            raise CSVParseError("missing value", lineno)
        try:
            value = float(text)
        except ValueError:
            raise CSVParseError(f"cannot parse {text!r} as a number", lineno) from None
        if not math.isfinite(value):
            raise CSVParseError(f"non-finite value {text!r}", lineno)
        values.append(value)
    return values


def _is_number(text) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv(path_or_buffer) -> MultivariateSeries:
    """Read a comma-separated file: optional header row, one sample per line.

    Errors carry the 1-based line number of the offending row.
    """
    if isinstance(path_or_buffer, (str, os.PathLike)):
        with open(path_or_buffer, newline="") as fh:
            text = fh.read()
    else:
        text = path_or_buffer.read()
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(io.StringIO(text))) if any(f.strip() for f in r)]
    if not rows:
        raise CSVParseError("file is empty")

    labels = ()
    first_line, first = rows[0]
    if any(f.strip() and not _is_number(f) for f in first):
        # non-numeric first row is a header
        labels = tuple(f.strip() for f in first)
        rows = rows[1:]
        if not rows:
            raise CSVParseError("no data rows after header", first_line)

    width = len(labels) if labels else len(rows[0][1])
    values = []
    for lineno, fields in rows:
        if len(fields) != width:
            raise CSVParseError(f"expected {width} fields, found {len(fields)}", lineno)
        values.append(_parse_row(fields, lineno))
    return MultivariateSeries(np.array(values), labels)


def write_csv(series: MultivariateSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(series.labels)
        for row in series.data:
            writer.writerow([repr(float(v)) for v in row])
