"""Shared domain types, input validation and file formats.

Observation matrices are plain 2-D ``float64`` numpy arrays; use
:func:`check_matrix` to validate anything array-like. Indices are 0-based
everywhere in the library and 1-based in the support file format.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from .exceptions import (
    DimensionMismatch,
    IndexOutOfBounds,
    NonFiniteEntry,
    OutOfRange,
    SubmatrixTooLarge,
)

ONE_SIDED = "one_sided"
TWO_SIDED = "two_sided"


def check_matrix(Y, *, name="matrix") -> np.ndarray:
    """Return ``Y`` as a C-contiguous 2-D float64 array with finite entries.

    Raises :class:`NonFiniteEntry` naming the first offending cell (1-based),
    and :class:`DimensionMismatch` when the input is not two-dimensional or
    is empty.
    """
    arr = np.ascontiguousarray(np.asarray(Y, dtype=np.float64))
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must have at least one row and column")
    bad = ~np.isfinite(arr)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonFiniteEntry(
            f"{name} has non-finite entry {arr[i, j]!r} at row {i + 1}, column {j + 1}"
        )
    return arr


@dataclass(frozen=True)
class ProblemShape:
    """Ambient size ``(N, M)`` and submatrix size ``(n, m)``."""

    N: int
    M: int
    n: int
    m: int

    def __post_init__(self):
        for name in ("N", "M", "n", "m"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise OutOfRange(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n > self.N or self.m > self.M:
            raise SubmatrixTooLarge(
                f"submatrix {self.n}x{self.m} does not fit in {self.N}x{self.M}"
            )

    @property
    def p(self) -> float:
        return self.n / self.N

    @property
    def q(self) -> float:
        return self.m / self.M

    @property
    def fractions(self) -> tuple[Fraction, Fraction]:
        """``(p, q)`` as exact rationals."""
        return Fraction(self.n, self.N), Fraction(self.m, self.M)

    def transposed(self) -> "ProblemShape":
        return ProblemShape(self.M, self.N, self.m, self.n)


def validate_shape(Y, shape: ProblemShape) -> np.ndarray:
    """Check ``Y`` against ``shape`` and return the validated array.

    ``shape`` may also be a raw ``(N, M, n, m)`` tuple, in which case the
    dimension check runs before the submatrix-size check.
    """
    Y = check_matrix(Y)
    if not isinstance(shape, ProblemShape):
        N, M, n, m = shape
        if Y.shape != (N, M):
            raise DimensionMismatch(f"matrix is {Y.shape[0]}x{Y.shape[1]}, shape says {N}x{M}")
        shape = ProblemShape(N, M, n, m)
    if Y.shape != (shape.N, shape.M):
        raise DimensionMismatch(
            f"matrix is {Y.shape[0]}x{Y.shape[1]}, shape says {shape.N}x{shape.M}"
        )
    return Y


def _index_tuple(idx, bound, label):
    out = tuple(int(i) for i in idx)
    if len(out) == 0:
        raise OutOfRange(f"{label} must be nonempty")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise OutOfRange(f"{label} must be strictly increasing: {out}")
    if bound is not None and (out[0] < 0 or out[-1] >= bound):
        raise IndexOutOfBounds(f"{label} {out} outside 0..{bound - 1}")
    if out[0] < 0:
        raise IndexOutOfBounds(f"{label} has negative index")
    return out


@dataclass(frozen=True)
class SubmatrixSupport:
    """Product support ``rows x cols`` given as sorted 0-based index tuples."""

    rows: tuple
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", _index_tuple(self.rows, None, "rows"))
        object.__setattr__(self, "cols", _index_tuple(self.cols, None, "cols"))

    @classmethod
    def from_masks(cls, row_mask, col_mask):
        return cls(np.flatnonzero(row_mask), np.flatnonzero(col_mask))

    @classmethod
    def upper_left(cls, n, m):
        return cls(range(n), range(m))

    @property
    def n(self):
        return len(self.rows)

    @property
    def m(self):
        return len(self.cols)

    def check_bounds(self, N, M):
        _index_tuple(self.rows, N, "rows")
        _index_tuple(self.cols, M, "cols")
        return self

    def mask(self, N, M) -> np.ndarray:
        self.check_bounds(N, M)
        out = np.zeros((N, M), dtype=bool)
        out[np.ix_(self.rows, self.cols)] = True
        return out

    def permuted(self, row_perm, col_perm) -> "SubmatrixSupport":
        """Support after ``Y -> Y[row_perm][:, col_perm]``."""
        inv_r = np.argsort(row_perm)
        inv_c = np.argsort(col_perm)
        return SubmatrixSupport(np.sort(inv_r[list(self.rows)]), np.sort(inv_c[list(self.cols)]))


@dataclass(frozen=True)
class SignalSpec:
    """Elevated-mean pattern on a support.

    ``values`` (optional) holds the per-cell ``s_ij`` on the support as an
    ``n x m`` array. When omitted, one-sided signals are the constant
    ``amplitude`` and two-sided signals get independent random signs at
    :meth:`materialize` time.
    """

    support: SubmatrixSupport
    amplitude: float
    sidedness: str = ONE_SIDED
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sidedness not in (ONE_SIDED, TWO_SIDED):
            raise OutOfRange(f"unknown sidedness {self.sidedness!r}")
        if not self.amplitude > 0:
            raise OutOfRange(f"amplitude must be positive, got {self.amplitude!r}")
        if self.values is not None:
            vals = np.array(self.values, dtype=np.float64)
            if vals.shape != (self.support.n, self.support.m):
                raise DimensionMismatch(
                    f"values must be {self.support.n}x{self.support.m}, got {vals.shape}"
                )
            mag = vals if self.sidedness == ONE_SIDED else np.abs(vals)
            if not np.all(mag >= self.amplitude):
                raise OutOfRange("per-cell values must reach the amplitude on the support")
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    def block(self, rng=None) -> np.ndarray:
        n, m = self.support.n, self.support.m
        if self.values is not None:
            return self.values.copy()
        if self.sidedness == ONE_SIDED:
            return np.full((n, m), float(self.amplitude))
        if rng is None:
            raise OutOfRange("two-sided random-sign signal needs an rng")
        signs = np.where(rng.random((n, m)) < 0.5, -1.0, 1.0)
        return signs * self.amplitude

    def materialize(self, N, M, rng=None) -> np.ndarray:
        """Full ``N x M`` mean matrix, exactly zero off the support."""
        self.support.check_bounds(N, M)
        S = np.zeros((N, M))
        S[np.ix_(self.support.rows, self.support.cols)] = self.block(rng)
        return S


@dataclass(frozen=True)
class TestReport:
    """Outcome of one detector run. ``reject`` is ``statistic > threshold``."""

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    threshold: float
    detector: str
    located_support: Optional[SubmatrixSupport] = None
    details: dict = field(default_factory=dict)
    reject: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "statistic", float(self.statistic))
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "reject", bool(self.statistic > self.threshold))

    def as_row(self) -> dict[str, Any]:
        sup = self.located_support
        return {
            "detector": self.detector,
            "statistic": repr(self.statistic),
            "threshold": repr(self.threshold),
            "reject": int(self.reject),
            "rows": "" if sup is None else " ".join(str(i + 1) for i in sup.rows),
            "cols": "" if sup is None else " ".join(str(j + 1) for j in sup.cols),
        }


# ---------------------------------------------------------------- file formats


def read_matrix_csv(path) -> np.ndarray:
    """Read a header-less CSV matrix (one row per line, ``.`` decimal point)."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError as exc:
                raise NonFiniteEntry(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise DimensionMismatch(f"{path}: empty matrix file")
    width = len(rows[0])
    for k, r in enumerate(rows, start=1):
        if len(r) != width:
            raise DimensionMismatch(f"{path}: row {k} has {len(r)} fields, expected {width}")
    return check_matrix(rows, name=str(path))


def write_matrix_csv(path, Y) -> None:
    """Write ``Y`` so that :func:`read_matrix_csv` recovers it bit-exactly."""
    Y = check_matrix(Y)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in Y:
            w.writerow([repr(float(v)) for v in row])


def read_support(path) -> SubmatrixSupport:
    """Two lines of comma-separated 1-based indices: rows, then columns."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) != 2:
        raise DimensionMismatch(f"{path}: support file needs exactly two lines")
    rows, cols = ([int(t) - 1 for t in ln.split(",")] for ln in lines)
    return SubmatrixSupport(rows, cols)


def write_support(path, support: SubmatrixSupport) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(str(i + 1) for i in support.rows) + "\n")
        fh.write(",".join(str(j + 1) for j in support.cols) + "\n")
