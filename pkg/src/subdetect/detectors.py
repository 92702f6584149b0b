"""Known-variance Gaussian detectors.

All functions take an observation matrix and return a :class:`TestReport`.
Thresholds default to the analytic values; pass an empirically calibrated
value (see :mod:`subdetect.simulation`) to override.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .combinatorics import adaptive_threshold, scan_threshold
from .core import ProblemShape, SubmatrixSupport, TestReport, check_matrix, validate_shape
from .exceptions import DegenerateInput, DimensionMismatch, EmptyGrid, GridInfeasible, OutOfRange
from .search import DEFAULT_BUDGET, SearchConfig, alternating_search, brute_force_max

# Gaussian 99% quantile as used for the 1% linear test
DEFAULT_H = 2.3262
DEFAULT_T0 = 0.5
DEFAULT_HC_C = 2.5


def linear_statistic(Y) -> float:
    Y = check_matrix(Y)
    return float(Y.sum() / math.sqrt(Y.size))


def linear_test(Y, H: float = DEFAULT_H) -> TestReport:
    """Reject when the normalised grand sum exceeds ``H``."""
    return TestReport(linear_statistic(Y), H, "linear")


def scan_statistic(Y, shape: ProblemShape, cfg: SearchConfig = SearchConfig(), exact: bool = False,
                   budget: int = DEFAULT_BUDGET):
    if exact:
        return brute_force_max(Y, shape, budget)
    return alternating_search(Y, shape, cfg)


def scan_test(Y, shape: ProblemShape, threshold: float | None = None,
              cfg: SearchConfig = SearchConfig(), exact: bool = False,
              budget: int = DEFAULT_BUDGET) -> TestReport:
    """Reject when ``t_max = max_C Y_C`` exceeds ``threshold`` (default ``T_nm``)."""
    source = "calibrated"
    if threshold is None:
        threshold, source = scan_threshold(shape), "analytic"
    res = scan_statistic(Y, shape, cfg, exact, budget)
    return TestReport(
        res.score, threshold, "scan", res.support,
        {"exact": exact, "threshold_source": source, "restarts": res.restarts_used},
    )


def combined_test(Y, shape: ProblemShape, H: float = DEFAULT_H, T: float | None = None,
                  cfg: SearchConfig = SearchConfig(), exact: bool = False,
                  budget: int = DEFAULT_BUDGET) -> TestReport:
    """Reject when the linear or the scan test rejects.

    The reported statistic is the larger of the two exceedances
    ``t_lin - H`` and ``t_max - T`` against threshold 0, so
    ``reject`` is exactly the logical or of the components.
    """
    Y = validate_shape(Y, shape)
    lin = linear_test(Y, H)
    scan = scan_test(Y, shape, T, cfg, exact, budget)
    return _either("combined", lin, scan)


def _either(name, lin: TestReport, scan: TestReport) -> TestReport:
    margin = max(lin.statistic - lin.threshold, scan.statistic - scan.threshold)
    return TestReport(margin, 0.0, name, scan.located_support, {"linear": lin, "scan": scan})


# ------------------------------------------------------------------ adaptive


@dataclass(frozen=True)
class AdaptiveGrid:
    """Candidate submatrix sizes ``(n, m)`` for the adaptive scan."""

    N: int
    M: int
    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted({(int(n), int(m)) for n, m in self.pairs}))
        if not pairs:
            raise EmptyGrid("adaptive grid has no (n, m) pairs")
        if len(pairs) != len(self.pairs):
            raise OutOfRange("adaptive grid pairs must be distinct")
        for n, m in pairs:
            ProblemShape(self.N, self.M, n, m)
        object.__setattr__(self, "pairs", pairs)

    def shapes(self):
        return [ProblemShape(self.N, self.M, n, m) for n, m in self.pairs]


def dyadic_grid(N: int, M: int) -> AdaptiveGrid:
    """Power-of-two sizes ``2 <= n <= N/2``, ``2 <= m <= M/2``.

    Keeps only pairs with ``log N / (n log(N/n)) + log M / (m log(M/m)) <= 1``,
    a finite-size stand-in for the requirement that these ratios vanish.
    """
    def sizes(total):
        out, s = [], 2
        while s <= total // 2:
            out.append(s)
            s *= 2
        return out

    pairs = []
    for n in sizes(N):
        for m in sizes(M):
            load = math.log(N) / (n * math.log(N / n)) + math.log(M) / (m * math.log(M / m))
            if load <= 1.0:
                pairs.append((n, m))
    if not pairs:
        raise EmptyGrid(f"no dyadic sizes satisfy the grid condition for {N}x{M}")
    return AdaptiveGrid(N, M, tuple(pairs))


def adaptive_scan_test(Y, grid: AdaptiveGrid, cfg: SearchConfig = SearchConfig(),
                       exact: bool = False, budget: int = DEFAULT_BUDGET) -> TestReport:
    """Scan every size in ``grid``; statistic is ``max t_max(n, m) / V_nm``, threshold 1."""
    Y = check_matrix(Y)
    if Y.shape != (grid.N, grid.M):
        raise DimensionMismatch(f"matrix is {Y.shape}, grid is for {(grid.N, grid.M)}")
    if grid.N * grid.M < 2:
        raise DegenerateInput("adaptive scan needs at least two cells")
    best, best_pair, best_sup = -np.inf, None, None
    per_pair = {}
    for shape in grid.shapes():
        res = scan_statistic(Y, shape, cfg, exact, budget)
        ratio = res.score / adaptive_threshold(shape)
        per_pair[(shape.n, shape.m)] = ratio
        if ratio > best:
            best, best_pair, best_sup = ratio, (shape.n, shape.m), res.support
    return TestReport(best, 1.0, "adaptive", best_sup, {"pair": best_pair, "ratios": per_pair})


# ----------------------------------------------------------------- rectangles


@dataclass(frozen=True)
class RectangleGrid:
    """Anchored ``n x m`` rectangles with offsets stepping by ``floor(n eta)``."""

    shape: ProblemShape
    eta: float
    row_offsets: tuple
    col_offsets: tuple

    @property
    def K(self):
        return len(self.row_offsets)

    @property
    def L(self):
        return len(self.col_offsets)


def _offsets(total, size, eta):
    step = max(1, int(math.floor(size * eta)))
    lo, hi = total - size * (1.0 + eta), total - size
    count = max(0, math.ceil(lo / step)) + 1
    last = (count - 1) * step
    if not lo <= last <= hi:
        raise GridInfeasible(
            f"no anchor sequence with step {step} ends in [{lo:g}, {hi}] for size {size} of {total}"
        )
    return tuple(range(0, last + 1, step))


def rectangle_grid(shape: ProblemShape, eta: float) -> RectangleGrid:
    """Smallest anchor grid whose last offsets land in ``[N - n(1+eta), N - n]``."""
    if not 0.0 < eta < 1.0:
        raise GridInfeasible(f"eta must lie in (0, 1), got {eta}")
    return RectangleGrid(
        shape, float(eta),
        _offsets(shape.N, shape.n, eta),
        _offsets(shape.M, shape.m, eta),
    )


def rectangle_scan_test(Y, shape: ProblemShape, eta: float) -> TestReport:
    """Max normalised sum over the anchored rectangles, threshold ``sqrt(2 log(KL))``."""
    Y = validate_shape(Y, shape)
    grid = rectangle_grid(shape, eta)
    n, m = shape.n, shape.m
    S = np.zeros((shape.N + 1, shape.M + 1))
    S[1:, 1:] = Y.cumsum(axis=0).cumsum(axis=1)
    r = np.asarray(grid.row_offsets)[:, None]
    c = np.asarray(grid.col_offsets)[None, :]
    sums = S[r + n, c + m] - S[r, c + m] - S[r + n, c] + S[r, c]
    Z = sums / math.sqrt(n * m)
    k, l = np.unravel_index(int(np.argmax(Z)), Z.shape)
    r0, c0 = grid.row_offsets[k], grid.col_offsets[l]
    support = SubmatrixSupport(range(r0, r0 + n), range(c0, c0 + m))
    threshold = math.sqrt(2.0 * math.log(grid.K * grid.L))
    return TestReport(Z[k, l], threshold, "rectangle", support, {"K": grid.K, "L": grid.L})


# ------------------------------------------------------------ high criticism


def high_criticism_statistic(Y, t0: float = DEFAULT_T0) -> float:
    """``max L(t)`` over ``t0`` and every distinct observed value above ``t0``.

    ``L(t)`` standardises the count of entries strictly above ``t`` by its
    null mean ``NM Phi(-t)`` and variance ``NM Phi(t) Phi(-t)``.
    """
    if not t0 > 0:
        raise OutOfRange(f"t0 must be positive, got {t0}")
    Y = check_matrix(Y)
    total = Y.size
    flat = np.sort(Y.ravel())
    grid = np.concatenate(([t0], np.unique(flat[flat > t0])))
    above = total - np.searchsorted(flat, grid, side="right")
    tail, body = norm.sf(grid), norm.cdf(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        L = (above - total * tail) / np.sqrt(total * body * tail)
    # tail underflow with a positive count: the statistic diverges
    L = np.where(tail > 0, L, np.where(above > 0, np.inf, -np.inf))
    return float(L.max())


def high_criticism_test(Y, t0: float = DEFAULT_T0, c: float = DEFAULT_HC_C) -> TestReport:
    """Reject when the criticism statistic exceeds ``sqrt(c log log(NM))``."""
    if not c > 2:
        raise OutOfRange(f"c must exceed 2, got {c}")
    Y = check_matrix(Y)
    if Y.size < 16:
        raise DegenerateInput("high criticism needs at least 16 cells")
    threshold = math.sqrt(c * math.log(math.log(Y.size)))
    return TestReport(high_criticism_statistic(Y, t0), threshold, "high_criticism", None,
                      {"t0": t0, "c": c})
