"""Maximising the normalised block sum ``Y_C`` over ``n x m`` product supports.

:func:`alternating_search` is the randomised row/column alternating heuristic
used at scale; :func:`brute_force_max` enumerates every support and serves
as the exact oracle on small instances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .combinatorics import submatrix_count
from .core import ProblemShape, SubmatrixSupport, check_matrix, validate_shape
from .exceptions import BudgetExceeded, OutOfRange, SearchDidNotConverge

DEFAULT_BUDGET = 10**7
# restarts stop unless a half-step improves the block sum by more than this
# relative amount; guards against round-off ping-pong between tied supports
_REL_TOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    """Alternating-search settings.

    Ties in the "largest sums" selections always go to the lowest index, and
    ties between restarts to the lowest restart index.
    """

    restarts: int = 1000
    max_iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if int(self.restarts) < 1:
            raise OutOfRange(f"restarts must be >= 1, got {self.restarts}")
        if int(self.max_iterations) < 1:
            raise OutOfRange(f"max_iterations must be >= 1, got {self.max_iterations}")
        _rng._as_seed(self.seed)


@dataclass(frozen=True)
class SearchResult:
    support: SubmatrixSupport
    score: float
    restarts_used: int
    converged: bool
    iterations: int = 0


def submatrix_score(Y, support: SubmatrixSupport) -> float:
    """``Y_C``: sum of the entries on ``support`` divided by ``sqrt(nm)``."""
    Y = check_matrix(Y)
    support.check_bounds(*Y.shape)
    block = Y[np.ix_(support.rows, support.cols)]
    return float(block.sum() / math.sqrt(support.n * support.m))


def top_k_mask(values: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the ``k`` largest entries in each row of ``values``.

    Uses partial selection; entries tied with the k-th largest value are
    taken in increasing index order.
    """
    values = np.atleast_2d(values)
    width = values.shape[1]
    if k >= width:
        return np.ones(values.shape, dtype=bool)
    kth = np.partition(values, width - k, axis=1)[:, width - k, None]
    above = values > kth
    tied = values == kth
    need = k - above.sum(axis=1, keepdims=True)
    return above | (tied & (np.cumsum(tied, axis=1) <= need))


def _initial_rows(N, n, cfg: SearchConfig) -> np.ndarray:
    # restart r draws its starting rows from its own stream (seed, r)
    R = np.zeros((cfg.restarts, N), dtype=bool)
    for r in range(cfg.restarts):
        R[r, _rng.stream(cfg.seed, r).choice(N, size=n, replace=False)] = True
    return R


def _alternate(Y, R0, n, m, max_iterations):
    """Run the alternating ascent from every row mask in ``R0`` at once."""
    K = R0.shape[0]
    R = R0.copy()
    C = np.zeros((K, Y.shape[1]), dtype=bool)
    best = np.full(K, -np.inf)
    iters = np.zeros(K, dtype=np.int64)
    active = np.arange(K)
    Yt = Y.T

    def half_step(sums, k, state):
        nonlocal active
        new = top_k_mask(sums, k)
        s = np.where(new, sums, 0.0).sum(axis=1)
        prev = best[active]
        tol = _REL_TOL * (1.0 + np.abs(np.where(np.isfinite(prev), prev, 0.0)))
        if np.any(s < prev - tol):
            raise SearchDidNotConverge("alternating step decreased the block sum")
        up = s > prev + tol
        keep = active[up]
        state[keep] = new[up]
        best[keep] = s[up]
        active = keep

    for _ in range(max_iterations):
        if active.size == 0:
            break
        iters[active] += 1
        half_step(R[active].astype(np.float64) @ Y, m, C)
        if active.size == 0:
            break
        half_step(C[active].astype(np.float64) @ Yt, n, R)
    else:
        if active.size:
            raise SearchDidNotConverge(
                f"{active.size} restarts still improving after {max_iterations} iterations"
            )
    return R, C, best, iters


def alternating_search(Y, shape: ProblemShape, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Approximate ``max_C Y_C`` by alternating row/column selection.

    Each restart starts from ``n`` uniformly drawn rows, then alternately
    keeps the ``m`` columns with the largest sums over the current rows and
    the ``n`` rows with the largest sums over the current columns, until the
    block sum stops strictly increasing. The best restart wins.
    """
    Y = validate_shape(Y, shape)
    R, C, best, iters = _alternate(
        Y, _initial_rows(shape.N, shape.n, cfg), shape.n, shape.m, cfg.max_iterations
    )
    r = int(np.argmax(best))
    support = SubmatrixSupport.from_masks(R[r], C[r])
    return SearchResult(
        support=support,
        score=submatrix_score(Y, support),
        restarts_used=cfg.restarts,
        converged=True,
        iterations=int(iters.max()),
    )


def _combos(size, k):
    return np.array(list(itertools.combinations(range(size), k)), dtype=np.intp).reshape(-1, k)


def enumerate_block_sums(Y, shape: ProblemShape, budget: int = DEFAULT_BUDGET, chunk: int = 1 << 20):
    """Yield ``(row_combos, col_combos, sums)`` covering every support.

    ``sums[a, b]`` is the raw block sum over rows ``row_combos[a]`` and
    columns ``col_combos[b]``. Row combinations come in lexicographic chunks,
    so flattening the chunks in order gives lexicographic support order.
    """
    count = submatrix_count(shape)
    if count > budget:
        raise BudgetExceeded(count, budget)
    Y = validate_shape(Y, shape)
    rows = _combos(shape.N, shape.n)
    cols = _combos(shape.M, shape.m)
    step = max(1, chunk // len(cols))
    for start in range(0, len(rows), step):
        rc = rows[start:start + step]
        colsums = Y[rc].sum(axis=1)
        yield rc, cols, colsums[:, cols].sum(axis=2)


def brute_force_max(Y, shape: ProblemShape, budget: int = DEFAULT_BUDGET) -> SearchResult:
    """Exact ``t_max`` by enumerating all ``C(N,n) C(M,m)`` supports.

    Raises :class:`BudgetExceeded` when the count is above ``budget``.
    Among tied maximisers the lexicographically first support is returned.
    """
    best, arg = -np.inf, None
    for rc, cols, sums in enumerate_block_sums(Y, shape, budget):
        flat = int(np.argmax(sums))
        val = sums.flat[flat]
        if val > best:
            a, b = divmod(flat, sums.shape[1])
            best, arg = val, (rc[a], cols[b])
    support = SubmatrixSupport(*arg)
    return SearchResult(
        support=support,
        score=submatrix_score(Y, support),
        restarts_used=1,
        converged=True,
    )
