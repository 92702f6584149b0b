"""Log-combinatorics, detection thresholds and closed-form boundaries."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ProblemShape
from .exceptions import DegenerateShape, DenseRegime, OutOfRange

DEFAULT_DELTA = 0.1
DENSE = "dense"
SPARSE = "sparse"


_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_error(x: int) -> float:
    """``log(x!) - (x log x - x + log sqrt(2 pi x))`` for integer ``x >= 1``."""
    if x <= 15:
        return math.lgamma(x + 1) - (x * math.log(x) - x + _LN_SQRT_2PI + 0.5 * math.log(x))
    x2 = 1.0 / (x * x)
    return (1 / 12 - x2 * (1 / 360 - x2 * (1 / 1260 - x2 * (1 / 1680 - x2 / 1188)))) / x


def log_binomial(n: int, k: int) -> float:
    """Natural log of ``C(n, k)``, accurate to a few ulps.

    Small ``min(k, n - k)`` sums logs of exact ratios. Otherwise the Stirling
    main term is split from the Stirling error terms so nothing cancels
    (a plain ``lgamma`` difference loses ~5 digits at ``n ~ 1e6``).
    """
    n, k = int(n), int(k)
    if n < 0 or k < 0 or k > n:
        raise OutOfRange(f"log_binomial needs 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if k <= 20:
        return math.fsum(math.log((n - k + i) / i) for i in range(1, k + 1))
    nk = n - k
    main = k * math.log(n / k) - nk * math.log1p(-k / n)
    return (
        main
        + 0.5 * math.log(n / (2.0 * math.pi * k * nk))
        + (_stirling_error(n) - _stirling_error(k) - _stirling_error(nk))
    )


def log_submatrix_count(shape: ProblemShape) -> float:
    """``log G_nm`` where ``G_nm = C(N, n) C(M, m)`` counts candidate supports."""
    return log_binomial(shape.N, shape.n) + log_binomial(shape.M, shape.m)


def submatrix_count(shape: ProblemShape) -> int:
    return math.comb(shape.N, shape.n) * math.comb(shape.M, shape.m)


def scan_threshold(shape: ProblemShape, delta: float = 0.0) -> float:
    """``sqrt((2 + delta) log G_nm)``; ``delta = 0`` is the known-variance Gaussian case."""
    if delta < 0:
        raise OutOfRange(f"inflation delta must be >= 0, got {delta}")
    return math.sqrt((2.0 + delta) * log_submatrix_count(shape))


def adaptive_threshold(shape: ProblemShape) -> float:
    """``sqrt(2 log(N M G_nm))``, the per-size normaliser of the adaptive scan."""
    return math.sqrt(2.0 * (math.log(shape.N) + math.log(shape.M) + log_submatrix_count(shape)))


@dataclass(frozen=True)
class BoundaryReport:
    dense_term: float
    sparse_term: float
    a_star: float
    regime: str


def _require_sparse(shape):
    if shape.n >= shape.N or shape.m >= shape.M:
        raise DegenerateShape(
            f"boundary undefined for p = {shape.p:g}, q = {shape.q:g} (need both < 1)"
        )


def detection_boundary(shape: ProblemShape) -> BoundaryReport:
    """Minimum of the dense (linear) and sparse (scan) detection rates."""
    _require_sparse(shape)
    n, m = shape.n, shape.m
    dense = 1.0 / math.sqrt(n * m * shape.p * shape.q)
    sparse = math.sqrt(
        2.0 * (n * math.log(shape.N / n) + m * math.log(shape.M / m)) / (n * m)
    )
    if dense <= sparse:
        return BoundaryReport(dense, sparse, dense, DENSE)
    return BoundaryReport(dense, sparse, sparse, SPARSE)


def phi_beta(beta: float) -> float:
    """Boundary constant for unstructured sparse alternatives, ``beta in (1/2, 1)``."""
    if not 0.5 < beta < 1.0:
        raise OutOfRange(f"beta must lie in (1/2, 1), got {beta}")
    if beta <= 0.75:
        return math.sqrt(2.0 * beta - 1.0)
    return math.sqrt(2.0) * (1.0 - math.sqrt(1.0 - beta))


def sparsity_index(shape: ProblemShape) -> float:
    """``beta = 1 - log(nm) / log(NM)``."""
    NM = shape.N * shape.M
    if NM == 1:
        raise DegenerateShape("1x1 matrix has no sparsity index")
    return 1.0 - math.log(shape.n * shape.m) / math.log(NM)


def no_structure_boundary(shape: ProblemShape) -> float:
    """Boundary when the ``nm`` elevated cells need not form a product set.

    Raises :class:`DenseRegime` for ``beta <= 1/2``; there the dense term of
    :func:`detection_boundary` applies instead.
    """
    beta = sparsity_index(shape)
    if beta <= 0.5:
        raise DenseRegime(f"beta = {beta:.6g} <= 1/2; use the dense term")
    if beta >= 1.0:
        raise DegenerateShape("n = m = 1 gives beta = 1")
    return phi_beta(beta) * math.sqrt(math.log(shape.N * shape.M))


def rectangle_boundary(shape: ProblemShape) -> float:
    """Boundary for contiguous ``n x m`` rectangles."""
    _require_sparse(shape)
    return math.sqrt(
        2.0 * (math.log(shape.N / shape.n) + math.log(shape.M / shape.m)) / (shape.n * shape.m)
    )
