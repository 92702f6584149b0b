import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from subdetect.combinatorics import (
    adaptive_threshold, detection_boundary, log_binomial, log_submatrix_count,
    no_structure_boundary, phi_beta, rectangle_boundary, scan_threshold, sparsity_index,
)
from subdetect.core import ProblemShape
from subdetect.exceptions import DegenerateShape, DenseRegime, OutOfRange

S200 = ProblemShape(200, 200, 10, 10)
S10 = ProblemShape(10, 10, 2, 2)


def test_log_binomial_examples():
    assert log_binomial(10, 2) == pytest.approx(math.log(45), rel=1e-15)
    assert log_binomial(7, 0) == 0.0
    assert log_binomial(200, 10) == log_binomial(200, 190)
    with pytest.raises(OutOfRange):
        log_binomial(3, 4)


def test_log_binomial_matches_big_integers():
    for n in range(61):
        for k in range(n + 1):
            exact = math.log(math.comb(n, k)) if math.comb(n, k) > 1 else 0.0
            got = log_binomial(n, k)
            if exact == 0.0:
                assert got == 0.0
            else:
                assert abs(got - exact) <= 1e-12 * exact, (n, k)


@pytest.mark.parametrize("n,k", [(10**6, 2), (10**6, 21), (10**6, 1000), (10**6, 5 * 10**5),
                                 (999_983, 123_457)])
def test_log_binomial_large_n(n, k):
    with mpmath.workdps(40):
        exact = float(mpmath.log(mpmath.binomial(n, k)))
    assert log_binomial(n, k) == pytest.approx(exact, rel=1e-12)


@given(st.integers(0, 10**6), st.data())
def test_log_binomial_symmetric(n, data):
    k = data.draw(st.integers(0, n))
    assert log_binomial(n, k) == log_binomial(n, n - k)


def test_log_submatrix_count():
    assert log_submatrix_count(S10) == pytest.approx(math.log(2025), rel=1e-14)
    assert log_submatrix_count(ProblemShape(6, 9, 6, 9)) == 0.0
    v = log_submatrix_count(S200)
    assert v == pytest.approx(math.log(math.comb(200, 10) ** 2), rel=1e-13)


def test_log_count_asymptotic_ratio_tends_to_one():
    # log G_nm / (n log 1/p + m log 1/q) behaves like 1 + 1/log(1/p) for small p
    ratios = []
    for N in (200, 2000, 20000, 200000):
        s = ProblemShape(N, N, 10, 10)
        ratios.append(log_submatrix_count(s) / (20 * math.log(N / 10)))
    assert ratios[0] == pytest.approx(1.2567916, abs=1e-6)
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert 1.0 < ratios[-1] < 1.1


def test_scan_threshold():
    assert scan_threshold(S10) == pytest.approx(3.9021340262837, rel=1e-12)
    assert scan_threshold(S10, 0.1) == pytest.approx(3.9984975249505, rel=1e-12)
    assert scan_threshold(ProblemShape(5, 5, 5, 5)) == 0.0
    with pytest.raises(OutOfRange):
        scan_threshold(S10, -0.1)


@given(st.floats(0, 5), st.floats(0, 5))
def test_scan_threshold_monotone_in_delta(d1, d2):
    lo, hi = sorted((d1, d2))
    assert scan_threshold(S200, lo) <= scan_threshold(S200, hi)


def test_adaptive_threshold():
    assert adaptive_threshold(S10) == pytest.approx(math.sqrt(2 * math.log(202500)), rel=1e-13)
    assert adaptive_threshold(ProblemShape(7, 3, 7, 3)) == pytest.approx(math.sqrt(2 * math.log(21)))


@given(st.integers(2, 300), st.integers(2, 300), st.data())
def test_adaptive_exceeds_scan(N, M, data):
    s = ProblemShape(N, M, data.draw(st.integers(1, N)), data.draw(st.integers(1, M)))
    assert adaptive_threshold(s) > scan_threshold(s)


def test_detection_boundary_example():
    b = detection_boundary(S200)
    assert b.dense_term == pytest.approx(2.0, rel=1e-14)
    assert b.sparse_term == pytest.approx(math.sqrt(0.4 * math.log(20)), rel=1e-14)
    assert b.a_star == pytest.approx(1.0946656610, rel=1e-9)
    assert b.regime == "sparse"


def test_detection_boundary_dense_regime():
    b = detection_boundary(ProblemShape(100, 100, 40, 40))
    assert b.a_star == b.dense_term and b.regime == "dense"


def test_detection_boundary_degenerate():
    with pytest.raises(DegenerateShape):
        detection_boundary(ProblemShape(10, 10, 10, 2))


def test_boundary_decreases_with_submatrix_size():
    vals = [detection_boundary(ProblemShape(200, 200, k, k)).a_star for k in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@given(st.integers(2, 400), st.integers(2, 400), st.data())
def test_boundary_symmetric_in_axes(N, M, data):
    s = ProblemShape(N, M, data.draw(st.integers(1, N - 1)), data.draw(st.integers(1, M - 1)))
    assert detection_boundary(s).a_star == pytest.approx(detection_boundary(s.transposed()).a_star,
                                                         rel=1e-14)


def test_phi_beta():
    assert phi_beta(0.75) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert math.sqrt(2) * (1 - math.sqrt(0.25)) == pytest.approx(math.sqrt(0.5))
    assert phi_beta(0.5 + 1e-12) < 2e-6
    assert phi_beta(0.9) == pytest.approx(0.96699996687, rel=1e-10)
    for bad in (0.5, 1.0, 0.2):
        with pytest.raises(OutOfRange):
            phi_beta(bad)


def test_phi_beta_continuous_and_increasing():
    grid = np.linspace(0.5, 1.0, 1002)[1:-1]
    vals = np.array([phi_beta(b) for b in grid])
    assert np.all(np.diff(vals) > 0)
    assert np.max(np.abs(np.diff(vals))) < 0.05


def test_no_structure_boundary():
    beta = sparsity_index(S200)
    assert beta == pytest.approx(1 - math.log(100) / math.log(40000), rel=1e-15)
    assert no_structure_boundary(S200) == pytest.approx(1.17741002, rel=1e-8)
    with pytest.raises(DenseRegime):
        no_structure_boundary(ProblemShape(100, 100, 10, 10))  # nm = sqrt(NM)
    betas = [sparsity_index(ProblemShape(400, 400, k, k)) for k in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(betas, betas[1:]))


def test_rectangle_boundary():
    assert rectangle_boundary(S200) == pytest.approx(0.34616367652, rel=1e-10)
    # square case with n = N^(1-beta): N^-(1-beta) sqrt(4 beta log N)
    N, n = 200, 10
    beta = 1 - math.log(n) / math.log(N)
    assert rectangle_boundary(ProblemShape(N, N, n, n)) == pytest.approx(
        N ** -(1 - beta) * math.sqrt(4 * beta * math.log(N)), rel=1e-12)


@given(st.integers(2, 400), st.integers(2, 400), st.data())
def test_rectangle_below_sparse_term(N, M, data):
    s = ProblemShape(N, M, data.draw(st.integers(1, N - 1)), data.draw(st.integers(1, M - 1)))
    assert rectangle_boundary(s) <= detection_boundary(s).sparse_term * (1 + 1e-12)
