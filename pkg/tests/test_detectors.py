import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from subdetect.combinatorics import adaptive_threshold, detection_boundary
from subdetect.core import ProblemShape, SignalSpec, SubmatrixSupport
from subdetect.detectors import (
    DEFAULT_H, AdaptiveGrid, adaptive_scan_test, combined_test, dyadic_grid,
    high_criticism_statistic, high_criticism_test, linear_statistic, linear_test,
    rectangle_grid, rectangle_scan_test, scan_test,
)
from subdetect.estimators import CombinedDetector, HigherCriticismDetector
from subdetect.exceptions import (
    DegenerateInput, DimensionMismatch, EmptyGrid, GridInfeasible, OutOfRange,
)
from subdetect.search import SearchConfig, brute_force_max
from subdetect.simulation import (
    ExperimentPlan, calibrate_threshold, estimate_power, generate_null, plant_signal,
)

from conftest import gaussian


# ------------------------------------------------------------------ linear


def test_linear_zero_matrix():
    rep = linear_test(np.zeros((5, 7)))
    assert rep.statistic == 0.0 and rep.threshold == DEFAULT_H and not rep.reject


def test_linear_constant_matrix():
    assert linear_statistic(np.full((4, 9), 0.5)) == pytest.approx(0.5 * 6.0)


def test_linear_null_rate():
    stats = np.array([linear_statistic(gaussian(11, (20, 20), i)) for i in range(4000)])
    rate = np.mean(stats > DEFAULT_H)
    assert abs(rate - 0.01) < 4 * math.sqrt(0.01 * 0.99 / 4000)


# -------------------------------------------------------------------- scan


def test_scan_one_block_value_five():
    Y = np.zeros((4, 4))
    Y[1:3, 1:3] = 5.0
    rep = scan_test(Y, ProblemShape(4, 4, 2, 2), exact=True)
    assert rep.statistic == pytest.approx(10.0)
    assert rep.threshold == pytest.approx(math.sqrt(2 * math.log(36)))
    assert rep.threshold == pytest.approx(2.677, abs=1e-3)
    assert rep.reject
    assert rep.located_support == SubmatrixSupport((1, 2), (1, 2))
    assert rep.details["threshold_source"] == "analytic"


def test_scan_zero_matrix():
    rep = scan_test(np.zeros((6, 6)), ProblemShape(6, 6, 2, 2), 0.01, SearchConfig(5))
    assert rep.statistic == 0.0 and not rep.reject


# ---------------------------------------------------------------- combined


def test_combined_zero_matrix():
    assert not combined_test(np.zeros((6, 6)), ProblemShape(6, 6, 2, 2),
                             cfg=SearchConfig(5)).reject


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1.0, 3.0), st.floats(1.0, 4.0), st.floats(1.5, 4.0))
def test_combined_is_logical_or(seed, shift, H, T):
    Y = gaussian(seed, (6, 6)) + shift * (np.arange(36).reshape(6, 6) < 8)
    shape = ProblemShape(6, 6, 2, 2)
    rep = combined_test(Y, shape, H, T, exact=True)
    lin = linear_test(Y, H).reject
    scan = scan_test(Y, shape, T, exact=True).reject
    assert rep.reject == (lin or scan)


def test_combined_dense_regime_power():
    shape = ProblemShape(100, 100, 30, 30)
    b = detection_boundary(shape)
    assert b.regime == "dense"
    # the linear statistic has mean a*nm/sqrt(NM) = 9a; 4x the dense term puts it at 4
    a = 4 * b.dense_term
    det = CombinedDetector(30, 30, restarts=5)
    rejections = 0
    for r in range(100):
        Y = generate_null(100, 100, seed=1000 + r)
        Y = plant_signal(Y, SignalSpec(SubmatrixSupport.upper_left(30, 30), a))
        rep = det.set_params(seed=r).test(Y)
        rejections += rep.details["linear"].reject
    assert rejections >= 85


# ---------------------------------------------------------------- adaptive


def test_adaptive_zero_matrix():
    rep = adaptive_scan_test(np.zeros((8, 8)), AdaptiveGrid(8, 8, ((2, 2), (4, 4))),
                             SearchConfig(5))
    assert rep.statistic == 0.0 and rep.threshold == 1.0 and not rep.reject


def test_adaptive_singleton_grid_equals_scaled_scan():
    Y = gaussian(4, (9, 9))
    shape = ProblemShape(9, 9, 2, 3)
    rep = adaptive_scan_test(Y, AdaptiveGrid(9, 9, ((2, 3),)), exact=True)
    t = brute_force_max(Y, shape).score
    assert rep.statistic == pytest.approx(t / adaptive_threshold(shape))
    assert rep.details["pair"] == (2, 3)


def test_adaptive_grid_validation():
    with pytest.raises(EmptyGrid):
        AdaptiveGrid(10, 10, ())
    with pytest.raises(OutOfRange):
        AdaptiveGrid(10, 10, ((2, 2), (2, 2)))
    with pytest.raises(DimensionMismatch):
        adaptive_scan_test(np.zeros((5, 5)), AdaptiveGrid(6, 6, ((2, 2),)))


def test_dyadic_grid_condition():
    grid = dyadic_grid(200, 200)
    for n, m in grid.pairs:
        assert math.log(200) / (n * math.log(200 / n)) + math.log(200) / (m * math.log(200 / m)) <= 1
    assert (2, 2) not in grid.pairs and (64, 64) in grid.pairs


def test_adaptive_power_above_boundary():
    shape = ProblemShape(100, 100, 10, 10)
    a = 1.5 * detection_boundary(shape).a_star
    grid = AdaptiveGrid(100, 100, ((5, 5), (10, 10), (20, 20)))
    hits = 0
    for r in range(20):
        Y = plant_signal(generate_null(100, 100, seed=r),
                         SignalSpec(SubmatrixSupport.upper_left(10, 10), a))
        hits += adaptive_scan_test(Y, grid, SearchConfig(100, seed=r)).reject
    assert hits >= 17


# --------------------------------------------------------------- rectangle


def test_rectangle_grid_construction():
    g = rectangle_grid(ProblemShape(100, 100, 10, 10), 0.5)
    assert g.K == 18 and g.L == 18
    assert g.row_offsets[:3] == (0, 5, 10) and g.row_offsets[-1] == 85
    assert 100 - 10 * 1.5 <= g.row_offsets[-1] <= 90


def test_rectangle_grid_eta_range():
    for eta in (0.0, 1.0, -0.2):
        with pytest.raises(GridInfeasible):
            rectangle_grid(ProblemShape(100, 100, 10, 10), eta)


def test_rectangle_zero_matrix():
    rep = rectangle_scan_test(np.zeros((100, 100)), ProblemShape(100, 100, 10, 10), 0.5)
    assert rep.statistic == 0.0 and not rep.reject
    assert rep.threshold == pytest.approx(math.sqrt(2 * math.log(18 * 18)))


@pytest.mark.parametrize("r0,c0", [(0, 0), (7, 33), (42, 90), (13, 61)])
def test_rectangle_planted_block_overlap(r0, c0):
    eta, n = 0.5, 10
    Y = np.zeros((100, 100))
    Y[r0:r0 + n, c0:c0 + n] = 2.0
    rep = rectangle_scan_test(Y, ProblemShape(100, 100, n, n), eta)
    assert rep.reject
    sup = rep.located_support
    overlap = len(set(sup.rows) & set(range(r0, r0 + n))) * len(set(sup.cols) & set(range(c0, c0 + n)))
    assert overlap / n**2 >= (1 - eta) ** 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rectangle_never_exceeds_exact_scan(seed):
    Y = gaussian(seed, (12, 12))
    shape = ProblemShape(12, 12, 3, 3)
    rect = rectangle_scan_test(Y, shape, 0.5)
    assert rect.statistic <= brute_force_max(Y, shape).score + 1e-12


# ----------------------------------------------------------- high criticism


def test_hc_threshold():
    rep = high_criticism_test(np.zeros((200, 200)), c=2.5)
    assert rep.threshold == pytest.approx(math.sqrt(2.5 * math.log(math.log(40000))))
    assert rep.threshold == pytest.approx(2.42927, abs=1e-5)


def test_hc_all_below_t0():
    Y = np.full((10, 10), 0.1)
    total = 100
    expected = -total * norm.sf(0.5) / math.sqrt(total * norm.cdf(0.5) * norm.sf(0.5))
    assert high_criticism_statistic(Y, 0.5) == pytest.approx(expected)
    assert not high_criticism_test(Y).reject


def test_hc_hand_computed():
    Y = np.array([[0.0, 1.0], [2.0, 3.0]] * 2)
    t = 2.0
    # strictly above 2.0: the two 3.0 entries
    L2 = (2 - 8 * norm.sf(t)) / math.sqrt(8 * norm.cdf(t) * norm.sf(t))
    Ls = [(k - 8 * norm.sf(u)) / math.sqrt(8 * norm.cdf(u) * norm.sf(u))
          for u, k in ((0.5, 4), (1.0, 2), (2.0, 2), (3.0, 0))]
    assert L2 in Ls
    assert high_criticism_statistic(Y, 0.5) == pytest.approx(max(Ls))


def test_hc_validation():
    with pytest.raises(OutOfRange):
        high_criticism_test(np.zeros((5, 5)), c=2.0)
    with pytest.raises(DegenerateInput):
        high_criticism_test(np.zeros((3, 3)))
    with pytest.raises(OutOfRange):
        high_criticism_statistic(np.zeros((5, 5)), t0=0.0)


def test_hc_calibrated_type_one():
    # calibration and evaluation samples each contribute binomial-scale error
    det = HigherCriticismDetector()
    q = calibrate_threshold(det, 50, 50, samples=2000, alpha=0.05, seed=3)
    cal = det.set_params(threshold=q)
    rej = [cal.test(generate_null(50, 50, seed=100000 + i)).reject for i in range(2000)]
    sd = math.sqrt(2 * 0.05 * 0.95 / 2000)
    assert np.mean(rej) <= 0.05 + 4 * sd


def test_hc_detects_sparse_strong_signal():
    Y = gaussian(8, (50, 50))
    Y[:5, :5] += 4.0
    assert high_criticism_test(Y).reject


# -------------------------------------------------------------- monotonicity


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 2.0))
def test_statistics_monotone_in_planted_signal(seed, a):
    Y = gaussian(seed, (7, 7))
    shape = ProblemShape(7, 7, 2, 2)
    spec = SignalSpec(SubmatrixSupport((1, 4), (0, 6)), a)
    Z = plant_signal(Y, spec)
    assert linear_statistic(Z) >= linear_statistic(Y)
    assert (scan_test(Z, shape, exact=True).statistic
            >= scan_test(Y, shape, exact=True).statistic - 1e-12)
    assert (rectangle_scan_test(Z, shape, 0.5).statistic
            >= rectangle_scan_test(Y, shape, 0.5).statistic - 1e-12)
