"""scikit-learn style wrappers around the detectors.

A detector is fitted on one observation matrix: ``fit(Y)`` runs the test and
stores ``report_``, ``statistic_``, ``threshold_``, ``reject_`` and, when a
support is located, the bicluster indicators ``rows_`` / ``columns_``.
``predict`` and ``decision_function`` accept one matrix or a stack of
matrices (3-D array), treating each matrix as one sample.

Estimators are cloneable, so a calibrated copy is just
``clone(det).set_params(threshold=q)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, BiclusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import detectors as _det
from . import extensions as _ext
from .combinatorics import DEFAULT_DELTA
from .core import ProblemShape, check_matrix
from .search import DEFAULT_BUDGET, SearchConfig


class MatrixDetector(BiclusterMixin, BaseEstimator):
    """Base class; subclasses implement ``_run(Y) -> TestReport``."""

    # report component whose statistic an empirical threshold replaces
    calibrated_component = None

    def _run(self, Y):
        raise NotImplementedError

    def _shape(self, Y):
        return ProblemShape(Y.shape[0], Y.shape[1], self.n, self.m)

    def _search(self):
        return SearchConfig(self.restarts, self.max_iterations, self.seed)

    def test(self, Y):
        """Run the detector on one matrix and return its :class:`TestReport`."""
        return self._run(check_matrix(Y))

    def fit(self, Y, y=None):
        rep = self.test(Y)
        self.report_ = rep
        self.statistic_ = rep.statistic
        self.threshold_ = rep.threshold
        self.reject_ = rep.reject
        if rep.located_support is not None:
            N, M = np.shape(Y)
            self.rows_ = np.zeros((1, N), dtype=bool)
            self.rows_[0, list(rep.located_support.rows)] = True
            self.columns_ = np.zeros((1, M), dtype=bool)
            self.columns_[0, list(rep.located_support.cols)] = True
        return self

    def calibration_statistic(self, Y) -> float:
        """Statistic whose null quantile becomes ``threshold`` when calibrating."""
        rep = self.test(Y)
        if self.calibrated_component is None:
            return rep.statistic
        return rep.details[self.calibrated_component].statistic

    def _each(self, Y, fn):
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim == 3:
            return np.array([fn(self.test(y)) for y in Y])
        return fn(self.test(Y))

    def decision_function(self, Y):
        """``statistic - threshold`` (positive means reject)."""
        return self._each(Y, lambda r: r.statistic - r.threshold)

    def predict(self, Y):
        """1 if the null is rejected, else 0."""
        return self._each(Y, lambda r: int(r.reject))

    def get_submatrix_support(self):
        check_is_fitted(self, "report_")
        return self.report_.located_support


class LinearDetector(MatrixDetector):
    def __init__(self, H=_det.DEFAULT_H):
        self.H = H

    def _run(self, Y):
        return _det.linear_test(Y, self.H)

    def set_params(self, **params):
        # the linear test's only threshold is H
        if "threshold" in params:
            params["H"] = params.pop("threshold")
        return super().set_params(**params)


class ScanDetector(MatrixDetector):
    """Scan test; ``threshold=None`` uses ``sqrt((2+delta) log G_nm)``."""

    def __init__(self, n=1, m=1, threshold=None, delta=0.0, restarts=1000,
                 max_iterations=1000, seed=0, exact=False, budget=DEFAULT_BUDGET):
        self.n = n
        self.m = m
        self.threshold = threshold
        self.delta = delta
        self.restarts = restarts
        self.max_iterations = max_iterations
        self.seed = seed
        self.exact = exact
        self.budget = budget

    def _threshold(self, shape):
        if self.threshold is not None:
            return self.threshold
        return _det.scan_threshold(shape, self.delta)

    def _run(self, Y):
        shape = self._shape(Y)
        return _det.scan_test(Y, shape, self._threshold(shape), self._search(),
                              self.exact, self.budget)


class CombinedDetector(ScanDetector):
    """Linear test at ``H`` or scan test at ``threshold``."""

    calibrated_component = "scan"

    def __init__(self, n=1, m=1, H=_det.DEFAULT_H, threshold=None, delta=0.0, restarts=1000,
                 max_iterations=1000, seed=0, exact=False, budget=DEFAULT_BUDGET):
        super().__init__(n, m, threshold, delta, restarts, max_iterations, seed, exact, budget)
        self.H = H

    def _run(self, Y):
        shape = self._shape(Y)
        return _det.combined_test(Y, shape, self.H, self._threshold(shape), self._search(),
                                  self.exact, self.budget)


class StudentizedDetector(CombinedDetector):
    """Combined test on ``Y / sigma_hat`` with an inflated scan threshold."""

    def __init__(self, n=1, m=1, H=_det.DEFAULT_H, threshold=None, delta=DEFAULT_DELTA,
                 restarts=1000, max_iterations=1000, seed=0, exact=False, budget=DEFAULT_BUDGET):
        super().__init__(n, m, H, threshold, delta, restarts, max_iterations, seed, exact, budget)

    def _run(self, Y):
        shape = self._shape(Y)
        rep = _ext.studentized_combined_test(Y, shape, self.H, self.delta, self._search(),
                                             self.exact, self.budget)
        if self.threshold is None:
            return rep
        return _retarget(rep, self.threshold, "studentized")


class ExpFamilyDetector(CombinedDetector):
    """Combined test after standardising exponential-family data."""

    def __init__(self, law="poisson", theta0=1.0, n=1, m=1, H=_det.DEFAULT_H, threshold=None,
                 delta=DEFAULT_DELTA, restarts=1000, max_iterations=1000, seed=0, exact=False,
                 budget=DEFAULT_BUDGET):
        super().__init__(n, m, H, threshold, delta, restarts, max_iterations, seed, exact, budget)
        self.law = law
        self.theta0 = theta0

    def _run(self, Y):
        shape = self._shape(Y)
        law = _ext.LawDescriptor(self.law, self.theta0)
        rep = _ext.expfam_combined_test(Y, law, shape, self.H, self.delta, self._search(),
                                        self.exact, self.budget)
        if self.threshold is None:
            return rep
        return _retarget(rep, self.threshold, "expfam")


class TwoSidedDetector(CombinedDetector):
    """Chi-square type test against ``|s_ij| >= a`` on the support."""

    def __init__(self, n=1, m=1, H=_det.DEFAULT_H, threshold=None, delta=DEFAULT_DELTA,
                 restarts=1000, max_iterations=1000, seed=0, exact=False, budget=DEFAULT_BUDGET):
        super().__init__(n, m, H, threshold, delta, restarts, max_iterations, seed, exact, budget)

    def _run(self, Y):
        shape = self._shape(Y)
        rep = _ext.two_sided_test(Y, shape, _ext.TwoSidedConfig(self.H, self.delta),
                                  self._search(), self.exact, self.budget)
        if self.threshold is None:
            return rep
        return _retarget(rep, self.threshold, "two_sided")


def _retarget(rep, threshold, name):
    scan = rep.details["scan"]
    scan = _det.TestReport(scan.statistic, threshold, scan.detector, scan.located_support,
                           dict(scan.details, threshold_source="calibrated"))
    out = _det._either(name, rep.details["linear"], scan)
    out.details.update({k: v for k, v in rep.details.items() if k not in ("linear", "scan")})
    return out


class AdaptiveScanDetector(MatrixDetector):
    """Scan over several sizes; ``sizes=None`` uses the dyadic grid."""

    def __init__(self, sizes=None, threshold=1.0, restarts=1000, max_iterations=1000, seed=0,
                 exact=False, budget=DEFAULT_BUDGET):
        self.sizes = sizes
        self.threshold = threshold
        self.restarts = restarts
        self.max_iterations = max_iterations
        self.seed = seed
        self.exact = exact
        self.budget = budget

    def _run(self, Y):
        N, M = Y.shape
        grid = _det.dyadic_grid(N, M) if self.sizes is None else _det.AdaptiveGrid(N, M, tuple(self.sizes))
        rep = _det.adaptive_scan_test(Y, grid, self._search(), self.exact, self.budget)
        if self.threshold == 1.0:
            return rep
        return _det.TestReport(rep.statistic, self.threshold, rep.detector, rep.located_support,
                               rep.details)


class RectangleScanDetector(MatrixDetector):
    def __init__(self, n=1, m=1, eta=0.5, threshold=None):
        self.n = n
        self.m = m
        self.eta = eta
        self.threshold = threshold

    def _run(self, Y):
        rep = _det.rectangle_scan_test(Y, self._shape(Y), self.eta)
        if self.threshold is None:
            return rep
        return _det.TestReport(rep.statistic, self.threshold, rep.detector, rep.located_support,
                               rep.details)


class HigherCriticismDetector(MatrixDetector):
    def __init__(self, t0=_det.DEFAULT_T0, c=_det.DEFAULT_HC_C, threshold=None):
        self.t0 = t0
        self.c = c
        self.threshold = threshold

    def _run(self, Y):
        rep = _det.high_criticism_test(Y, self.t0, self.c)
        if self.threshold is None:
            return rep
        return _det.TestReport(rep.statistic, self.threshold, rep.detector, None, rep.details)


DETECTORS = {
    "linear": LinearDetector,
    "scan": ScanDetector,
    "combined": CombinedDetector,
    "adaptive": AdaptiveScanDetector,
    "rectangle": RectangleScanDetector,
    "hc": HigherCriticismDetector,
    "studentized": StudentizedDetector,
    "expfam": ExpFamilyDetector,
    "two-sided": TwoSidedDetector,
}


def make_detector(name, **params):
    """Build a detector by name, ignoring parameters it does not take."""
    try:
        cls = DETECTORS[name]
    except KeyError:
        raise ValueError(f"unknown detector {name!r}; choose from {sorted(DETECTORS)}") from None
    accepted = cls().get_params()
    return cls(**{k: v for k, v in params.items() if k in accepted and v is not None})


# --------------------------------------------------------------- transformers


class ExpFamilyStandardizer(TransformerMixin, BaseEstimator):
    """Map raw draws to ``(T(x) - m0) / sigma0`` for a tabulated law."""

    def __init__(self, law="poisson", theta0=1.0):
        self.law = law
        self.theta0 = theta0

    def fit(self, X, y=None):
        self.law_ = _ext.LawDescriptor(self.law, self.theta0)
        self.law_.check_support(check_matrix(X))
        return self

    def transform(self, X):
        check_is_fitted(self, "law_")
        return _ext.standardize_observations(X, self.law_)

    def inverse_transform(self, Y):
        check_is_fitted(self, "law_")
        return _ext.unstandardize_observations(Y, self.law_)


class Studentizer(TransformerMixin, BaseEstimator):
    """Divide by the root mean square of the fitted matrix."""

    def fit(self, X, y=None):
        self.sigma_hat_ = float(np.sqrt(_ext.estimate_variance(X)))
        return self

    def transform(self, X):
        check_is_fitted(self, "sigma_hat_")
        return check_matrix(X) / self.sigma_hat_

    def inverse_transform(self, Y):
        check_is_fitted(self, "sigma_hat_")
        return np.asarray(Y, dtype=np.float64) * self.sigma_hat_
