"""Monte Carlo harness: null generation, signal planting, calibration, power.

Every random quantity is drawn from a stream addressed by the master seed
and its position in the experiment (see :mod:`subdetect.rng`), so results
do not depend on the number of workers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binomtest
from sklearn.base import clone

from . import rng as _rng
from .combinatorics import BoundaryReport, detection_boundary, log_submatrix_count
from .core import ONE_SIDED, ProblemShape, SignalSpec, SubmatrixSupport, check_matrix
from .exceptions import DegenerateShape, OutOfRange
from .extensions import LawDescriptor, fisher_boundary
from .search import DEFAULT_BUDGET, enumerate_block_sums

# stream tags under the master seed
_NULL, _SEARCH, _PLANT, _CAL = 1, 2, 3, 4


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise OutOfRange(f"sigma must be positive, got {self.sigma}")


Noise = Union[GaussianNoise, LawDescriptor]


def generate_null(N: int, M: int, noise: Noise = GaussianNoise(), seed: int = 0) -> np.ndarray:
    """I.i.d. ``N x M`` draws from the null law."""
    gen = _rng.stream(seed)
    if isinstance(noise, LawDescriptor):
        return noise.sample(gen, noise.theta0, (N, M))
    return noise.sigma * gen.standard_normal((N, M))


def plant_signal(Y, spec: SignalSpec, noise: Noise = GaussianNoise(), seed: Optional[int] = None):
    """Return a copy of ``Y`` carrying the signal.

    Gaussian noise: ``s_ij`` is added on the support. Exponential-family
    noise: support cells are redrawn at parameter ``theta0 + s_ij``.
    ``seed`` drives random signs and redraws.
    """
    Y = check_matrix(Y).copy()
    N, M = Y.shape
    spec.support.check_bounds(N, M)
    gen = None if seed is None else _rng.stream(seed)
    block = spec.block(gen)
    idx = np.ix_(spec.support.rows, spec.support.cols)
    if isinstance(noise, LawDescriptor):
        if gen is None:
            raise OutOfRange("redrawing exponential-family cells needs a seed")
        theta = noise.theta0 + block
        if not all(noise.in_domain(t) for t in np.unique(theta)):
            raise OutOfRange(f"shifted parameter leaves the {noise.law} domain")
        Y[idx] = noise._spec.sample(gen, theta, block.shape)
    else:
        Y[idx] += block
    return Y


def _with_seed(detector, seed):
    params = detector.get_params()
    if "seed" in params:
        return clone(detector).set_params(seed=seed)
    return detector


def _null_statistic(args):
    detector, N, M, noise, seed, i = args
    Y = generate_null(N, M, noise, _rng.child_seed(seed, _CAL, _NULL, i))
    det = _with_seed(detector, _rng.child_seed(seed, _CAL, _SEARCH, i))
    return det.calibration_statistic(Y)


def _map(fn, tasks, workers):
    if workers is None or workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def conservative_quantile(values, alpha: float) -> float:
    """Order statistic of rank ``ceil((1 - alpha) * len(values))`` (at least 1)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    rank = max(1, math.ceil((1.0 - alpha) * len(v) - 1e-9))
    return float(v[rank - 1])


def null_statistics(detector, N, M, noise: Noise = GaussianNoise(), samples: int = 100,
                    seed: int = 0, workers: int = 1) -> np.ndarray:
    tasks = [(detector, N, M, noise, seed, i) for i in range(samples)]
    return np.asarray(_map(_null_statistic, tasks, workers))


def calibrate_threshold(detector, N: int, M: int, noise: Noise = GaussianNoise(),
                        samples: int = 100, alpha: float = 0.01, seed: int = 0,
                        workers: int = 1) -> float:
    """Empirical ``(1 - alpha)`` null quantile of ``detector.calibration_statistic``."""
    if samples < 20:
        raise OutOfRange(f"calibration needs at least 20 samples, got {samples}")
    if not 0 < alpha <= 1:
        raise OutOfRange(f"alpha must lie in (0, 1], got {alpha}")
    return conservative_quantile(null_statistics(detector, N, M, noise, samples, seed, workers),
                                 alpha)


# ------------------------------------------------------------------- power


@dataclass(frozen=True)
class ExperimentPlan:
    shape: ProblemShape
    amplitudes: Sequence[float]
    detector: object
    replications: int = 100
    calibration_samples: int = 100
    alpha: float = 0.01
    seed: int = 0
    noise: Noise = GaussianNoise()
    sidedness: str = ONE_SIDED
    random_placement: bool = False

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        if not amps:
            raise OutOfRange("amplitude grid is empty")
        if any(b <= a for a, b in zip(amps, amps[1:])) or amps[0] < 0:
            raise OutOfRange("amplitudes must be nonnegative and strictly increasing")
        if self.replications < 1:
            raise OutOfRange("need at least one replication")
        if self.calibration_samples and self.calibration_samples < 20:
            raise OutOfRange("calibration_samples must be 0 or at least 20")
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True)
class PowerPoint:
    a: float
    rejections: int
    reps: int
    power: float
    ci_lo: float
    ci_hi: float
    mean_statistic: float
    # exponential-family runs: shift on the standardised natural scale and
    # the corresponding standardised mean shift
    natural_shift: Optional[float] = None
    mean_shift: Optional[float] = None

    @property
    def half_width(self):
        return 0.5 * (self.ci_hi - self.ci_lo)


@dataclass
class PowerCurve:
    detector: str
    shape: ProblemShape
    seed: int
    points: list
    threshold: Optional[float] = None
    threshold_source: str = "analytic"
    boundary: Optional[BoundaryReport] = None
    param_boundary: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def a_star(self):
        if self.param_boundary is not None:
            return self.param_boundary
        return None if self.boundary is None else self.boundary.a_star

    CSV_COLUMNS = ("detector", "N", "M", "n", "m", "a", "a_star", "power", "ci_lo", "ci_hi",
                   "reps", "seed")

    def rows(self):
        s = self.shape
        for p in self.points:
            yield {
                "detector": self.detector, "N": s.N, "M": s.M, "n": s.n, "m": s.m,
                "a": repr(p.a), "a_star": "" if self.a_star is None else repr(self.a_star),
                "power": repr(p.power), "ci_lo": repr(p.ci_lo), "ci_hi": repr(p.ci_hi),
                "reps": p.reps, "seed": self.seed,
            }

    def write_csv(self, fh_or_path):
        if hasattr(fh_or_path, "write"):
            return self._write(fh_or_path)
        with open(fh_or_path, "w", newline="") as fh:
            self._write(fh)

    def _write(self, fh):
        w = csv.DictWriter(fh, fieldnames=self.CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow(row)


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _placement(shape, seed, random_placement):
    if not random_placement:
        return SubmatrixSupport.upper_left(shape.n, shape.m)
    gen = _rng.stream(seed)
    return SubmatrixSupport(np.sort(gen.choice(shape.N, shape.n, replace=False)),
                            np.sort(gen.choice(shape.M, shape.m, replace=False)))


def _replicate(args):
    plan, detector, i, r = args
    s = plan.shape
    base = _rng.child_seed(plan.seed, i, r)
    Y = generate_null(s.N, s.M, plan.noise, _rng.child_seed(base, _NULL))
    a = plan.amplitudes[i]
    if a > 0:
        support = _placement(s, _rng.child_seed(base, _PLANT, 0), plan.random_placement)
        spec = SignalSpec(support, a, plan.sidedness)
        Y = plant_signal(Y, spec, plan.noise, _rng.child_seed(base, _PLANT, 1))
    rep = _with_seed(detector, _rng.child_seed(base, _SEARCH)).test(Y)
    return rep.reject, rep.statistic


def _shifts(law: LawDescriptor, d):
    theta = law.theta0 + d
    ds = law.sigma0 * (float(law.eta(theta)) - float(law.eta(law.theta0)))
    a_prime = float(law.log_partition(law.s0 + ds + 1e-6) - law.log_partition(law.s0 + ds - 1e-6)) / 2e-6
    return ds, a_prime


def estimate_power(plan: ExperimentPlan, workers: int = 1) -> PowerCurve:
    """Empirical power of ``plan.detector`` at each amplitude.

    With ``calibration_samples > 0`` the detector's threshold is first set
    to the conservative empirical null quantile at ``plan.alpha``.
    """
    detector = plan.detector
    threshold, source = None, "analytic"
    if plan.calibration_samples:
        threshold = calibrate_threshold(detector, plan.shape.N, plan.shape.M, plan.noise,
                                        plan.calibration_samples, plan.alpha, plan.seed, workers)
        detector = clone(detector).set_params(threshold=threshold)
        source = "calibrated"
    tasks = [(plan, detector, i, r) for i in range(len(plan.amplitudes))
             for r in range(plan.replications)]
    results = _map(_replicate, tasks, workers)
    L = plan.replications
    points = []
    for i, a in enumerate(plan.amplitudes):
        chunk = results[i * L:(i + 1) * L]
        k = sum(int(rej) for rej, _ in chunk)
        lo, hi = wilson_interval(k, L)
        nat = mean = None
        if isinstance(plan.noise, LawDescriptor) and a > 0:
            nat, mean = _shifts(plan.noise, a)
        points.append(PowerPoint(a, k, L, k / L, lo, hi,
                                 float(np.mean([st for _, st in chunk])), nat, mean))
    try:
        boundary = detection_boundary(plan.shape)
    except DegenerateShape:
        boundary = None
    param_boundary = None
    if isinstance(plan.noise, LawDescriptor) and boundary is not None:
        param_boundary = fisher_boundary(plan.noise, plan.shape)
    elif isinstance(plan.noise, GaussianNoise) and boundary is not None and plan.noise.sigma != 1.0:
        param_boundary = plan.noise.sigma * boundary.a_star
    return PowerCurve(type(detector).__name__, plan.shape, plan.seed, points, threshold, source,
                      boundary, param_boundary)


# -------------------------------------------------------- likelihood ratio


def log_likelihood_ratio(Y, shape: ProblemShape, a: float, budget: int = DEFAULT_BUDGET) -> float:
    """``log L_pi`` for the uniform prior over supports with constant signal ``a``."""
    if a == 0:
        return 0.0
    b = a * math.sqrt(shape.n * shape.m)
    # b * Y_C = a * (raw block sum)
    parts = [logsumexp(a * sums) for _, _, sums in enumerate_block_sums(Y, shape, budget)]
    return float(logsumexp(parts) - 0.5 * b * b - log_submatrix_count(shape))


def exact_likelihood_ratio(Y, shape: ProblemShape, a: float, budget: int = DEFAULT_BUDGET) -> float:
    """``L_pi(Y) = G^-1 sum_C exp(b Y_C - b^2/2)`` with ``b = a sqrt(nm)``."""
    return math.exp(log_likelihood_ratio(Y, shape, a, budget))


def indistinguishability_probe(shape: ProblemShape, a: float, reps: int = 1000, seed: int = 0,
                               eps: float = 0.1, budget: int = DEFAULT_BUDGET) -> dict:
    """Null distribution summary of ``L_pi``: mean, variance, share within ``1 +- eps``."""
    vals = np.array([
        exact_likelihood_ratio(generate_null(shape.N, shape.M, GaussianNoise(), _rng.child_seed(seed, i)),
                               shape, a, budget)
        for i in range(reps)
    ])
    return {
        "a": a,
        "reps": reps,
        "mean": float(vals.mean()),
        "variance": float(vals.var(ddof=1)) if reps > 1 else 0.0,
        "within_eps": float(np.mean(np.abs(vals - 1.0) <= eps)),
        "eps": eps,
    }
