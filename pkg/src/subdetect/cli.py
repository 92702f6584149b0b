"""Command-line front end.

Exit codes: 0 success / null not rejected, 3 null rejected by ``detect``,
1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import rng as _rng
from .combinatorics import (
    DEFAULT_DELTA,
    detection_boundary,
    log_submatrix_count,
    no_structure_boundary,
    rectangle_boundary,
    scan_threshold,
    adaptive_threshold,
)
from .core import (
    ONE_SIDED,
    TWO_SIDED,
    ProblemShape,
    SignalSpec,
    SubmatrixSupport,
    read_matrix_csv,
    write_matrix_csv,
    write_support,
)
from .detectors import DEFAULT_H, DEFAULT_HC_C, DEFAULT_T0
from .estimators import DETECTORS, make_detector
from .exceptions import DetectionError
from .extensions import LawDescriptor, fisher_boundary
from .search import SearchConfig, alternating_search, brute_force_max
from .simulation import (
    ExperimentPlan,
    GaussianNoise,
    calibrate_threshold,
    estimate_power,
    generate_null,
    plant_signal,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REJECT = 0, 1, 2, 3
RANDOMISED = {"scan", "combined", "adaptive", "studentized", "expfam", "two-sided"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(spec: str):
    """``start:stop:steps`` (inclusive, linear) or a single number."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
            if steps < 1:
                raise ValueError
            return list(np.linspace(start, stop, steps))
    except ValueError:
        pass
    raise UsageError(f"--a: expected a number or start:stop:steps, got {spec!r}")


def _add_shape(p, sub=True):
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    if sub:
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--m", type=int, required=True)


def _add_noise(p):
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--law", choices=["poisson", "bernoulli", "exponential", "gaussian-variance"])
    p.add_argument("--theta0", type=float)


def _add_detector(p, with_shape=True):
    p.add_argument("--detector", choices=sorted(DETECTORS), default="combined")
    if with_shape:
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
    p.add_argument("--H", type=float, default=DEFAULT_H)
    p.add_argument("--threshold", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--restarts", "--K", dest="restarts", type=int, default=1000)
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--t0", type=float, default=DEFAULT_T0)
    p.add_argument("--c", type=float, default=DEFAULT_HC_C)
    p.add_argument("--sizes", help="adaptive grid as n1xm1,n2xm2,...")
    p.add_argument("--law", choices=["poisson", "bernoulli", "exponential", "gaussian-variance"])
    p.add_argument("--theta0", type=float)


def build_parser():
    p = _Parser(prog="subdetect", description="Detect an elevated-mean submatrix in a noisy matrix.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a null (optionally planted) matrix as CSV")
    _add_shape(g, sub=False)
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--a", type=float, help="plant this amplitude on the upper-left n x m block")
    g.add_argument("--two-sided", action="store_true")
    _add_noise(g)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="-")
    g.add_argument("--support-out")

    c = sub.add_parser("calibrate", help="empirical null quantile of a detector statistic")
    _add_shape(c, sub=False)
    _add_detector(c)
    c.add_argument("--sigma", type=float, default=1.0)
    c.add_argument("--samples", type=int, default=100)
    c.add_argument("--alpha", type=float, default=0.01)
    c.add_argument("--seed", type=int)
    c.add_argument("--workers", type=int, default=1)

    d = sub.add_parser("detect", help="run a detector on a matrix CSV")
    d.add_argument("--input", required=True)
    _add_detector(d)
    d.add_argument("--seed", type=int)
    d.add_argument("--header", action="store_true", help="print a header line first")

    w = sub.add_parser("power", help="empirical power curve as CSV")
    _add_shape(w, sub=False)
    _add_detector(w)
    w.add_argument("--sigma", type=float, default=1.0)
    w.add_argument("--a", required=True, help="amplitude or start:stop:steps")
    w.add_argument("--relative", action="store_true", help="amplitudes are multiples of a*")
    w.add_argument("--two-sided", action="store_true")
    w.add_argument("--random-placement", action="store_true")
    w.add_argument("--reps", "--L", dest="reps", type=int, default=100)
    w.add_argument("--calibration-samples", type=int, default=100)
    w.add_argument("--alpha", type=float, default=0.01)
    w.add_argument("--seed", type=int)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--out", default="-")

    b = sub.add_parser("boundary", help="closed-form detection boundaries and thresholds")
    _add_shape(b)
    b.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    b.add_argument("--law", choices=["poisson", "bernoulli", "exponential", "gaussian-variance"])
    b.add_argument("--theta0", type=float)

    o = sub.add_parser("oracle-compare", help="alternating search vs exhaustive maximum")
    _add_shape(o)
    o.add_argument("--matrices", type=int, default=100)
    o.add_argument("--restarts", "--K", dest="restarts", type=int, default=200)
    o.add_argument("--seed", type=int)
    return p


# ----------------------------------------------------------------- helpers


def _positive(args, *names):
    for name in names:
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive, got {v}")


def _need_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for any randomised operation")
    if not 0 <= args.seed < 2**64:
        raise UsageError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")


def _law(args):
    if args.law is None:
        return None
    if args.theta0 is None:
        raise UsageError("--law needs --theta0")
    try:
        return LawDescriptor(args.law, args.theta0)
    except DetectionError as exc:
        raise UsageError(f"--theta0: {exc}") from None


def _shape(args, N=None, M=None):
    try:
        return ProblemShape(N or args.N, M or args.M, args.n, args.m)
    except DetectionError as exc:
        raise UsageError(f"--N/--M/--n/--m: {exc}") from None


def _detector(args, N, M, seed):
    name = args.detector
    if name in ("scan", "combined", "studentized", "expfam", "two-sided", "rectangle"):
        if args.n is None or args.m is None:
            raise UsageError(f"--detector {name} needs --n and --m")
        _shape(args, N, M)
    if name == "expfam" and args.law is None:
        raise UsageError("--detector expfam needs --law and --theta0")
    _positive(args, "restarts", "max_iterations", "t0")
    sizes = None
    if args.sizes:
        try:
            sizes = [tuple(int(v) for v in tok.lower().split("x")) for tok in args.sizes.split(",")]
        except ValueError:
            raise UsageError(f"--sizes: cannot parse {args.sizes!r}") from None
    law = _law(args)
    params = dict(
        n=args.n, m=args.m, H=args.H, threshold=args.threshold, delta=args.delta,
        restarts=args.restarts, max_iterations=args.max_iterations, seed=seed, exact=args.exact,
        eta=args.eta, t0=args.t0, c=args.c, sizes=sizes,
        law=None if law is None else law.law, theta0=None if law is None else law.theta0,
    )
    try:
        return make_detector(name, **params)
    except DetectionError as exc:
        raise UsageError(str(exc)) from None


def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w", newline="")


# ---------------------------------------------------------------- commands


def cmd_generate(args):
    _need_seed(args)
    _positive(args, "sigma")
    law = _law(args)
    noise = law if law is not None else GaussianNoise(args.sigma)
    Y = generate_null(args.N, args.M, noise, _rng.child_seed(args.seed, 0))
    if args.a is not None:
        if args.n is None or args.m is None:
            raise UsageError("--a needs --n and --m")
        _shape(args)
        spec = SignalSpec(SubmatrixSupport.upper_left(args.n, args.m), args.a,
                          TWO_SIDED if args.two_sided else ONE_SIDED)
        Y = plant_signal(Y, spec, noise, _rng.child_seed(args.seed, 1))
        if args.support_out:
            write_support(args.support_out, spec.support)
    if args.out == "-":
        w = csv.writer(sys.stdout, lineterminator="\n")
        for row in Y:
            w.writerow([repr(float(v)) for v in row])
    else:
        write_matrix_csv(args.out, Y)
    return EXIT_OK


def cmd_calibrate(args):
    _need_seed(args)
    det = _detector(args, args.N, args.M, 0)
    law = _law(args)
    noise = law if law is not None else GaussianNoise(args.sigma)
    thr = calibrate_threshold(det, args.N, args.M, noise, args.samples, args.alpha, args.seed,
                              args.workers)
    print(repr(thr))
    return EXIT_OK


def cmd_detect(args):
    Y = read_matrix_csv(args.input)
    N, M = Y.shape
    if args.detector in RANDOMISED and not args.exact:
        _need_seed(args)
    det = _detector(args, N, M, args.seed or 0)
    rep = det.test(Y)
    row = rep.as_row()
    w = csv.DictWriter(sys.stdout, fieldnames=list(row), lineterminator="\n")
    if args.header:
        w.writeheader()
    w.writerow(row)
    return EXIT_REJECT if rep.reject else EXIT_OK


def cmd_power(args):
    _need_seed(args)
    shape = _shape(args) if args.n is not None else None
    if shape is None:
        raise UsageError("power needs --n and --m")
    amps = _grid(args.a)
    law = _law(args)
    if args.relative:
        try:
            if law is not None:
                base = fisher_boundary(law, shape)
            else:
                base = args.sigma * detection_boundary(shape).a_star
        except DetectionError as exc:
            raise UsageError(f"--relative: {exc}") from None
        amps = [a * base for a in amps]
    noise = law if law is not None else GaussianNoise(args.sigma)
    det = _detector(args, args.N, args.M, 0)
    try:
        plan = ExperimentPlan(shape, amps, det, args.reps, args.calibration_samples, args.alpha,
                              args.seed, noise, TWO_SIDED if args.two_sided else ONE_SIDED,
                              args.random_placement)
    except DetectionError as exc:
        raise UsageError(str(exc)) from None
    curve = estimate_power(plan, workers=args.workers)
    out = _open_out(args.out)
    try:
        curve.write_csv(out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_boundary(args):
    shape = _shape(args)
    rows = [("N", shape.N), ("M", shape.M), ("n", shape.n), ("m", shape.m)]
    b = detection_boundary(shape)
    rows += [("dense_term", b.dense_term), ("sparse_term", b.sparse_term),
             ("a_star", b.a_star), ("regime", b.regime),
             ("log_G", log_submatrix_count(shape)),
             ("T_nm", scan_threshold(shape)),
             ("T_nm_inflated", scan_threshold(shape, args.delta)),
             ("V_nm", adaptive_threshold(shape)),
             ("rectangle_boundary", rectangle_boundary(shape))]
    try:
        rows.append(("no_structure_boundary", no_structure_boundary(shape)))
    except DetectionError:
        rows.append(("no_structure_boundary", "dense"))
    law = _law(args)
    if law is not None:
        rows += [("sqrt_fisher", law.sqrt_fisher), ("d_star", fisher_boundary(law, shape))]
    w = csv.writer(sys.stdout, lineterminator="\n")
    for k, v in rows:
        w.writerow([k, repr(v) if isinstance(v, float) else v])
    return EXIT_OK


def cmd_oracle_compare(args):
    _need_seed(args)
    shape = _shape(args)
    _positive(args, "matrices", "restarts")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["matrix", "heuristic", "exact", "match"])
    matches = 0
    for i in range(args.matrices):
        Y = generate_null(shape.N, shape.M, GaussianNoise(), _rng.child_seed(args.seed, 0, i))
        h = alternating_search(Y, shape, SearchConfig(args.restarts, seed=_rng.child_seed(args.seed, 1, i)))
        e = brute_force_max(Y, shape)
        ok = h.score == e.score
        matches += ok
        w.writerow([i + 1, repr(h.score), repr(e.score), int(ok)])
    print(f"matched {matches}/{args.matrices}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "power": cmd_power,
    "boundary": cmd_boundary,
    "oracle-compare": cmd_oracle_compare,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on usage errors and --help; report the code instead
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"subdetect {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DetectionError, OSError) as exc:
        print(f"subdetect {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
