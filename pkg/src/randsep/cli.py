"""Command-line experiment harness. Every command writes CSV.

    randsep bound --r 2 --delta 0.1 --theta all:pi/2
    randsep phase --d 16,64,256 --r 4 --trials 25
    randsep sweep --K 2 --r 16 --D 32,1024 --activations relu,quadratic
    randsep certify --d 16 --r 2 --D 2000 --K 3
    randsep probe --d 16 --r 4 --D 128 --activation relu
    randsep verify-lemmas --which all --samples 100000
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields

import numpy as np

from randsep import verify
from randsep.certify import (
    certify_binary,
    certify_multiclass,
    width_bound_binary,
    width_bound_multiclass,
)
from randsep.features import Activation, sample_feature_map
from randsep.probe import (
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    accuracy,
    generate_uos_dataset,
    train_probe,
)
from randsep.rng import make_rng
from randsep.subspace import UnionOfSubspaces, sample_stiefel

LEMMAS = ("spectrum", "order_stats", "acceptance", "isotropy", "sandwich", "bernstein",
          "failure_bound")

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_ANGLE = re.compile(rf"^(?:(?P<coef>{_NUM})\s*\*?\s*)?(?P<pi>pi)?(?:\s*/\s*(?P<den>{_NUM}))?$")


def parse_angle(text: str) -> float:
    """``"0.5"``, ``"pi"``, ``"pi/6"``, ``"2pi/3"``, ``"2*pi/3"`` -> radians."""
    m = _ANGLE.match(text.strip().lower())
    if not m or not (m.group("coef") or m.group("pi")):
        raise ValueError(f"cannot parse angle {text!r}")
    value = float(m.group("coef") or 1.0) * (math.pi if m.group("pi") else 1.0)
    if m.group("den"):
        den = float(m.group("den"))
        if den == 0:
            raise ValueError(f"zero denominator in angle {text!r}")
        value /= den
    return value


def parse_angles(text: str, count: int) -> list[float]:
    """Comma-separated angles, or ``all:<angle>`` repeated ``count`` times."""
    text = text.strip()
    if text.startswith("all:"):
        return [parse_angle(text[4:])] * count
    return [parse_angle(t) for t in text.split(",")]


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _probability(text: str) -> float:
    value = _positive_float(text)
    if not value < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text!r}")
    return value


def _activation_list(text: str) -> list[Activation]:
    try:
        return [Activation.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _activation(text: str) -> Activation:
    acts = _activation_list(text)
    if len(acts) != 1:
        raise argparse.ArgumentTypeError(f"expected one activation, got {text!r}")
    return acts[0]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _write_csv(args, header, rows):
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _map_cells(fn, tasks, workers: int):
    """Evaluate cells, possibly in parallel; results keep the order of ``tasks``."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


@dataclass(frozen=True)
class SweepRow:
    d: int
    r: int
    D: int
    K: int
    activation: str
    trials: int
    successes: int
    fraction: float
    mean_train_acc: float | None
    mean_test_acc: float | None
    seed: int


SWEEP_HEADER = [f.name for f in fields(SweepRow)]


# ---------------------------------------------------------------- bound

def cmd_bound(args, parser):
    count = (args.K - 1) * args.r
    try:
        theta = parse_angles(args.theta, count)
        if args.K == 2:
            report = width_bound_binary(args.r, theta, args.delta)
        else:
            report = width_bound_multiclass(args.r, args.K, [theta] * args.K, args.delta)
    except ValueError as exc:
        parser.error(f"bound: {exc}")
    _write_csv(args, ["r", "K", "delta", "theta_min", "gamma1", "gamma2", "min_width"],
               [(report.r, report.K, report.delta, report.theta_min,
                 report.gamma1, report.gamma2, report.min_width)])


# ---------------------------------------------------------------- phase

def _phase_cell(task):
    cell_index, d, r, D, trials, seed = task
    successes = 0
    for t in range(trials):
        rng = make_rng(seed, cell_index, t)
        s1, s2 = sample_stiefel(d, r, rng), sample_stiefel(d, r, rng)
        fmap = sample_feature_map(D, d, "quadratic", 1.0, rng)
        successes += certify_binary(fmap, s1, s2).separable
    return SweepRow(d, r, D, 2, "quadratic", trials, successes, successes / trials,
                    None, None, seed)


def run_phase(d_list, r_list, D_list, trials, seed, workers=1) -> list[SweepRow]:
    tasks = []
    for d in d_list:
        for r in r_list:
            for D in D_list:
                tasks.append((len(tasks), d, r, D, trials, seed))
    return _map_cells(_phase_cell, tasks, workers)


def cmd_phase(args, parser):
    bad = [(d, r) for d in args.d for r in args.r if r > d]
    if bad:
        parser.error(f"phase: r must not exceed d, got (d, r) = {bad[0]}")
    rows = run_phase(args.d, args.r, args.D, args.trials, args.seed, args.workers)
    _write_csv(args, SWEEP_HEADER, map(astuple, rows))


# ---------------------------------------------------------------- sweep

def _sweep_trial(d, r, K, D, activation, n_per_class, weight_std, epochs, lr, rng, test_rng):
    union = UnionOfSubspaces([sample_stiefel(d, r, rng) for _ in range(K)])
    train = generate_uos_dataset(union, n_per_class, rng)
    test = generate_uos_dataset(union, n_per_class, test_rng)
    fmap = sample_feature_map(D, d, activation, weight_std, rng)
    ftrain, ftest = train.map_features(fmap), test.map_features(fmap)
    probe = train_probe(ftrain, epochs, lr)
    return accuracy(probe, ftrain), accuracy(probe, ftest)


def _sweep_cell(task):
    (cell_index, d, K, r, D, activation, n_per_class, trials, seed,
     weight_std, epochs, lr) = task
    train_acc, test_acc = [], []
    for t in range(trials):
        tr, te = _sweep_trial(d, r, K, D, activation, n_per_class, weight_std, epochs, lr,
                              make_rng(seed, cell_index, t), make_rng(seed, cell_index, t, 1))
        train_acc.append(tr)
        test_acc.append(te)
    successes = sum(a == 1.0 for a in train_acc)
    return SweepRow(d, r, D, K, str(activation), trials, successes, successes / trials,
                    float(np.mean(train_acc)), float(np.mean(test_acc)), seed)


def run_sweep(K_list, r_list, D_list, activations, *, d=128, n_per_class=5000, trials=10,
              seed=0, weight_std=0.1, epochs=DEFAULT_EPOCHS, lr=DEFAULT_LEARNING_RATE,
              workers=1) -> list[SweepRow]:
    """Linear-probe accuracy on random features of synthetic union-of-subspaces
    data. A trial counts as a success when training accuracy is perfect."""
    tasks = []
    for K in K_list:
        for r in r_list:
            for D in D_list:
                for act in activations:
                    tasks.append((len(tasks), d, K, r, D, Activation.parse(act), n_per_class,
                                  trials, seed, weight_std, epochs, lr))
    return _map_cells(_sweep_cell, tasks, workers)


def cmd_sweep(args, parser):
    if max(args.r) > args.d:
        parser.error(f"sweep: r must not exceed d={args.d}")
    if min(args.K) < 2:
        parser.error("sweep: K must be at least 2")
    rows = run_sweep(args.K, args.r, args.D, args.activations, d=args.d,
                     n_per_class=args.n_per_class, trials=args.trials, seed=args.seed,
                     weight_std=args.weight_std, epochs=args.epochs, lr=args.lr,
                     workers=args.workers)
    _write_csv(args, SWEEP_HEADER, map(astuple, rows))


# ---------------------------------------------------------------- certify

def cmd_certify(args, parser):
    if args.K < 2:
        parser.error("certify: K must be at least 2")
    if args.K > 2 and not 2 * (args.K - 1) * args.r < args.d:
        parser.error("certify: one-vs-all certificates need (K-1)*r < d/2")
    if args.r > args.d:
        parser.error("certify: r must not exceed d")
    rng = make_rng(args.seed)
    union = UnionOfSubspaces([sample_stiefel(args.d, args.r, rng) for _ in range(args.K)])
    fmap = sample_feature_map(args.D, args.d, "quadratic", 1.0, rng)
    if args.K == 2:
        certs = [certify_binary(fmap, union[0], union[1])]
    else:
        certs = certify_multiclass(fmap, union, rng)
    header = ["d", "r", "D", "K", "class", "theta_min", "lambda_min_q1", "lambda_max_q2",
              "separable", "seed"]
    _write_csv(args, header, [
        (args.d, args.r, args.D, args.K, k, c.theta_min, c.lambda_min_q1, c.lambda_max_q2,
         c.separable, args.seed)
        for k, c in enumerate(certs)])


# ---------------------------------------------------------------- probe

def run_probe(d, r, K, D, activation, n_per_class, epochs, lr, weight_std, seed):
    """Per-epoch (epoch, loss, train_acc, test_acc) rows for one probe training run."""
    rng = make_rng(seed, 0)
    union = UnionOfSubspaces([sample_stiefel(d, r, rng) for _ in range(K)])
    train = generate_uos_dataset(union, n_per_class, rng)
    test = generate_uos_dataset(union, n_per_class, make_rng(seed, 1))
    fmap = sample_feature_map(D, d, activation, weight_std, rng)
    ftrain, ftest = train.map_features(fmap), test.map_features(fmap)
    rows = []

    def record(epoch, probe, loss):
        rows.append((epoch, loss, accuracy(probe, ftrain), accuracy(probe, ftest)))

    train_probe(ftrain, epochs, lr, on_epoch=record)
    return rows


def cmd_probe(args, parser):
    if args.r > args.d:
        parser.error("probe: r must not exceed d")
    if args.K < 2:
        parser.error("probe: K must be at least 2")
    rows = run_probe(args.d, args.r, args.K, args.D, args.activation, args.n_per_class,
                     args.epochs, args.lr, args.weight_std, args.seed)
    _write_csv(args, ["epoch", "loss", "train_acc", "test_acc"], rows)


# ---------------------------------------------------------------- verify-lemmas

def run_lemmas(which, *, d, r, samples, m_list, p_max, pairs, delta, trials, seed):
    pair_rng = make_rng(seed, 0)
    s1, s2 = sample_stiefel(d, r, pair_rng), sample_stiefel(d, r, pair_rng)
    reports = []
    for i, name in enumerate(LEMMAS, start=1):
        if name not in which:
            continue
        rng = make_rng(seed, i)
        if name == "spectrum":
            reports.append(verify.verify_spectrum(d, r, pairs, rng))
        elif name == "order_stats":
            reports.extend(verify.verify_order_statistics(m, samples, rng) for m in m_list)
        elif name == "acceptance":
            reports.append(verify.verify_acceptance_rate(s1, s2, samples, rng))
        elif name == "isotropy":
            reports.append(verify.verify_isotropy(s1, s2, samples, rng))
        elif name == "sandwich":
            reports.append(verify.verify_sandwich(s1, s2, samples, rng))
        elif name == "bernstein":
            reports.append(verify.verify_bernstein_moments(s1, s2, p_max, samples, rng))
        elif name == "failure_bound":
            reports.append(verify.verify_failure_bound(d, r, delta, trials, rng))
    return reports


def cmd_verify_lemmas(args, parser):
    which = set(LEMMAS) if args.which.strip() == "all" else {
        w.strip() for w in args.which.split(",") if w.strip()}
    unknown = which - set(LEMMAS)
    if unknown:
        parser.error(f"verify-lemmas: unknown lemma(s) {sorted(unknown)}; choose from {LEMMAS}")
    if not 2 * args.r < args.d:
        parser.error("verify-lemmas: need r < d/2 so the subspaces intersect only at 0")
    if not 2 <= args.p_max <= 4:
        parser.error("verify-lemmas: --p-max must lie in [2, 4]")
    reports = run_lemmas(which, d=args.d, r=args.r, samples=args.samples, m_list=args.m,
                         p_max=args.p_max, pairs=args.pairs, delta=args.delta,
                         trials=args.trials, seed=args.seed)
    header = ["lemma", "statistic", "estimate", "std_error", "lower", "upper", "pass",
              "samples", "seed"]
    _write_csv(args, header, [
        (rep.name, c.statistic, c.estimate, c.std_error, c.lower, c.upper, c.passed,
         rep.samples, args.seed)
        for rep in reports for c in rep.checks])
    failed = [rep.name for rep in reports if not rep.passed]
    if failed:
        print(f"checks outside 3 standard errors: {', '.join(failed)}", file=sys.stderr)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_nonneg_int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default=None, help="output CSV path (default stdout)")

    parser = argparse.ArgumentParser(
        prog="randsep",
        description="Linear separability of random nonlinear features of a union of subspaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="minimum width from the separation bound")
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--K", type=_positive_int, default=2)
    p.add_argument("--delta", type=_probability, default=0.1)
    p.add_argument("--theta", required=True,
                   help="principal angles in radians, e.g. pi/2,pi/3 or all:pi/2; "
                        "(K-1)*r of them, shared by every class when K > 2")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("phase", parents=[common], help="certified fraction over a (d, r, D) grid")
    p.add_argument("--d", type=_int_list, default=[16, 64, 256])
    p.add_argument("--r", type=_int_list, default=[4])
    p.add_argument("--D", type=_int_list, default=[2 ** k for k in range(1, 13)])
    p.add_argument("--trials", type=_positive_int, default=25)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("sweep", parents=[common], help="linear-probe accuracy sweep")
    p.add_argument("--K", type=_int_list, default=[2])
    p.add_argument("--r", type=_int_list, default=[4, 8, 16, 32, 64])
    p.add_argument("--D", type=_int_list, default=[2 ** k for k in range(5, 11)])
    p.add_argument("--activations", type=_activation_list,
                   default=[Activation("relu"), Activation("quadratic")])
    p.add_argument("--d", type=_positive_int, default=128)
    p.add_argument("--n-per-class", type=_positive_int, default=5000)
    p.add_argument("--trials", type=_positive_int, default=10)
    p.add_argument("--weight-std", type=_positive_float, default=0.1)
    p.add_argument("--epochs", type=_nonneg_int, default=DEFAULT_EPOCHS)
    p.add_argument("--lr", type=_positive_float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", parents=[common], help="eigenvalue certificate for one draw")
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--D", type=_positive_int, required=True)
    p.add_argument("--K", type=_positive_int, default=2)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("probe", parents=[common], help="per-epoch loss and accuracy of one probe")
    p.add_argument("--d", type=_positive_int, default=16)
    p.add_argument("--r", type=_positive_int, default=4)
    p.add_argument("--K", type=_positive_int, default=2)
    p.add_argument("--D", type=_positive_int, default=128)
    p.add_argument("--activation", type=_activation, default=Activation("quadratic"))
    p.add_argument("--n-per-class", type=_positive_int, default=500)
    p.add_argument("--epochs", type=_nonneg_int, default=DEFAULT_EPOCHS)
    p.add_argument("--lr", type=_positive_float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--weight-std", type=_positive_float, default=0.1)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("verify-lemmas", parents=[common], help="Monte-Carlo lemma checks")
    p.add_argument("--which", default="all", help=f"comma list from {', '.join(LEMMAS)}, or all")
    p.add_argument("--d", type=_positive_int, default=12)
    p.add_argument("--r", type=_positive_int, default=3)
    p.add_argument("--samples", type=_positive_int, default=100_000)
    p.add_argument("--m", type=_int_list, default=[2, 4, 8], help="chi-square degrees of freedom")
    p.add_argument("--p-max", type=_positive_int, default=3)
    p.add_argument("--pairs", type=_positive_int, default=100)
    p.add_argument("--delta", type=_probability, default=0.1)
    p.add_argument("--trials", type=_positive_int, default=200)
    p.set_defaults(func=cmd_verify_lemmas)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, parser)
    except (KeyboardInterrupt, BrokenPipeError):
        return 1
    except Exception as exc:
        print(f"randsep {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
