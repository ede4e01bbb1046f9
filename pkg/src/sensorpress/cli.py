"""Command-line front end.

Subcommands: ``train``, ``compress``, ``decompress``, ``bench``, ``energy``
and ``roundtrip``. Exit codes: 0 success, 1 usage, 2 data error, 3 error
bound violated. ``SENSORPRESS_SEED`` supplies the seed when ``--seed`` is
absent.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bn
from .autoencoder import (
    Hyperparams,
    TrainingError,
    Variant,
    grid_search,
    init_params,
    load_params,
    save_params,
)
from .codec import FrameError, compress, decompress, iter_frames, serialize
from .dataset import (
    DataError,
    DynamicRange,
    filter_outliers,
    impute_missing,
    ingest_csv,
    kfold_split,
    make_vectors,
    synthesize,
)
from .energy import RadioModel, savings_report
from .sphering import fit_sigma, normalize

log = logging.getLogger("sensorpress")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    """``1,2,5`` or an inclusive range ``1..5``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SENSORPRESS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SENSORPRESS_SEED must be an integer, got {env!r}")


# -- data ------------------------------------------------------------------

def _add_data_args(p):
    g = p.add_argument_group("data")
    g.add_argument("--data", "--in", dest="data", type=Path,
                   help="CSV of (time_index, sensor_id, value) rows; synthetic if omitted")
    g.add_argument("--sensors", type=int, default=23, help="number of sensors N")
    g.add_argument("--times", type=int, default=2000, help="number of time instants M")
    g.add_argument("--noise", type=float, default=0.05, help="synthetic noise std")
    g.add_argument("--missing", type=float, default=0.0, help="synthetic missing rate")
    g.add_argument("--period", type=int, default=720, help="synthetic cycle length")
    g.add_argument("--mode", choices=("temporal", "spatial"), default="spatial")
    g.add_argument("--window", type=int, default=720, help="temporal window length L")
    g.add_argument("--phi1", type=float, help="readings with |v| <= phi1 are outliers")
    g.add_argument("--phi2", type=float, help="readings with |v| >= phi2 are outliers")


def _load_vectors(args, seed: int) -> np.ndarray:
    if args.data is not None:
        if not args.data.exists():
            raise DataError(f"no such file: {args.data}")
        m = ingest_csv(args.data, args.sensors, args.times)
    else:
        m = synthesize(args.sensors, args.times, args.noise, args.missing, args.period, seed)
    if args.phi1 is not None or args.phi2 is not None:
        lo = args.phi1 if args.phi1 is not None else -np.inf
        hi = args.phi2 if args.phi2 is not None else np.inf
        m = filter_outliers(m, DynamicRange(lo, hi))
    if not m.is_complete:
        m = impute_missing(m)
    return make_vectors(m, args.mode, args.window if args.mode == "temporal" else None)


def _write_matrix(path, X):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in X:
            w.writerow([repr(float(v)) for v in row])


# -- subcommands -------------------------------------------------------------

def cmd_train(args) -> int:
    seed = _seed(args)
    X = _load_vectors(args, seed)
    train_idx, test_idx = kfold_split(len(X), args.folds, seed)[0]
    X_train, X_test = X[train_idx], X[test_idx]
    base = Hyperparams(
        variant=Variant(args.variant), alpha=args.alpha[0], beta=args.beta[0],
        rho=args.rho[0], max_iters=args.iters, seed=seed,
    )
    grids = {"alpha": args.alpha, "beta": args.beta, "rho": args.rho}
    if any(len(v) > 1 for v in grids.values()):
        scale = fit_sigma(X_train)
        D, _ = normalize(X_train, scale)
        hp, results = grid_search(D, grids, args.hidden, k=args.folds, base=base, seed=seed)
        print(f"grid search: {len(results)} configurations evaluated")
    else:
        hp = base
    params, trace = bn.fit_autoencoder(X_train, args.hidden, hp, X_test)
    save_params(args.out, params)
    test = trace.test_rmse[-1] if trace.test_rmse else float("nan")
    print(f"variant={hp.variant.value} alpha={hp.alpha} beta={hp.beta} rho={hp.rho}")
    print(f"iterations={trace.n_iter} train_rmse={trace.train_rmse[-1]:.6g} "
          f"test_rmse={test:.6g} (normalised units)")
    print(f"wrote {args.out}")
    return EXIT_OK


def _epsilon(args):
    return None if args.epsilon is None else args.epsilon


def cmd_compress(args) -> int:
    params = load_params(args.params)
    X = _load_vectors(args, _seed(args))
    if X.shape[1] != params.L:
        raise DataError(f"vectors have length {X.shape[1]}, parameters expect {params.L}")
    with open(args.out, "wb") as fh:
        for x in X:
            fh.write(serialize(compress(x, params, _epsilon(args))))
    print(f"wrote {len(X)} frames to {args.out}")
    return EXIT_OK


def _read_frames(path, params):
    frames = list(iter_frames(Path(path).read_bytes()))
    for f in frames:
        if (f.L, f.K) != (params.L, params.K):
            raise FrameError(f"frame is ({f.L}, {f.K}), parameters are ({params.L}, {params.K})")
    return frames


def cmd_decompress(args) -> int:
    params = load_params(args.params)
    frames = _read_frames(args.input, params)
    X_hat = np.array([decompress(f, params) for f in frames]).reshape(len(frames), params.L)
    _write_matrix(args.out, X_hat)
    print(f"wrote {len(frames)} vectors to {args.out}")
    return EXIT_OK


def bound_tolerance(frame, epsilon: float | None, x) -> np.ndarray:
    """Per-entry acceptance bound for a decoded frame.

    Entries outside the residual set must be within ``epsilon`` exactly.
    Transmitted entries are off by at most the f32 rounding of the residual
    (plus a float64 ulp of the sum), which matters only when that exceeds
    ``epsilon``.
    """
    L = frame.L
    tol = np.full(L, np.inf if epsilon is None else float(epsilon))
    if epsilon is None:
        return tol
    ind = frame.residuals.indicator
    vals = np.abs(frame.residuals.values)
    rounding = np.spacing(vals).astype(np.float64) + 2 * np.spacing(np.abs(np.asarray(x)[ind]))
    tol[ind] = np.maximum(tol[ind], rounding)
    return tol


def cmd_roundtrip(args) -> int:
    seed = _seed(args)
    X = _load_vectors(args, seed)
    if args.params is not None:
        params = load_params(args.params)
    else:
        params = init_params(X.shape[1], args.hidden, seed).with_sigma(fit_sigma(X))
    if X.shape[1] != params.L:
        raise DataError(f"vectors have length {X.shape[1]}, parameters expect {params.L}")
    eps = _epsilon(args)
    if args.frames is not None:
        frames = _read_frames(args.frames, params)
        if len(frames) != len(X):
            raise FrameError(f"{len(frames)} frames for {len(X)} vectors")
    else:
        blob = b"".join(serialize(compress(x, params, eps)) for x in X)
        if args.out is not None:
            Path(args.out).write_bytes(blob)
        frames = list(iter_frames(blob))
    worst, violations = 0.0, 0
    for x, f in zip(X, frames):
        err = np.abs(x - decompress(f, params))
        worst = max(worst, float(err.max()))
        violations += int(np.sum(err > bound_tolerance(f, eps, x)))
    print(f"vectors={len(X)} epsilon={eps} max_error={worst!r} violations={violations}")
    return EXIT_BOUND if violations else EXIT_OK


def cmd_bench(args) -> int:
    seed = _seed(args)
    codecs = _names(args.codecs) if args.codecs is not None else None
    if codecs is not None and not codecs:
        raise UsageError("empty codec list")
    if args.preset == "temporal":
        cfg = bn.TemporalBenchmark()
        if args.iters is not None:
            cfg = bn.TemporalBenchmark(max_iters=args.iters)
        X_train, X_test = cfg.split()
        hp = Hyperparams(max_iters=cfg.max_iters, seed=cfg.seed)
        params, _ = bn.fit_autoencoder(X_train, cfg.hidden, hp, X_test)
        rows = bn.epsilon_sweep(X_test, params, args.epsilon or cfg.epsilons,
                                codecs or ("ae", "ltc"))
    else:
        X = _load_vectors(args, seed)
        train_idx, test_idx = kfold_split(len(X), args.folds, seed)[0]
        hp = Hyperparams(max_iters=args.iters or 400, seed=seed)
        if args.sweep == "epsilon":
            if not args.epsilon:
                raise UsageError("--epsilon list required for an epsilon sweep")
            if args.params is not None:
                params = load_params(args.params)
            else:
                params, _ = bn.fit_autoencoder(X[train_idx], args.hidden, hp, X[test_idx])
            rows = bn.epsilon_sweep(X[test_idx], params, args.epsilon, codecs or ("ae", "ltc"))
        else:
            ks = args.ks or [args.hidden]
            rows = bn.k_sweep(X[train_idx], X[test_idx], ks,
                              codecs or ("ae", "pca", "dct", "paa"), hp)
    text = bn.rows_to_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_energy(args) -> int:
    model = RadioModel(i_tx=args.itx, i_rx=args.irx, data_rate=args.rate)
    rows = savings_report(args.L, args.K, args.hops, model)
    lines = ["hops,e_raw_j,e_compressed_j,ratio,worthwhile"]
    lines += [
        f"{r.hops},{r.e_raw!r},{r.e_compressed!r},{r.ratio!r},{int(r.worthwhile)}" for r in rows
    ]
    text = "\n".join(lines) + "\n"
    if args.csv is None:
        sys.stdout.write(text)
    else:
        Path(args.csv).write_text(text)
        print(f"wrote {len(rows)} rows to {args.csv}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sensorpress", description=__doc__.splitlines()[0])
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit an autoencoder and write an AEC1 parameter file")
    _add_data_args(t)
    t.add_argument("--variant", choices=[v.value for v in Variant], default="ae")
    t.add_argument("--hidden", type=int, default=8, help="code size K")
    t.add_argument("--alpha", type=_floats, default=[0.0], help="weight decay (list = grid)")
    t.add_argument("--beta", type=_floats, default=[0.0], help="sparsity weight (list = grid)")
    t.add_argument("--rho", type=_floats, default=[0.05], help="target activation (list = grid)")
    t.add_argument("--iters", type=int, default=400)
    t.add_argument("--folds", type=int, default=10)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", type=Path, required=True)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compress", help="encode vectors into concatenated CFR1 frames")
    _add_data_args(c)
    c.add_argument("--params", type=Path, required=True)
    c.add_argument("--epsilon", type=float, help="error bound; omit for code-only frames")
    c.add_argument("--seed", type=int)
    c.add_argument("--out", type=Path, required=True)
    c.set_defaults(func=cmd_compress)

    d = sub.add_parser("decompress", help="decode CFR1 frames into CSV, one vector per row")
    d.add_argument("--params", type=Path, required=True)
    d.add_argument("--in", dest="input", type=Path, required=True)
    d.add_argument("--out", type=Path, required=True)
    d.set_defaults(func=cmd_decompress)

    r = sub.add_parser("roundtrip", help="compress, decode and check the error bound")
    _add_data_args(r)
    r.add_argument("--params", type=Path, help="parameter file; random weights if omitted")
    r.add_argument("--hidden", type=int, default=8, help="code size for random weights")
    r.add_argument("--epsilon", type=float, default=0.0)
    r.add_argument("--frames", type=Path, help="check these frames instead of compressing")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", type=Path, help="also write the frames here")
    r.set_defaults(func=cmd_roundtrip)

    b = sub.add_parser("bench", help="rate-distortion sweep, CSV output")
    _add_data_args(b)
    b.add_argument("--preset", choices=("temporal",), help="built-in benchmark")
    b.add_argument("--sweep", choices=("epsilon", "k"), default="k")
    b.add_argument("--codecs", "--codec", dest="codecs",
                   help="comma-separated subset of " + ",".join(bn.CODECS))
    b.add_argument("--epsilon", type=_floats, help="bounds for an epsilon sweep")
    b.add_argument("--ks", type=_ints, help="code sizes for a K sweep")
    b.add_argument("--hidden", type=int, default=8)
    b.add_argument("--params", type=Path)
    b.add_argument("--iters", type=int)
    b.add_argument("--folds", type=int, default=10)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", type=Path)
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("energy", help="multihop energy of raw versus compressed transfer")
    e.add_argument("--L", type=int, default=90)
    e.add_argument("--K", type=int, default=32)
    e.add_argument("--hops", type=_ints, default=[1, 2, 3, 4, 5])
    e.add_argument("--itx", type=float, default=RadioModel.i_tx, help="transmit current (A)")
    e.add_argument("--irx", type=float, default=RadioModel.i_rx, help="receive current (A)")
    e.add_argument("--rate", type=float, default=RadioModel.data_rate, help="bits per second")
    e.add_argument("--csv", type=Path)
    e.set_defaults(func=cmd_energy)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(level)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sensorpress: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FrameError, TrainingError, OSError, ValueError) as exc:
        print(f"sensorpress: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
