"""Training pipeline and rate-distortion sweeps over all codecs."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

from . import baselines as bl
from .autoencoder import AutoencoderParams, Hyperparams, TrainingTrace, train
from .codec import compress, decompress
from .dataset import kfold_split, make_vectors, synthesize
from .metrics import BITS_PER_READING, compression_ratio, frame_bits
from .sphering import fit_sigma, normalize

__all__ = [
    "BenchRow",
    "CODECS",
    "fit_autoencoder",
    "k_sweep",
    "epsilon_sweep",
    "rows_to_csv",
    "TemporalBenchmark",
    "temporal_benchmark",
]

CODECS = ("ae", "ltc", "paa", "pca", "dct")
MODES = ("full_frame", "payload_only")


@dataclass(frozen=True)
class BenchRow:
    codec: str
    mode: str
    epsilon: float | None
    cr_percent: float
    savings_percent: float
    rmse: float
    r2: float
    bits_tx: int
    bits_raw: int


def fit_autoencoder(
    train_raw, hidden: int, hp: Hyperparams = Hyperparams(), validation_raw=None
) -> tuple[AutoencoderParams, TrainingTrace]:
    """Fit the sphering scale on raw training vectors, then the network."""
    train_raw = np.asarray(train_raw, dtype=np.float64)
    scale = fit_sigma(train_raw)
    d_train, _ = normalize(train_raw, scale)
    d_val = None
    if validation_raw is not None and len(validation_raw):
        d_val, _ = normalize(np.asarray(validation_raw, dtype=np.float64), scale)
    params, trace = train(d_train, d_val, hp, hidden)
    return params.with_sigma(scale), trace


def _fidelity(X, X_hat) -> tuple[float, float]:
    """Mean per-vector RMSE and R^2 (constant vectors skipped for R^2)."""
    err = np.sqrt(np.mean((X - X_hat) ** 2, axis=1))
    ss_tot = np.sum((X - X.mean(axis=1, keepdims=True)) ** 2, axis=1)
    ss_res = np.sum((X - X_hat) ** 2, axis=1)
    ok = ss_tot > 0
    r2 = float(np.mean(1.0 - ss_res[ok] / ss_tot[ok])) if ok.any() else float("nan")
    return float(err.mean()), r2


def _rows(codec, eps, X, X_hat, bits_by_mode) -> list[BenchRow]:
    L = X.shape[1]
    n = X.shape[0]
    err, r2 = _fidelity(X, X_hat)
    out = []
    for mode in MODES:
        report = compression_ratio(bits_by_mode[mode], L * n, mode)
        out.append(
            BenchRow(
                codec, mode, eps, report.cr_percent, report.savings_percent,
                err, r2, report.bits_transmitted, report.bits_original,
            )
        )
    return out


def _ae_eval(X, params, eps):
    frames = [compress(x, params, eps) for x in X]
    X_hat = np.array([decompress(f, params) for f in frames])
    bits = {m: sum(frame_bits(f, m) for f in frames) for m in MODES}
    return X_hat, bits


def epsilon_sweep(X, params: AutoencoderParams, epsilons, codecs=("ae", "ltc")) -> list[BenchRow]:
    """Error-bounded codecs (AE with residuals, LTC) over a list of bounds."""
    X = np.asarray(X, dtype=np.float64)
    if not codecs:
        raise ValueError("no codecs selected")
    rows = []
    for eps in epsilons:
        for codec in codecs:
            if codec == "ae":
                X_hat, bits = _ae_eval(X, params, eps)
            elif codec == "ltc":
                segs = [bl.ltc_compress(x, eps) for x in X]
                X_hat = np.array([bl.ltc_decompress(s, X.shape[1]) for s in segs])
                bits = {
                    "full_frame": sum(8 * bl.ltc_nbytes(s, X.shape[1]) for s in segs),
                    "payload_only": sum(BITS_PER_READING * (len(s) + 1) for s in segs),
                }
            else:
                raise ValueError(f"codec {codec!r} has no error bound")
            rows.extend(_rows(codec, eps, X, X_hat, bits))
    return rows


def k_sweep(
    X_train,
    X_test,
    ks,
    codecs=("ae", "pca", "dct", "paa"),
    hp: Hyperparams = Hyperparams(),
    ae_params: dict | None = None,
) -> list[BenchRow]:
    """Unbounded codecs at several code sizes K.

    ``ae_params`` may map K to pre-trained parameters to skip training.
    PAA uses the frame length giving K levels (ceil(L / frame) = K).
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_test = np.asarray(X_test, dtype=np.float64)
    if not codecs:
        raise ValueError("no codecs selected")
    L = X_test.shape[1]
    n = X_test.shape[0]
    rows = []
    for K in ks:
        for codec in codecs:
            if codec == "ae":
                params = (ae_params or {}).get(K)
                if params is None:
                    params, _ = fit_autoencoder(X_train, K, hp)
                X_hat, bits = _ae_eval(X_test, params, None)
            elif codec == "pca":
                basis = bl.pca_fit(X_train, K)
                X_hat = bl.pca_decompress(bl.pca_compress(X_test, basis), basis)
                bits = {"full_frame": 8 * n * bl.pca_nbytes(K), "payload_only": 32 * n * K}
            elif codec == "dct":
                codes = [bl.dct_compress(x, K) for x in X_test]
                X_hat = np.array([bl.dct_decompress(c) for c in codes])
                bits = {"full_frame": 8 * n * bl.dct_nbytes(L, K), "payload_only": 32 * n * K}
            elif codec == "paa":
                frame = -(-L // K)
                levels = [bl.paa_compress(x, frame) for x in X_test]
                X_hat = np.array([bl.paa_decompress(v, frame, L) for v in levels])
                n_levels = len(levels[0])
                bits = {
                    "full_frame": 8 * n * bl.paa_nbytes(L, frame),
                    "payload_only": 32 * n * n_levels,
                }
            elif codec == "ltc":
                continue  # LTC is driven by epsilon, not K
            else:
                raise ValueError(f"unknown codec {codec!r}")
            rows.extend(_rows(codec, None, X_test, X_hat, bits))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in fields(BenchRow)])
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                         for v in astuple(row)])
    return buf.getvalue()


@dataclass(frozen=True)
class TemporalBenchmark:
    """Daily windows from a synthetic field, one window per sensor per period.

    The noise level is sensor grade (a few percent of the cycle amplitude)
    and the bound sweep is stated in multiples of it, smallest first.
    """

    n_sensors: int = 23
    n_periods: int = 40
    window: int = 720
    hidden: int = 20
    noise_std: float = 0.2
    eps_factors: tuple = (1.0, 2.0, 4.0, 10.0, 20.0)
    max_iters: int = 1000
    folds: int = 10
    seed: int = 3

    @property
    def epsilons(self) -> list[float]:
        return [f * self.noise_std for f in self.eps_factors]

    def split(self):
        m = synthesize(self.n_sensors, self.window * self.n_periods,
                       noise_std=self.noise_std, period=self.window, seed=self.seed)
        X = make_vectors(m, "temporal", self.window)
        train_idx, test_idx = kfold_split(len(X), self.folds, self.seed)[0]
        return X[train_idx], X[test_idx]


def temporal_benchmark(cfg: TemporalBenchmark = TemporalBenchmark()):
    """Train on fold 0 and sweep the bound over AE and LTC.

    Returns ``(rows, params, trace)``.
    """
    X_train, X_test = cfg.split()
    hp = Hyperparams(max_iters=cfg.max_iters, seed=cfg.seed)
    params, trace = fit_autoencoder(X_train, cfg.hidden, hp, X_test)
    return epsilon_sweep(X_test, params, cfg.epsilons), params, trace
