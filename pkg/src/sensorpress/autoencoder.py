"""Three-layer sigmoid autoencoder: forward pass, cost variants, gradients,
training and hyperparameter selection.

Vectors are rows: a batch ``D`` has shape ``(n, L)``, the code ``Y`` has
shape ``(n, K)``.
"""

from __future__ import annotations

import itertools
import logging
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .optim import OptimizationError, lbfgs
from .sphering import SpheringScale

__all__ = [
    "Variant",
    "Hyperparams",
    "AutoencoderParams",
    "TrainingTrace",
    "TrainingError",
    "sigmoid",
    "encode",
    "decode",
    "reconstruct",
    "kl_divergence",
    "cost",
    "gradient",
    "init_params",
    "train",
    "cv_rmse",
    "grid_search",
    "save_params",
    "load_params",
    "PARAM_MAGIC",
]

log = logging.getLogger(__name__)

KL_EPS = 1e-8
PARAM_MAGIC = b"AEC1"


class Variant(str, Enum):
    AE = "ae"
    WAE = "wae"
    SAE = "sae"


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    """Training configuration.

    The variant zeroes the penalties it does not use: ``AE`` forces
    ``alpha = beta = 0`` and ``WAE`` forces ``beta = 0``.
    """

    variant: Variant = Variant.AE
    alpha: float = 0.0
    beta: float = 0.0
    rho: float = 0.05
    max_iters: int = 400
    seed: int = 0

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant is Variant.AE:
            object.__setattr__(self, "alpha", 0.0)
        if variant is not Variant.SAE:
            object.__setattr__(self, "beta", 0.0)
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class AutoencoderParams:
    W_enc: np.ndarray  # (K, L)
    b_enc: np.ndarray  # (K,)
    W_dec: np.ndarray  # (L, K)
    b_dec: np.ndarray  # (L,)
    sigma: SpheringScale | None = None

    def __post_init__(self):
        arrays = {}
        for name in ("W_enc", "b_enc", "W_dec", "b_dec"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        K, L = arrays["W_enc"].shape
        if (
            arrays["b_enc"].shape != (K,)
            or arrays["W_dec"].shape != (L, K)
            or arrays["b_dec"].shape != (L,)
        ):
            raise ValueError("inconsistent autoencoder parameter shapes")
        if not all(np.all(np.isfinite(a)) for a in arrays.values()):
            raise ValueError("autoencoder parameters must be finite")

    @property
    def L(self) -> int:
        return self.W_enc.shape[1]

    @property
    def K(self) -> int:
        return self.W_enc.shape[0]

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.W_enc.ravel(), self.b_enc, self.W_dec.ravel(), self.b_dec]
        )

    @classmethod
    def unflatten(cls, theta, L: int, K: int, sigma=None) -> AutoencoderParams:
        theta = np.asarray(theta, dtype=np.float64)
        i = 0
        parts = []
        for shape in ((K, L), (K,), (L, K), (L,)):
            size = int(np.prod(shape))
            parts.append(theta[i : i + size].reshape(shape))
            i += size
        if i != theta.size:
            raise ValueError(f"expected {i} parameters, got {theta.size}")
        return cls(*parts, sigma=sigma)

    def with_sigma(self, sigma: SpheringScale) -> AutoencoderParams:
        return replace(self, sigma=sigma)


@dataclass
class TrainingTrace:
    """Per-iteration bookkeeping; entry ``i`` belongs to iteration ``i + 1``."""

    cost: list[float] = field(default_factory=list)
    train_rmse: list[float] = field(default_factory=list)
    test_rmse: list[float] = field(default_factory=list)
    initial_cost: float = float("nan")
    initial_train_rmse: float = float("nan")
    converged: bool = False

    @property
    def n_iter(self) -> int:
        return len(self.cost)


def sigmoid(v):
    """Logistic function ``1 / (1 + exp(-v))``.

    Overflow of ``exp`` for very negative ``v`` is harmless: the result
    saturates to exactly 0.
    """
    with np.errstate(over="ignore", under="ignore"):
        return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=np.float64)))


def _check_dim(x: np.ndarray, n: int, what: str):
    if x.shape[-1] != n:
        raise ValueError(f"{what} has length {x.shape[-1]}, expected {n}")


def encode(d, params: AutoencoderParams) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    _check_dim(d, params.L, "input")
    return sigmoid(d @ params.W_enc.T + params.b_enc)


def decode(y, params: AutoencoderParams) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    _check_dim(y, params.K, "code")
    return sigmoid(y @ params.W_dec.T + params.b_dec)


def reconstruct(d, params: AutoencoderParams) -> np.ndarray:
    return decode(encode(d, params), params)


def kl_divergence(rho: float, rho_hat):
    """Bernoulli KL(rho || rho_hat) in nats, with rho_hat clamped away from 0 and 1."""
    rh = np.clip(rho_hat, KL_EPS, 1.0 - KL_EPS)
    return rho * np.log(rho / rh) + (1.0 - rho) * np.log((1.0 - rho) / (1.0 - rh))


def _forward_cost(params: AutoencoderParams, D: np.ndarray, hp: Hyperparams):
    Y = encode(D, params)
    D_hat = decode(Y, params)
    n = D.shape[0]
    err = D_hat - D
    total = 0.5 * np.sum(err * err) / n
    if hp.alpha:
        total += 0.5 * hp.alpha * (np.sum(params.W_enc**2) + np.sum(params.W_dec**2))
    rho_hat = None
    if hp.beta:
        rho_hat = Y.mean(axis=0)
        total += hp.beta * np.sum(kl_divergence(hp.rho, rho_hat))
    return float(total), Y, D_hat, err, rho_hat


def _batch(batch) -> np.ndarray:
    D = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if D.shape[0] == 0:
        raise ValueError("empty batch")
    return D


def cost(params: AutoencoderParams, batch, hp: Hyperparams) -> float:
    """Mean half squared reconstruction error plus the variant's penalties."""
    return _forward_cost(params, _batch(batch), hp)[0]


def _cost_and_grad(params: AutoencoderParams, D: np.ndarray, hp: Hyperparams):
    total, Y, D_hat, err, rho_hat = _forward_cost(params, D, hp)
    n = D.shape[0]
    delta_out = err * D_hat * (1.0 - D_hat) / n
    gW_dec = delta_out.T @ Y
    gb_dec = delta_out.sum(axis=0)

    back = delta_out @ params.W_dec
    if hp.beta:
        rh = np.clip(rho_hat, KL_EPS, 1.0 - KL_EPS)
        back = back + (hp.beta / n) * (-hp.rho / rh + (1.0 - hp.rho) / (1.0 - rh))
    delta_hid = back * Y * (1.0 - Y)
    gW_enc = delta_hid.T @ D
    gb_enc = delta_hid.sum(axis=0)

    if hp.alpha:
        gW_enc = gW_enc + hp.alpha * params.W_enc
        gW_dec = gW_dec + hp.alpha * params.W_dec
    grad = AutoencoderParams(gW_enc, gb_enc, gW_dec, gb_dec)
    return total, grad


def gradient(params: AutoencoderParams, batch, hp: Hyperparams) -> AutoencoderParams:
    """Analytic gradient of :func:`cost`, packed like the parameters."""
    return _cost_and_grad(params, _batch(batch), hp)[1]


def init_params(L: int, K: int, seed: int = 0) -> AutoencoderParams:
    """Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(6.0 / (L + K))
    W_enc = rng.uniform(-r, r, (K, L))
    W_dec = rng.uniform(-r, r, (L, K))
    return AutoencoderParams(W_enc, np.zeros(K), W_dec, np.zeros(L))


def _rmse(params, D) -> float:
    return float(np.sqrt(np.mean((reconstruct(D, params) - D) ** 2)))


def train(
    training,
    validation,
    hp: Hyperparams,
    hidden: int,
    init: AutoencoderParams | None = None,
) -> tuple[AutoencoderParams, TrainingTrace]:
    """Fit the autoencoder on normalised vectors with full-batch L-BFGS.

    ``validation`` may be ``None`` or empty, in which case the test column of
    the trace stays empty.
    """
    D = _batch(training)
    L = D.shape[1]
    if not 0 < hidden < L:
        raise ValueError(f"hidden size must satisfy 0 < K < L, got K={hidden}, L={L}")
    V = None
    if validation is not None and len(validation):
        V = _batch(validation)
        _check_dim(V, L, "validation vectors")
    start = init if init is not None else init_params(L, hidden, hp.seed)
    if (start.L, start.K) != (L, hidden):
        raise ValueError("initial parameters do not match (L, K)")

    trace = TrainingTrace()

    def fun_grad(theta):
        p = AutoencoderParams.unflatten(theta, L, hidden)
        total, g = _cost_and_grad(p, D, hp)
        return total, g.flatten()

    def record(it, theta, f):
        p = AutoencoderParams.unflatten(theta, L, hidden)
        trace.cost.append(f)
        trace.train_rmse.append(_rmse(p, D))
        if V is not None:
            trace.test_rmse.append(_rmse(p, V))

    trace.initial_train_rmse = _rmse(start, D)
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            result = lbfgs(fun_grad, start.flatten(), max_iter=hp.max_iters, callback=record)
    except OptimizationError as exc:
        raise TrainingError(f"training diverged at iteration {exc.iteration}") from exc
    except FloatingPointError as exc:
        raise TrainingError(
            f"non-finite value at iteration {trace.n_iter + 1}: {exc}"
        ) from exc
    trace.initial_cost = result.history[0]
    trace.converged = result.converged
    params = AutoencoderParams.unflatten(result.x, L, hidden, sigma=start.sigma)
    return params, trace


def cv_rmse(vectors, hp: Hyperparams, hidden: int, k: int = 10, seed: int = 0) -> float:
    """Mean held-out reconstruction RMSE over a k-fold split."""
    from .dataset import kfold_split

    D = _batch(vectors)
    scores = []
    for train_idx, test_idx in kfold_split(len(D), k, seed):
        params, _ = train(D[train_idx], None, hp, hidden)
        scores.append(_rmse(params, D[test_idx]))
    return float(np.mean(scores))


def _infer_variant(alpha: float, beta: float) -> Variant:
    if beta > 0:
        return Variant.SAE
    if alpha > 0:
        return Variant.WAE
    return Variant.AE


def grid_search(
    training,
    grids: dict[str, list],
    hidden: int,
    k: int = 10,
    base: Hyperparams | None = None,
    seed: int = 0,
    scorer=None,
) -> tuple[Hyperparams, list[tuple[Hyperparams, float]]]:
    """Exhaustive search over the Cartesian product of ``grids``.

    ``grids`` maps Hyperparams field names (``alpha``, ``beta``, ``rho``, ...)
    to candidate lists. Unless ``variant`` is itself gridded, each
    configuration takes the least-regularised variant its penalties need.
    Returns the configuration with the lowest mean CV RMSE (ties: smaller
    alpha, then smaller beta, then grid order) and the full score table.
    ``scorer(vectors, hp, hidden, k, seed)`` replaces :func:`cv_rmse`.
    """
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise ValueError("every grid must be non-empty")
    base = base or Hyperparams()
    scorer = scorer or cv_rmse
    names = list(grids)
    results = []
    for combo in itertools.product(*(grids[n] for n in names)):
        fields = dict(zip(names, combo))
        if "variant" not in fields:
            fields["variant"] = _infer_variant(
                fields.get("alpha", base.alpha), fields.get("beta", base.beta)
            )
        hp = replace(base, **fields)
        score = scorer(training, hp, hidden, k, seed)
        log.info("grid point %s: cv rmse %.6g", fields, score)
        results.append((hp, score))
    order = sorted(
        range(len(results)),
        key=lambda i: (results[i][1], results[i][0].alpha, results[i][0].beta, i),
    )
    return results[order[0]][0], results


def save_params(path: str | Path, params: AutoencoderParams) -> None:
    """Write the little-endian ``AEC1`` parameter file (all reals as f32)."""
    if params.sigma is None:
        raise ValueError("parameters carry no sphering scale")
    with open(path, "wb") as fh:
        fh.write(params_to_bytes(params))


def params_to_bytes(params: AutoencoderParams) -> bytes:
    head = PARAM_MAGIC + struct.pack("<IIf", params.L, params.K, params.sigma.sigma)
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f4").tobytes()
        for a in (params.W_enc, params.b_enc, params.W_dec, params.b_dec)
    )
    return head + body


def params_from_bytes(buf: bytes) -> AutoencoderParams:
    if buf[:4] != PARAM_MAGIC:
        raise ValueError("not an AEC1 parameter file")
    if len(buf) < 16:
        raise ValueError("truncated parameter file header")
    L, K, sigma = struct.unpack_from("<IIf", buf, 4)
    n = 2 * L * K + K + L
    if len(buf) != 16 + 4 * n:
        raise ValueError(f"parameter file holds {len(buf) - 16} payload bytes, expected {4 * n}")
    theta = np.frombuffer(buf, dtype="<f4", offset=16).astype(np.float64)
    return AutoencoderParams.unflatten(theta, L, K, sigma=SpheringScale(float(sigma)))


def load_params(path: str | Path) -> AutoencoderParams:
    with open(path, "rb") as fh:
        return params_from_bytes(fh.read())
