"""Online compression and decompression with a per-sample error bound.

A frame carries the autoencoder code ``y``, the vector mean ``m`` and a
residual code listing the entries whose reconstruction error would exceed
``epsilon``. The encoder computes the receiver's reconstruction from the
already-quantised ``y`` and ``m``, so the residual decision is made on
exactly what the receiver will see.

Wire format (little-endian)::

    b"CFR1" | u32 L | u32 K | f32 m | K x f32 y |
    ceil(L/8) bytes indicator (bit j of byte j//8, LSB first) |
    popcount x f32 residual values, increasing index order
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .autoencoder import AutoencoderParams, sigmoid
from .sphering import CENTER, CLIP, HALF_SPAN

__all__ = [
    "FrameError",
    "BadMagicError",
    "TruncatedFrameError",
    "PopcountMismatchError",
    "DimensionMismatchError",
    "InputError",
    "ResidualCode",
    "CompressedFrame",
    "ErrorBoundConfig",
    "UNBOUNDED",
    "residual_code",
    "residual_expand",
    "compress",
    "decompress",
    "serialize",
    "deserialize",
    "read_frame",
    "iter_frames",
    "frame_nbytes",
    "pack_indicator",
    "unpack_indicator",
    "OpCounter",
    "compress_instrumented",
    "FRAME_MAGIC",
    "HEADER_BYTES",
]

FRAME_MAGIC = b"CFR1"
HEADER_BYTES = 16  # magic, L, K, m


class FrameError(ValueError):
    """A frame cannot be decoded."""


class BadMagicError(FrameError):
    pass


class TruncatedFrameError(FrameError):
    pass


class PopcountMismatchError(FrameError):
    pass


class DimensionMismatchError(FrameError):
    pass


class InputError(ValueError):
    pass


def pack_indicator(mask: np.ndarray) -> bytes:
    return np.packbits(np.asarray(mask, dtype=bool), bitorder="little").tobytes()


def unpack_indicator(buf: bytes, L: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")
    return bits[:L].astype(bool)


@dataclass(frozen=True, eq=False)
class ResidualCode:
    """Indicator over the L entries plus the f32 residuals where it is set."""

    indicator: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ind = np.array(self.indicator, dtype=bool)
        vals = np.array(self.values, dtype=np.float32).reshape(-1)
        if ind.ndim != 1:
            raise ValueError("indicator must be 1-D")
        object.__setattr__(self, "indicator", ind)
        object.__setattr__(self, "values", vals)

    @classmethod
    def empty(cls, L: int) -> ResidualCode:
        return cls(np.zeros(L, dtype=bool), np.zeros(0, dtype=np.float32))

    @property
    def L(self) -> int:
        return self.indicator.size

    @property
    def count(self) -> int:
        return int(self.indicator.sum())

    def __eq__(self, other):
        if not isinstance(other, ResidualCode):
            return NotImplemented
        return np.array_equal(self.indicator, other.indicator) and (
            self.values.tobytes() == other.values.tobytes()
        )


@dataclass(frozen=True, eq=False)
class CompressedFrame:
    y: np.ndarray
    residuals: ResidualCode
    m: np.float32

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float32).reshape(-1)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "m", np.float32(self.m))

    @property
    def K(self) -> int:
        return self.y.size

    @property
    def L(self) -> int:
        return self.residuals.L

    def __eq__(self, other):
        if not isinstance(other, CompressedFrame):
            return NotImplemented
        return (
            self.y.tobytes() == other.y.tobytes()
            and self.m.tobytes() == other.m.tobytes()
            and self.residuals == other.residuals
        )


@dataclass(frozen=True)
class ErrorBoundConfig:
    """``epsilon = None`` disables the residual stage."""

    epsilon: float | None = None

    def __post_init__(self):
        if self.epsilon is not None:
            if math.isinf(self.epsilon) and self.epsilon > 0:
                object.__setattr__(self, "epsilon", None)
            elif not (math.isfinite(self.epsilon) and self.epsilon >= 0):
                raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")

    @property
    def bounded(self) -> bool:
        return self.epsilon is not None


UNBOUNDED = ErrorBoundConfig(None)


def _as_config(cfg) -> ErrorBoundConfig:
    if isinstance(cfg, ErrorBoundConfig):
        return cfg
    return ErrorBoundConfig(None if cfg is None else float(cfg))


def residual_code(r, epsilon: float) -> ResidualCode:
    """Keep the entries with ``|r_j| > epsilon``."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    r = np.asarray(r, dtype=np.float64)
    mask = np.abs(r) > epsilon
    return ResidualCode(mask, r[mask])


def residual_expand(code: ResidualCode, L: int) -> np.ndarray:
    """Dense residual vector: stored values where indicated, zero elsewhere."""
    if code.L != L:
        raise DimensionMismatchError(f"indicator has length {code.L}, expected {L}")
    if code.count != code.values.size:
        raise PopcountMismatchError(
            f"indicator has {code.count} set bits but {code.values.size} values"
        )
    r = np.zeros(L)
    r[code.indicator] = code.values.astype(np.float64)
    return r


def _logistic(v: float) -> float:
    # C-library exp, so any receiver built on libm reproduces the decode exactly
    try:
        return 1.0 / (1.0 + math.exp(-v))
    except OverflowError:
        return 0.0


def _prediction(y32: np.ndarray, m32: np.float32, params: AutoencoderParams) -> np.ndarray:
    """Receiver-side estimate ``p`` from the transmitted ``y`` and ``m``.

    The decoder affine map is accumulated bias first, then one code unit at a
    time in index order, so the result does not depend on how a BLAS would
    order the sum. Sender and receiver therefore agree bit for bit.
    """
    y = y32.astype(np.float64)
    acc = params.b_dec.copy()
    for k in range(y.size):
        acc = acc + params.W_dec[:, k] * y[k]
    d_hat = np.array([_logistic(v) for v in acc.tolist()])
    return (CLIP * params.sigma.sigma / HALF_SPAN) * (d_hat - CENTER) + np.float64(m32)


def compress(x, params: AutoencoderParams, cfg=UNBOUNDED) -> CompressedFrame:
    """Encode one vector.

    ``cfg`` is an :class:`ErrorBoundConfig` or a bare epsilon (``None`` or
    ``inf`` for unbounded).
    """
    cfg = _as_config(cfg)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != params.L:
        raise InputError(f"expected a vector of length {params.L}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("input contains non-finite readings")
    if params.sigma is None:
        raise ValueError("parameters carry no sphering scale")

    sigma = params.sigma.sigma
    m = x.sum() * (1.0 / x.size)
    bound = CLIP * sigma
    d = CENTER + (HALF_SPAN / bound) * np.clip(x - m, -bound, bound)
    y = sigmoid(params.W_enc @ d + params.b_enc)

    y32 = y.astype(np.float32)
    m32 = np.float32(m)
    if not cfg.bounded:
        return CompressedFrame(y32, ResidualCode.empty(x.size), m32)
    p = _prediction(y32, m32, params)
    return CompressedFrame(y32, residual_code(x - p, cfg.epsilon), m32)


def decompress(frame: CompressedFrame, params: AutoencoderParams) -> np.ndarray:
    if frame.K != params.K or frame.L != params.L:
        raise DimensionMismatchError(
            f"frame is (L={frame.L}, K={frame.K}), parameters are (L={params.L}, K={params.K})"
        )
    p = _prediction(frame.y, frame.m, params)
    return p + residual_expand(frame.residuals, params.L)


def frame_nbytes(L: int, K: int, n_residuals: int = 0) -> int:
    return HEADER_BYTES + 4 * K + (L + 7) // 8 + 4 * n_residuals


def serialize(frame: CompressedFrame) -> bytes:
    res = frame.residuals
    if res.count != res.values.size:
        raise PopcountMismatchError("residual code is inconsistent")
    return b"".join(
        [
            FRAME_MAGIC,
            struct.pack("<II", frame.L, frame.K),
            frame.m.astype("<f4").tobytes(),
            frame.y.astype("<f4").tobytes(),
            pack_indicator(res.indicator),
            res.values.astype("<f4").tobytes(),
        ]
    )


def read_frame(buf: bytes, offset: int = 0) -> tuple[CompressedFrame, int]:
    """Decode the frame starting at ``offset``; returns it and the end offset."""
    view = memoryview(buf)
    magic = bytes(view[offset : offset + 4])
    if magic != FRAME_MAGIC[: len(magic)]:
        raise BadMagicError(f"bad frame magic {magic!r}")
    if len(view) - offset < HEADER_BYTES:
        raise TruncatedFrameError("buffer too short for a frame header")
    L, K = struct.unpack_from("<II", buf, offset + 4)
    (m,) = struct.unpack_from("<f", buf, offset + 12)
    pos = offset + HEADER_BYTES
    n_ind = (L + 7) // 8
    fixed_end = pos + 4 * K + n_ind
    if len(view) < fixed_end:
        raise TruncatedFrameError(f"frame needs {fixed_end - offset} bytes, have {len(view) - offset}")
    y = np.frombuffer(buf, dtype="<f4", count=K, offset=pos)
    pos += 4 * K
    ind_bytes = bytes(view[pos : pos + n_ind])
    indicator = unpack_indicator(ind_bytes, L)
    spare = np.unpackbits(np.frombuffer(ind_bytes, dtype=np.uint8), bitorder="little")[L:]
    if spare.any():
        raise PopcountMismatchError("indicator padding bits are set")
    pos += n_ind
    count = int(indicator.sum())
    end = pos + 4 * count
    if len(view) < end:
        raise TruncatedFrameError(
            f"indicator announces {count} residuals but only {(len(view) - pos) // 4} follow"
        )
    values = np.frombuffer(buf, dtype="<f4", count=count, offset=pos)
    frame = CompressedFrame(y, ResidualCode(indicator, values), np.float32(m))
    return frame, end


def deserialize(buf: bytes, L: int | None = None, K: int | None = None) -> CompressedFrame:
    """Decode exactly one frame; trailing bytes are a popcount mismatch."""
    frame, end = read_frame(buf)
    if (L is not None and frame.L != L) or (K is not None and frame.K != K):
        raise DimensionMismatchError(
            f"frame is (L={frame.L}, K={frame.K}), expected (L={L}, K={K})"
        )
    if end != len(buf):
        raise PopcountMismatchError(
            f"{len(buf) - end} bytes beyond the residuals announced by the indicator"
        )
    return frame


def iter_frames(buf: bytes) -> Iterator[CompressedFrame]:
    """Decode a concatenation of serialized frames."""
    offset = 0
    while offset < len(buf):
        frame, offset = read_frame(buf, offset)
        yield frame


class OpCounter:
    """Tally of scalar arithmetic performed by :func:`compress_instrumented`."""

    def __init__(self):
        self.add = self.mul = self.cmp = self.sigmoid = 0

    def as_dict(self) -> dict:
        return dict(add=self.add, mul=self.mul, cmp=self.cmp, sigmoid=self.sigmoid)


def compress_instrumented(x, params: AutoencoderParams, epsilon: float | None = None):
    """Scalar-loop compressor that counts every arithmetic operation.

    Mirrors :func:`compress` step for step; subtraction counts as an
    addition. Meant for checking operation counts, not for speed.
    """
    ops = OpCounter()
    x = [float(v) for v in np.asarray(x, dtype=np.float64)]
    L, K = params.L, params.K
    sigma = params.sigma.sigma
    bound = CLIP * sigma
    gain = HALF_SPAN / bound
    inv_L = 1.0 / L

    total = 0.0
    for v in x:
        total += v
        ops.add += 1
    m = total * inv_L
    ops.mul += 1

    d = []
    for v in x:
        c = v - m
        ops.add += 1
        c = min(max(c, -bound), bound)
        ops.cmp += 2
        d.append(CENTER + gain * c)
        ops.add += 1
        ops.mul += 1

    We, be = params.W_enc, params.b_enc
    y = []
    for k in range(K):
        acc = float(be[k])
        for j in range(L):
            acc += float(We[k, j]) * d[j]
            ops.mul += 1
            ops.add += 1
        y.append(float(sigmoid(acc)))
        ops.sigmoid += 1

    if epsilon is None:
        return ops
    Wd, bd = params.W_dec, params.b_dec
    y32 = [float(np.float32(v)) for v in y]
    m32 = float(np.float32(m))
    scale = CLIP * sigma / HALF_SPAN
    for j in range(L):
        acc = float(bd[j])
        for k in range(K):
            acc += float(Wd[j, k]) * y32[k]
            ops.mul += 1
            ops.add += 1
        p = scale * (float(sigmoid(acc)) - CENTER) + m32
        ops.sigmoid += 1
        ops.mul += 1
        ops.add += 2
        r = x[j] - p
        ops.add += 1
        ops.cmp += 1
        _ = abs(r) > epsilon
    return ops
