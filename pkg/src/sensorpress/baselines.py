"""Reference codecs: LTC, PAA, PCA and top-K DCT.

Only LTC has an error guarantee; the others are unbounded, as in the
comparison they serve. Each codec has an ``*_nbytes`` helper giving the
serialized size used for rate accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

from .codec import pack_indicator

__all__ = [
    "LtcSegment",
    "ltc_compress",
    "ltc_decompress",
    "ltc_knots",
    "ltc_nbytes",
    "paa_compress",
    "paa_decompress",
    "paa_nbytes",
    "PcaBasis",
    "pca_fit",
    "pca_compress",
    "pca_decompress",
    "pca_nbytes",
    "TransformCode",
    "dct_compress",
    "dct_decompress",
    "dct_nbytes",
]


@dataclass(frozen=True)
class LtcSegment:
    start_index: int
    end_index: int
    start_value: float
    end_value: float

    def __post_init__(self):
        if self.end_index <= self.start_index:
            raise ValueError("segment must span at least one step")

    def at(self, t):
        """Linear interpolation; exact at both knots."""
        t = np.asarray(t)
        frac = (t - self.start_index) / (self.end_index - self.start_index)
        line = self.start_value + frac * (self.end_value - self.start_value)
        return np.where(t == self.end_index, self.end_value, line)


def _fits(x, t0, v0, t1, v1, epsilon) -> bool:
    t = np.arange(t0, t1 + 1)
    line = LtcSegment(t0, t1, v0, v1).at(t)
    return bool(np.all(np.abs(line - x[t0 : t1 + 1]) <= epsilon))


def ltc_compress(x, epsilon: float) -> list[LtcSegment]:
    """Greedy piecewise-linear approximation within ``epsilon`` of every sample.

    From the current knot the filter keeps the interval of slopes that pass
    within ``epsilon`` of every sample seen so far. When a sample empties that
    interval a knot is placed at the previous sample, on the middle slope, and
    the next segment starts there; consecutive segments share endpoints.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-D series of at least 2 samples")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    n = x.size
    segments: list[LtcSegment] = []
    t0, v0 = 0, float(x[0])
    while t0 < n - 1:
        lo, hi = -np.inf, np.inf
        t = t0 + 1
        while t < n:
            dt = t - t0
            new_lo = max(lo, (x[t] - epsilon - v0) / dt)
            new_hi = min(hi, (x[t] + epsilon - v0) / dt)
            if new_lo > new_hi:
                break
            lo, hi = new_lo, new_hi
            t += 1
        t1, v1 = _close(x, t0, v0, t - 1, lo, hi, epsilon)
        segments.append(LtcSegment(t0, t1, v0, v1))
        t0, v0 = t1, v1
    return segments


def _close(x, t0, v0, t1, lo, hi, epsilon) -> tuple[int, float]:
    """Pick the knot ending the segment from ``(t0, v0)``.

    Normally the knot sits at ``t1`` on the middle feasible slope. Rounding
    can make the realised line miss a sample by an ulp, so the bound is
    re-checked on the interpolation the decoder uses; if every candidate
    fails, the segment is cut after one step with the knot on the sample.
    """
    dt = t1 - t0
    if dt == 1:
        return t1, float(x[t1])
    for s in (0.5 * (lo + hi), lo, hi):
        v = float(v0 + s * dt)
        if _fits(x, t0, v0, t1, v, epsilon):
            return t1, v
    return t0 + 1, float(x[t0 + 1])


def ltc_decompress(segments: list[LtcSegment], L: int) -> np.ndarray:
    """Evaluate the piecewise-linear function at ``0..L-1``."""
    if not segments:
        raise ValueError("no segments to decompress")
    out = np.empty(L)
    for seg in segments:
        t = np.arange(seg.start_index, seg.end_index + 1)
        out[t] = seg.at(t)
    if segments[0].start_index != 0 or segments[-1].end_index != L - 1:
        raise ValueError("segments do not cover 0..L-1")
    return out


def ltc_knots(segments: list[LtcSegment]) -> tuple[np.ndarray, np.ndarray]:
    idx = [segments[0].start_index] + [s.end_index for s in segments]
    val = [segments[0].start_value] + [s.end_value for s in segments]
    return np.array(idx), np.array(val)


def ltc_nbytes(segments: list[LtcSegment], L: int) -> int:
    """Knot bitmask over L plus one f32 per knot, after an 8-byte magic/L header."""
    return 8 + (L + 7) // 8 + 4 * (len(segments) + 1)


def paa_compress(x, frame: int) -> np.ndarray:
    """Frame means; a shorter trailing frame averages what it has."""
    x = np.asarray(x, dtype=np.float64)
    if frame < 1:
        raise ValueError("frame must be >= 1")
    starts = np.arange(0, x.size, frame)
    return np.add.reduceat(x, starts) / np.diff(np.append(starts, x.size))


def paa_decompress(levels, frame: int, L: int) -> np.ndarray:
    return np.repeat(np.asarray(levels, dtype=np.float64), frame)[:L]


def paa_nbytes(L: int, frame: int) -> int:
    return 12 + 4 * (-(-L // frame))


@dataclass(frozen=True, eq=False)
class PcaBasis:
    mean: np.ndarray  # (L,)
    components: np.ndarray  # (K, L), orthonormal rows
    explained_variance: np.ndarray  # (K,)

    @property
    def K(self) -> int:
        return self.components.shape[0]


def pca_fit(training, K: int) -> PcaBasis:
    """Top-K eigenvectors of the training covariance."""
    X = np.atleast_2d(np.asarray(training, dtype=np.float64))
    n, L = X.shape
    if not 1 <= K <= L:
        raise ValueError(f"need 1 <= K <= L, got K={K}, L={L}")
    if n < K + 1 and K < L:
        raise ValueError(f"need at least K+1 = {K + 1} training vectors, got {n}")
    mean = X.mean(axis=0)
    cov = (X - mean).T @ (X - mean) / max(n - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:K]
    rank = int(np.sum(evals > evals.max() * L * np.finfo(float).eps)) if evals.max() > 0 else 0
    if K > rank and K < L:
        raise ValueError(f"K={K} exceeds the rank {rank} of the training covariance")
    comps = evecs[:, order].T
    # deterministic sign: largest-magnitude loading positive
    flip = np.sign(comps[np.arange(K), np.argmax(np.abs(comps), axis=1)])
    comps *= np.where(flip == 0, 1.0, flip)[:, None]
    return PcaBasis(mean, comps, evals[order])


def pca_compress(x, basis: PcaBasis) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - basis.mean) @ basis.components.T


def pca_decompress(scores, basis: PcaBasis) -> np.ndarray:
    return basis.mean + np.asarray(scores, dtype=np.float64) @ basis.components


def pca_nbytes(K: int) -> int:
    return 12 + 4 * K


@dataclass(frozen=True, eq=False)
class TransformCode:
    """Kept DCT coefficients (f32) and their positions as an L-bit mask."""

    indicator: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ind = np.array(self.indicator, dtype=bool)
        vals = np.array(self.values, dtype=np.float32).reshape(-1)
        if int(ind.sum()) != vals.size:
            raise ValueError("popcount does not match the number of values")
        object.__setattr__(self, "indicator", ind)
        object.__setattr__(self, "values", vals)

    @property
    def L(self) -> int:
        return self.indicator.size

    def to_bytes(self) -> bytes:
        return pack_indicator(self.indicator) + self.values.astype("<f4").tobytes()


def dct_compress(x, K: int) -> TransformCode:
    """Keep the K largest-magnitude orthonormal DCT-II coefficients."""
    x = np.asarray(x, dtype=np.float64)
    if not 1 <= K <= x.size:
        raise ValueError(f"need 1 <= K <= L, got K={K}, L={x.size}")
    coef = dct(x, type=2, norm="ortho")
    keep = np.sort(np.argsort(-np.abs(coef), kind="stable")[:K])
    mask = np.zeros(x.size, dtype=bool)
    mask[keep] = True
    return TransformCode(mask, coef[mask])


def dct_decompress(code: TransformCode) -> np.ndarray:
    spectrum = np.zeros(code.L)
    spectrum[code.indicator] = code.values.astype(np.float64)
    return idct(spectrum, type=2, norm="ortho")


def dct_nbytes(L: int, K: int) -> int:
    return 8 + (L + 7) // 8 + 4 * K
