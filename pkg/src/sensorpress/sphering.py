"""Affine scaling of raw vectors into the sigmoid output range.

Each vector is centred on its own mean, clipped at three pooled standard
deviations and mapped linearly onto [0.1, 0.9].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SpheringScale", "fit_sigma", "normalize", "denormalize"]

LOW, HIGH = 0.1, 0.9
CENTER = 0.5
HALF_SPAN = 0.4
CLIP = 3.0


@dataclass(frozen=True)
class SpheringScale:
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be finite and > 0, got {self.sigma}")

    @property
    def gain(self) -> float:
        """Slope of the forward map, 0.4 / (3 sigma)."""
        return HALF_SPAN / (CLIP * self.sigma)

    @property
    def inverse_gain(self) -> float:
        return CLIP * self.sigma / HALF_SPAN


def fit_sigma(training_vectors) -> SpheringScale:
    """Population std of all entries of ``x - mean(x)`` pooled over the set."""
    X = np.atleast_2d(np.asarray(training_vectors, dtype=np.float64))
    if X.shape[1] < 2:
        raise ValueError("vectors need at least 2 entries")
    centered = X - X.mean(axis=1, keepdims=True)
    sigma = float(np.sqrt(np.mean(centered**2)))
    if sigma == 0.0:
        raise ValueError("training data has zero variance about each vector mean")
    return SpheringScale(sigma)


def normalize(x, scale: SpheringScale) -> tuple[np.ndarray, float | np.ndarray]:
    """Map ``x`` into [0.1, 0.9]; returns ``(d, m)``.

    ``x`` may be a single vector or a 2-D batch (one vector per row), in which
    case ``m`` is the vector of row means.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.mean(axis=-1, keepdims=True)
    bound = CLIP * scale.sigma
    d = CENTER + scale.gain * np.clip(x - m, -bound, bound)
    m = m[..., 0]
    return d, (float(m) if m.ndim == 0 else m)


def denormalize(d_hat, m, scale: SpheringScale) -> np.ndarray:
    """Inverse of :func:`normalize` on the unclipped region."""
    d_hat = np.asarray(d_hat, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim:
        m = m[..., None]
    return scale.inverse_gain * (d_hat - CENTER) + m
