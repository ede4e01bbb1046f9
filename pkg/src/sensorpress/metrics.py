"""Rate and fidelity metrics.

Raw data is charged 32 bits per reading. Transmitted size is counted in one
of two ways:

``full_frame``
    every serialized byte of the frame (headers, mean, indicator bitmask).
``payload_only``
    32 bits per transmitted real coefficient (code entries and residual
    values), without framing or bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .codec import CompressedFrame, frame_nbytes

__all__ = [
    "RateReport",
    "FidelityReport",
    "AccountingMode",
    "BITS_PER_READING",
    "compression_ratio",
    "frame_bits",
    "rmse",
    "r_squared",
    "fidelity",
]

AccountingMode = Literal["full_frame", "payload_only"]
BITS_PER_READING = 32


@dataclass(frozen=True)
class RateReport:
    bits_original: int
    bits_transmitted: int
    accounting_mode: str

    @property
    def cr_percent(self) -> float:
        return 100.0 * self.bits_transmitted / self.bits_original

    @property
    def savings_percent(self) -> float:
        return 100.0 - self.cr_percent


@dataclass(frozen=True)
class FidelityReport:
    rmse: float
    r_squared: float


def frame_bits(frame: CompressedFrame, mode: AccountingMode = "full_frame") -> int:
    """Transmitted bits of an autoencoder frame under ``mode``."""
    n_res = frame.residuals.count
    if mode == "full_frame":
        return 8 * frame_nbytes(frame.L, frame.K, n_res)
    if mode == "payload_only":
        return BITS_PER_READING * (frame.K + n_res)
    raise ValueError(f"unknown accounting mode {mode!r}")


def compression_ratio(
    bits_transmitted: int, L: int, mode: AccountingMode = "full_frame"
) -> RateReport:
    """Transmitted bits as a percentage of ``32 * L`` raw bits."""
    if L <= 0:
        raise ValueError("L must be positive")
    if mode not in ("full_frame", "payload_only"):
        raise ValueError(f"unknown accounting mode {mode!r}")
    return RateReport(BITS_PER_READING * L, int(bits_transmitted), mode)


def _pair(x, x_hat):
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    return x, x_hat


def rmse(x, x_hat) -> float:
    x, x_hat = _pair(x, x_hat)
    return float(np.sqrt(np.mean((x - x_hat) ** 2)))


def r_squared(x, x_hat) -> float:
    """Coefficient of determination; negative when worse than the mean."""
    x, x_hat = _pair(x, x_hat)
    denom = np.sum((x - x.mean()) ** 2)
    if denom == 0.0:
        raise ValueError("R^2 is undefined for a constant reference vector")
    return float(1.0 - np.sum((x - x_hat) ** 2) / denom)


def fidelity(x, x_hat) -> FidelityReport:
    return FidelityReport(rmse(x, x_hat), r_squared(x, x_hat))
