"""CPU and radio energy of compressing versus sending raw readings.

Defaults describe an MSP430 microcontroller and a 9,600 bps long-range
radio. All energies are in joules.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "CpuCostTable",
    "RadioModel",
    "SavingsRow",
    "e_clk",
    "s_bit",
    "cycles_compress",
    "cycles_residual",
    "energy_compressed",
    "energy_raw",
    "savings_report",
]

BITS_PER_VALUE = 32


@dataclass(frozen=True)
class CpuCostTable:
    """Clock cycles per floating-point operation."""

    add: int = 184
    sub: int = 177
    mul: int = 395
    div: int = 405
    cmp: int = 37
    exp: int = 52000

    def __post_init__(self):
        for name in ("add", "sub", "mul", "div", "cmp", "exp"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")


@dataclass(frozen=True)
class RadioModel:
    v_cc: float = 3.3
    i_tx: float = 0.600
    i_rx: float = 0.080
    data_rate: float = 9600.0
    i_mcu: float = 0.00185
    f_clk: float = 3.3e6


def e_clk(model: RadioModel = RadioModel()) -> float:
    """Energy per CPU clock cycle."""
    if model.f_clk <= 0:
        raise ValueError("f_clk must be positive")
    return model.v_cc * model.i_mcu / model.f_clk


def s_bit(model: RadioModel = RadioModel()) -> float:
    """Energy to transmit one bit and receive it at the next hop."""
    if model.data_rate <= 0:
        raise ValueError("data_rate must be positive")
    return model.v_cc * (model.i_tx + model.i_rx) / model.data_rate


def cycles_compress(L: int, K: int, table: CpuCostTable = CpuCostTable()) -> int:
    """Cycles to normalise an L-vector and compute K sigmoid code entries."""
    if L < 0 or K < 0:
        raise ValueError("L and K must be non-negative")
    t = table
    normalise = (t.add + t.div + t.sub + 2 * t.cmp) * L
    affine = (t.mul * L + 2 * t.add * L) * K
    squash = (t.add + t.div + t.exp) * K
    return normalise + affine + squash


def cycles_residual(L: int, K: int, table: CpuCostTable = CpuCostTable()) -> int:
    """Extra cycles of the error-bound stage at the sender.

    Decoding the code back (L sigmoids over K inputs), denormalising,
    subtracting and thresholding each entry. Not part of the default
    accounting.
    """
    t = table
    decode = (t.mul * K + 2 * t.add * K) * L + (t.add + t.div + t.exp) * L
    denorm = (t.sub + t.mul + t.add) * L
    check = (t.sub + 2 * t.cmp) * L
    return decode + denorm + check


def energy_compressed(
    L: int,
    K: int,
    hops: int = 1,
    model: RadioModel = RadioModel(),
    table: CpuCostTable = CpuCostTable(),
    include_residual_stage: bool = False,
) -> float:
    """CPU energy at the source plus radio energy over ``hops`` hops for K floats."""
    if hops < 1:
        raise ValueError("hops must be >= 1")
    cycles = cycles_compress(L, K, table)
    if include_residual_stage:
        cycles += cycles_residual(L, K, table)
    return e_clk(model) * cycles + BITS_PER_VALUE * K * s_bit(model) * hops


def energy_raw(L: int, hops: int = 1, model: RadioModel = RadioModel()) -> float:
    if hops < 1:
        raise ValueError("hops must be >= 1")
    return BITS_PER_VALUE * L * s_bit(model) * hops


@dataclass(frozen=True)
class SavingsRow:
    hops: int
    e_raw: float
    e_compressed: float

    @property
    def ratio(self) -> float:
        return self.e_raw / self.e_compressed

    @property
    def worthwhile(self) -> bool:
        return self.e_compressed < self.e_raw


def savings_report(
    L: int,
    K: int,
    hops_list,
    model: RadioModel = RadioModel(),
    table: CpuCostTable = CpuCostTable(),
) -> list[SavingsRow]:
    return [
        SavingsRow(h, energy_raw(L, h, model), energy_compressed(L, K, h, model, table))
        for h in hops_list
    ]
