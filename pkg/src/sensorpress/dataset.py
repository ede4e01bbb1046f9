"""Sensor data preparation: ingestion, outlier removal, imputation and
vector formation.

Readings live in a :class:`SensorMatrix` whose rows are time instants and
whose columns are sensors. Missing and rejected readings are tracked with a
boolean ``observed`` mask rather than NaNs so the raw value stays available
for inspection.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

__all__ = [
    "DataError",
    "ParseError",
    "BoundsError",
    "ImputationError",
    "SensorReading",
    "DynamicRange",
    "SensorMatrix",
    "SyntheticModel",
    "ingest_csv",
    "filter_outliers",
    "impute_missing",
    "make_vectors",
    "kfold_split",
    "synthesize",
]


class DataError(ValueError):
    """Base class for problems with input data."""


class ParseError(DataError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class BoundsError(DataError):
    pass


class ImputationError(DataError):
    pass


@dataclass(frozen=True)
class SensorReading:
    """One reading; indices are 1-based as in the CSV format."""

    sensor_id: int
    time_index: int
    value: float

    def check(self, n_sensors: int, n_times: int) -> None:
        if not 1 <= self.sensor_id <= n_sensors:
            raise BoundsError(f"sensor_id {self.sensor_id} outside 1..{n_sensors}")
        if not 1 <= self.time_index <= n_times:
            raise BoundsError(f"time_index {self.time_index} outside 1..{n_times}")


@dataclass(frozen=True)
class DynamicRange:
    """Valid magnitude range of a sensor, ``phi1 < |v| < phi2``."""

    phi1: float
    phi2: float

    def __post_init__(self):
        if not 0 <= self.phi1 < self.phi2:
            raise ValueError(f"need 0 <= phi1 < phi2, got ({self.phi1}, {self.phi2})")

    def contains(self, values: np.ndarray) -> np.ndarray:
        mag = np.abs(values)
        return (mag > self.phi1) & (mag < self.phi2)


@dataclass(frozen=True, eq=False)
class SensorMatrix:
    """Aligned readings, shape ``(M, N)`` = (time instants, sensors)."""

    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        observed = np.array(self.observed, dtype=bool)
        if values.ndim != 2 or values.shape != observed.shape:
            raise ValueError("values and observed must be 2-D arrays of equal shape")
        values.setflags(write=False)
        observed.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)

    @classmethod
    def complete(cls, values) -> SensorMatrix:
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def empty_columns(self) -> np.ndarray:
        """Indices of sensors with no observed reading."""
        return np.flatnonzero(~self.observed.any(axis=0))

    @property
    def column_means(self) -> np.ndarray:
        """Mean of the observed readings of each sensor.

        Raises :class:`ImputationError` if some sensor has no observed value,
        since its mean (and every imputation that needs it) is undefined.
        """
        empty = self.empty_columns
        if empty.size:
            raise ImputationError(f"no observed readings for sensor column(s) {empty.tolist()}")
        counts = self.observed.sum(axis=0)
        sums = np.where(self.observed, self.values, 0.0).sum(axis=0)
        return sums / counts

    @property
    def is_complete(self) -> bool:
        return bool(self.observed.all())


def ingest_csv(path: str | Path, n_sensors: int, n_times: int) -> SensorMatrix:
    """Read header-less ``time_index,sensor_id,value`` rows.

    Later rows overwrite earlier ones for the same cell. Blank lines are
    skipped.
    """
    values = np.zeros((n_times, n_sensors))
    observed = np.zeros((n_times, n_sensors), dtype=bool)
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            line = ",".join(row)
            if len(row) != 3:
                raise ParseError(lineno, line, f"expected 3 fields, got {len(row)}")
            try:
                reading = SensorReading(
                    sensor_id=int(row[1]), time_index=int(row[0]), value=float(row[2])
                )
            except ValueError as exc:
                raise ParseError(lineno, line, str(exc)) from None
            try:
                reading.check(n_sensors, n_times)
            except BoundsError as exc:
                raise BoundsError(f"line {lineno}: {exc}") from None
            values[reading.time_index - 1, reading.sensor_id - 1] = reading.value
            observed[reading.time_index - 1, reading.sensor_id - 1] = True
    return SensorMatrix(values, observed)


def write_csv(path: str | Path, m: SensorMatrix) -> None:
    """Write the observed cells of ``m`` in the ingestion format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for t, i in zip(*np.nonzero(m.observed)):
            writer.writerow([t + 1, i + 1, repr(float(m.values[t, i]))])


def filter_outliers(m: SensorMatrix, valid: DynamicRange) -> SensorMatrix:
    """Unmark readings whose magnitude falls outside the dynamic range."""
    return SensorMatrix(m.values, m.observed & valid.contains(m.values))


def impute_missing(m: SensorMatrix, means: np.ndarray | None = None) -> SensorMatrix:
    """Fill each missing cell with the row-ratio estimate.

    A missing ``x[i, j]`` becomes ``sum(x[i, S]) / sum(mu[S]) * mu[j]`` where
    ``S`` are the sensors observed at row ``i``. ``means`` lets the caller
    freeze ``mu`` (e.g. from training rows); by default the observed column
    means of ``m`` are used.
    """
    mu = m.column_means if means is None else np.asarray(means, dtype=np.float64)
    if mu.shape != (m.shape[1],):
        raise ValueError(f"means has shape {mu.shape}, expected ({m.shape[1]},)")
    if m.is_complete:
        return m

    obs = m.observed
    dead = np.flatnonzero(~obs.any(axis=1))
    if dead.size:
        raise ImputationError(f"row {int(dead[0])} has no observed sensor")
    row_sum = np.where(obs, m.values, 0.0).sum(axis=1)
    mu_sum = (obs * mu).sum(axis=1)
    needs = ~obs.all(axis=1)
    if np.any(mu_sum[needs] == 0.0):
        bad = int(np.flatnonzero(needs & (mu_sum == 0.0))[0])
        raise ImputationError(f"row {bad}: observed sensor means sum to zero")

    ratio = np.divide(row_sum, mu_sum, out=np.ones_like(row_sum), where=needs)
    filled = np.where(obs, m.values, ratio[:, None] * mu[None, :])
    return SensorMatrix.complete(filled)


def make_vectors(
    m: SensorMatrix, mode: Literal["temporal", "spatial"], window: int | None = None
) -> np.ndarray:
    """Arrange a complete matrix into data vectors, one per row of the result.

    ``spatial``: one vector of length N per time instant.
    ``temporal``: non-overlapping windows of ``window`` samples for each
    sensor, sensor-major order; a trailing partial window is dropped.
    """
    if not m.is_complete:
        raise DataError("matrix has missing entries; impute first")
    if mode == "spatial":
        return m.values.copy()
    if mode != "temporal":
        raise ValueError(f"unknown mode {mode!r}")
    n_times, n_sensors = m.shape
    if window is None or window < 1:
        raise ValueError("temporal mode needs a positive window")
    if window > n_times:
        raise DataError(f"window {window} exceeds the {n_times} available samples")
    per_sensor = n_times // window
    cols = m.values[: per_sensor * window].T  # (N, per_sensor*window)
    return cols.reshape(n_sensors * per_sensor, window).copy()


def kfold_split(n_or_vectors, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random k-fold partition of indices.

    Accepts a count or a sequence of vectors and returns ``(train_idx,
    test_idx)`` pairs. Test folds are disjoint, cover every index and differ
    in size by at most one.
    """
    n = n_or_vectors if isinstance(n_or_vectors, (int, np.integer)) else len(n_or_vectors)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"cannot split {n} vectors into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, test in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(test)))
    return out


@dataclass(frozen=True)
class SyntheticModel:
    """Correlated sensor field: a diurnal-like cycle plus white noise.

    Sensor ``i`` follows::

        offset_i + a_i(t) sin(2 pi t / P + phase_i) + b_i sin(4 pi t / P + phase2_i)

    where ``a_i(t)`` is slowly modulated so consecutive periods differ. Each
    sample gets independent ``N(0, noise_std**2)`` noise and is dropped with
    probability ``missing_rate``.
    """

    n_sensors: int = 23
    period: int = 720
    noise_std: float = 0.05
    missing_rate: float = 0.0
    seed: int = 0
    params: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if not 0 <= self.missing_rate < 1:
            raise ValueError("missing_rate must be in [0, 1)")
        rng = np.random.default_rng(self.seed)
        n = self.n_sensors
        p = dict(
            offset=rng.uniform(2.0, 12.0, n),
            amp=rng.uniform(3.0, 8.0, n),
            phase=rng.uniform(-0.6, 0.6, n),
            amp2=rng.uniform(0.5, 2.0, n),
            phase2=rng.uniform(0, 2 * np.pi, n),
            mod_phase=rng.uniform(0, 2 * np.pi, n),
        )
        object.__setattr__(self, "params", p)

    def base_signal(self, t: np.ndarray) -> np.ndarray:
        """Noiseless readings, shape ``(len(t), n_sensors)``."""
        p = self.params
        t = np.asarray(t, dtype=np.float64)[:, None]
        w = 2 * np.pi / self.period
        envelope = 1.0 + 0.3 * np.sin(w * t / 7.3 + p["mod_phase"])
        return (
            p["offset"]
            + p["amp"] * envelope * np.sin(w * t + p["phase"])
            + p["amp2"] * np.sin(2 * w * t + p["phase2"])
        )

    def sample(self, n_times: int, seed: int | None = None) -> SensorMatrix:
        """Draw ``n_times`` noisy rows starting at t = 0."""
        rng = np.random.default_rng(self.seed + 1 if seed is None else seed)
        clean = self.base_signal(np.arange(n_times))
        noisy = clean + rng.normal(0.0, 1.0, clean.shape) * self.noise_std
        observed = rng.random(clean.shape) >= self.missing_rate
        return SensorMatrix(noisy, observed)


def synthesize(
    n_sensors: int = 23,
    n_times: int = 2000,
    noise_std: float = 0.05,
    missing_rate: float = 0.0,
    period: int = 720,
    seed: int = 0,
) -> SensorMatrix:
    """Shortcut for ``SyntheticModel(...).sample(n_times)``."""
    model = SyntheticModel(n_sensors, period, noise_std, missing_rate, seed)
    return model.sample(n_times)
