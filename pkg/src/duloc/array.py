"""Linear array geometry, TDOAs and far-field steering vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_SOUND = 343.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Sensor distances from the reference (first) sensor, in meters."""

    spacings: tuple[float, ...]
    c: float = SPEED_OF_SOUND

    def __post_init__(self):
        sp = tuple(float(d) for d in self.spacings)
        object.__setattr__(self, "spacings", sp)
        if len(sp) < 2:
            raise ValueError("an array needs at least 2 sensors")
        if not all(np.isfinite(sp)):
            raise ValueError("sensor spacings must be finite")
        if sp[0] != 0.0:
            raise ValueError("the first spacing must be 0 (sensor 1 is the reference)")
        if not self.c > 0:
            raise ValueError(f"propagation speed must be positive, got {self.c}")

    @classmethod
    def ula(cls, n_sensors: int, spacing: float, c: float = SPEED_OF_SOUND) -> "ArrayGeometry":
        return cls(tuple(n * spacing for n in range(n_sensors)), c)

    @property
    def n_sensors(self) -> int:
        return len(self.spacings)


@dataclass(frozen=True)
class DoaGrid:
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("a DOA grid needs at least 2 angles")
        if np.any(np.diff(a) <= 0):
            raise ValueError("DOA grid angles must be strictly increasing")
        if a[0] < -90 or a[-1] > 90:
            raise ValueError("DOA grid angles must lie within [-90, 90] degrees")
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @classmethod
    def uniform(cls, step: float = 1.0, lo: float = -90.0, hi: float = 90.0) -> "DoaGrid":
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(round((hi - lo) / step))
        return cls(lo + step * np.arange(n + 1))

    def __len__(self) -> int:
        return self.angles.size


def tdoa(geometry: ArrayGeometry, theta: float | np.ndarray) -> np.ndarray:
    """Time differences of arrival (s) for sensors relative to sensor 1.

    A scalar ``theta`` yields shape ``(N,)``; an array of angles yields ``(..., N)``.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -90) or np.any(theta > 90):
        raise ValueError(f"DOA must lie within [-90, 90] degrees, got {theta}")
    d = np.asarray(geometry.spacings)
    return d * np.sin(np.deg2rad(theta))[..., None] / geometry.c


def steering_vector(geometry: ArrayGeometry, bin: int, L: int, fs: float,
                    theta: float | np.ndarray) -> np.ndarray:
    """Far-field steering vector ``exp(-j 2 pi bin tau fs / L)`` per sensor.

    Delays are expressed in samples before applying the bin/L phase factor.
    """
    if not 0 <= bin <= L // 2:
        raise ValueError(f"bin {bin} outside [0, {L // 2}]")
    delay = tdoa(geometry, theta) * fs
    return np.exp(-2j * np.pi * bin * delay / L)


@dataclass(frozen=True)
class SteeringTable:
    """Precomputed steering vectors, indexed ``vectors[bin_index, angle_index, sensor]``."""

    bins: np.ndarray
    grid: DoaGrid
    vectors: np.ndarray = field(repr=False)

    def lookup(self, bin: int, angle_index: int) -> np.ndarray:
        i = int(np.searchsorted(self.bins, bin))
        if i >= self.bins.size or self.bins[i] != bin:
            raise KeyError(f"bin {bin} not in table")
        return self.vectors[i, angle_index]


def steering_grid(geometry: ArrayGeometry, L: int, fs: float, bins, grid: DoaGrid) -> SteeringTable:
    bins = np.asarray(list(bins) if isinstance(bins, range) else bins, dtype=int)
    if bins.size == 0:
        raise ValueError("empty bin range")
    if bins.min() < 0 or bins.max() > L // 2:
        raise ValueError(f"bins must lie within [0, {L // 2}]")
    delay = tdoa(geometry, grid.angles) * fs  # (G, N)
    vectors = np.exp(-2j * np.pi * bins[:, None, None] * delay[None, :, :] / L)
    bins.setflags(write=False)
    vectors.setflags(write=False)
    return SteeringTable(bins, grid, vectors)
