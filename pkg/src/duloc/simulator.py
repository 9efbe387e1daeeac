"""Free-field multichannel scene synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .array import ArrayGeometry, tdoa
from .spectral import MultichannelSignal

SOURCE_KINDS = ("sinusoid", "white_broadband", "bandlimited")


@dataclass(frozen=True)
class SourceSpec:
    """One far-field source.

    ``am_rate`` (Hz) applies a raised-cosine amplitude modulation to a
    bandlimited source, a stationarity-breaking stand-in for speech.
    """

    kind: str
    doa: float
    power: float = 1.0
    duration: float = 1.0
    frequency: float | None = None
    f_lo: float | None = None
    f_hi: float | None = None
    am_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {SOURCE_KINDS}")
        if not self.duration > 0:
            raise ValueError("source duration must be positive")
        if not -90 <= self.doa <= 90:
            raise ValueError(f"source DOA must lie within [-90, 90], got {self.doa}")
        if not self.power > 0:
            raise ValueError("source power must be positive")
        if self.kind == "sinusoid" and not (self.frequency and self.frequency > 0):
            raise ValueError("a sinusoid needs a positive frequency")
        if self.kind == "bandlimited":
            if self.f_lo is None or self.f_hi is None or not 0 <= self.f_lo < self.f_hi:
                raise ValueError("a bandlimited source needs 0 <= f_lo < f_hi")
        if self.am_rate < 0:
            raise ValueError("am_rate must be non-negative")

    @property
    def highest_frequency(self) -> float:
        if self.kind == "sinusoid":
            return float(self.frequency)
        if self.kind == "bandlimited":
            return float(self.f_hi)
        return 0.0


def generate_source(spec: SourceSpec, fs: float, seed: int | np.random.SeedSequence = 0) -> np.ndarray:
    if fs <= 2 * spec.highest_frequency:
        raise ValueError(
            f"fs={fs} Hz cannot represent {spec.highest_frequency} Hz without aliasing")
    n = int(round(spec.duration * fs))
    if spec.kind == "sinusoid":
        t = np.arange(n) / fs
        return math.sqrt(2 * spec.power) * np.sin(2 * np.pi * spec.frequency * t)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    if spec.kind == "bandlimited":
        X = np.fft.rfft(x)
        f = np.fft.rfftfreq(n, 1 / fs)
        X[(f < spec.f_lo) | (f > spec.f_hi)] = 0.0
        x = np.fft.irfft(X, n)
        if spec.am_rate > 0:
            t = np.arange(n) / fs
            x = x * (0.5 - 0.5 * np.cos(2 * np.pi * spec.am_rate * t))
    return x * math.sqrt(spec.power / np.mean(x**2))


def max_delay_samples(geometry: ArrayGeometry, fs: float) -> int:
    """Largest |TDOA| over all directions, rounded up to whole samples."""
    return math.ceil(max(abs(d) for d in geometry.spacings) * fs / geometry.c)


def propagate_freefield(samples: np.ndarray, geometry: ArrayGeometry, theta: float,
                        fs: float, trim: int | None = None) -> MultichannelSignal:
    """Delay the source by each sensor's TDOA using an exact FFT phase shift.

    The shift is circular over the whole signal, so ``trim`` samples are cut
    from both ends (default: the largest delay of this direction, rounded up).
    """
    x = np.asarray(samples, dtype=float)
    T = x.size
    delays = tdoa(geometry, theta) * fs
    if trim is None:
        trim = math.ceil(np.max(np.abs(delays)))
    if 2 * trim >= T:
        raise ValueError("signal too short for the requested edge trim")
    X = np.fft.rfft(x)
    k = np.arange(X.size)
    out = np.empty((geometry.n_sensors, T))
    for n, d in enumerate(delays):
        if d == 0:
            out[n] = x
        else:
            out[n] = np.fft.irfft(X * np.exp(-2j * np.pi * k * d / T), T)
    return MultichannelSignal(out[:, trim:T - trim] if trim else out, fs)


def mix(scenes: list[MultichannelSignal]) -> MultichannelSignal:
    if not scenes:
        raise ValueError("nothing to mix")
    first = scenes[0]
    for s in scenes[1:]:
        if s.data.shape != first.data.shape or s.fs != first.fs:
            raise ValueError(
                f"cannot mix {s.data.shape}@{s.fs} Hz with {first.data.shape}@{first.fs} Hz")
    if len(scenes) == 1:
        return first
    return MultichannelSignal(np.sum([s.data for s in scenes], axis=0), first.fs)


def add_noise(signal: MultichannelSignal, snr_db: float | None,
              seed: int | np.random.SeedSequence = 0) -> tuple[MultichannelSignal, float]:
    """Add independent white Gaussian noise to each channel.

    The noise variance is set from the mean-square of channel 1. ``snr_db``
    of ``None`` or ``+inf`` leaves the signal untouched and returns 0.
    """
    if snr_db is None or snr_db == math.inf:
        return signal, 0.0
    p_ref = float(np.mean(signal.data[0] ** 2))
    if p_ref == 0:
        raise ValueError("cannot set an SNR on a zero-power signal")
    sigma2 = p_ref / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(signal.data.shape) * math.sqrt(sigma2)
    return MultichannelSignal(signal.data + noise, signal.fs), sigma2


def simulate_scene(sources: list[SourceSpec], geometry: ArrayGeometry, fs: float,
                   snr_db: float | None, seed: int = 0) -> tuple[MultichannelSignal, float]:
    """Sources propagated, mixed and corrupted; returns the scene and noise variance.

    Each source is synthesised with padding so that, after the edge trim, the
    scene holds exactly ``round(duration * fs)`` samples (shortest source wins).
    Source ``i`` draws from ``SeedSequence([seed, 1, i])`` and the noise from
    ``SeedSequence([seed, 2])``, so each part is reproducible on its own.
    """
    if not sources:
        raise ValueError("a scene needs at least one source")
    trim = max_delay_samples(geometry, fs)
    n = min(int(round(spec.duration * fs)) for spec in sources)
    parts = []
    for i, spec in enumerate(sources):
        padded = replace(spec, duration=spec.duration + 2 * trim / fs)
        s = generate_source(padded, fs, seed=np.random.SeedSequence([seed, 1, i]))
        p = propagate_freefield(s, geometry, spec.doa, fs, trim=trim)
        parts.append(MultichannelSignal(p.data[:, :n], fs))
    return add_noise(mix(parts), snr_db, seed=np.random.SeedSequence([seed, 2]))
