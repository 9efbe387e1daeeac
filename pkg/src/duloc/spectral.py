"""STFT front end and snapshot-averaged PSD matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window


@dataclass(frozen=True)
class MultichannelSignal:
    """Real sensor signals, shape ``(N, T)``."""

    data: np.ndarray
    fs: float

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.ndim == 1:
            d = d[None, :]
        if d.ndim != 2:
            raise ValueError("signal data must be 2-D (channels, samples)")
        if not self.fs > 0:
            raise ValueError(f"sample rate must be positive, got {self.fs}")
        object.__setattr__(self, "data", d)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SnapshotSpectra:
    """STFT coefficients ``x[k, f, n]`` for frames k, bins 0..L/2 and sensors n."""

    x: np.ndarray
    L: int
    hop: int
    fs: float

    @property
    def n_frames(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class PsdMatrix:
    """Per-bin PSD estimates ``phi[b]`` for the bins listed in ``bins``."""

    phi: np.ndarray
    bins: np.ndarray
    M: int
    sigma2: float | None = None


def stft(signal: MultichannelSignal, L: int = 2048, hop: int = 1536,
         window: str = "hann") -> SnapshotSpectra:
    """Frame ``k`` covers samples ``[k*hop, k*hop + L)``; only complete frames are kept.

    ``window`` is any name accepted by :func:`scipy.signal.get_window`
    (periodic form); ``"rectangular"`` is an alias for ``"boxcar"``.
    """
    if L < 1 or L & (L - 1):
        raise ValueError(f"fft size must be a power of two, got {L}")
    if hop < 1:
        raise ValueError("hop must be at least 1")
    T = len(signal)
    if T < L:
        raise ValueError(f"signal of {T} samples is shorter than one frame ({L})")
    name = "boxcar" if window in ("rect", "rectangular") else window
    win = get_window(name, L, fftbins=True)
    n_frames = (T - L) // hop + 1
    idx = np.arange(L)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = signal.data[:, idx] * win  # (N, K, L)
    spec = np.fft.rfft(frames, axis=-1)  # (N, K, L/2+1)
    return SnapshotSpectra(np.ascontiguousarray(spec.transpose(1, 2, 0)), L, hop, signal.fs)


def bin_range(fs: float, L: int, f_min: float, f_max: float) -> range:
    if not 0 <= f_min < f_max <= fs / 2:
        raise ValueError(f"need 0 <= f_min < f_max <= fs/2, got {f_min}, {f_max}")
    lo = math.ceil(f_min * L / fs)
    hi = math.floor(f_max * L / fs)
    if hi < lo:
        raise ValueError(f"no DFT bin centre in [{f_min}, {f_max}] Hz")
    return range(lo, hi + 1)


def estimate_psd(snapshots: SnapshotSpectra, end_frame: int, M: int, bins=None,
                 sigma2: float | None = None, phase_only: bool = False) -> PsdMatrix:
    """Average of ``x x^H`` over frames ``end_frame-M+1 .. end_frame``.

    With ``phase_only`` every snapshot entry is reduced to unit modulus
    before averaging (entries below 1e-15 are zeroed).
    """
    if M < 1:
        raise ValueError("snapshot count M must be at least 1")
    if end_frame >= snapshots.n_frames:
        raise ValueError(f"end frame {end_frame} beyond the {snapshots.n_frames} available frames")
    if end_frame < M - 1:
        raise ValueError(
            f"need {M} frames ending at frame {end_frame}: short by {M - 1 - end_frame}")
    if bins is None:
        bins = np.arange(snapshots.x.shape[1])
    bins = np.asarray(list(bins) if isinstance(bins, range) else bins, dtype=int)
    x = snapshots.x[end_frame - M + 1:end_frame + 1][:, bins, :]  # (M, B, N)
    if phase_only:
        mag = np.abs(x)
        keep = mag >= 1e-15
        x = np.where(keep, x / np.where(keep, mag, 1.0), 0.0)
    phi = np.einsum("kbi,kbj->bij", x, np.conj(x)) / M
    return PsdMatrix(phi, bins, M, sigma2)
