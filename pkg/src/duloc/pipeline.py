"""Experiment orchestration shared by the CLI: localization, beampatterns, sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from . import beamformers as bf
from .array import steering_grid, steering_vector
from .config import ExperimentConfig
from .fusion import DoaEstimate, fuse, locate, match_estimates
from .simulator import SourceSpec, simulate_scene
from .spectral import MultichannelSignal, bin_range, estimate_psd, stft

log = logging.getLogger(__name__)


class DataError(RuntimeError):
    """Input data cannot support the requested processing (exit status 3)."""


class TrialError(DataError):
    def __init__(self, seed: int, cause: Exception):
        super().__init__(f"trial with seed {seed} failed: {cause}")
        self.seed = seed


@dataclass
class LocalizationResult:
    method: str
    estimates: list[DoaEstimate]  # one per PSD window
    angles: np.ndarray
    spectrum: np.ndarray  # fused spectrum averaged over windows
    skipped_bins: int = 0
    fallback_bins: int = 0


def _window_name(name: str) -> str:
    return "boxcar" if name in ("rect", "rectangular") else name


def stft_noise_power(sigma2: float, cfg: ExperimentConfig) -> float:
    """Per-bin noise power of white noise with variance ``sigma2`` after windowed DFT."""
    win = get_window(_window_name(cfg.window), cfg.L, fftbins=True)
    return float(sigma2 * np.sum(win**2))


def window_ends(n_frames: int, M: int) -> list[int]:
    """End frames of consecutive, non-overlapping blocks of ``M`` frames."""
    if n_frames < M:
        raise DataError(f"{n_frames} STFT frame(s) available, {M} snapshots requested")
    return list(range(M - 1, n_frames, M))


def gate_bins(phi: np.ndarray, gate_db: float | None) -> np.ndarray:
    """Zero the bins whose trace lies more than ``-gate_db`` dB below the strongest bin."""
    if gate_db is None:
        return phi
    tr = np.real(np.trace(phi, axis1=-2, axis2=-1))
    quiet = tr < tr.max() * 10 ** (gate_db / 10)
    if not np.any(quiet):
        return phi
    phi = phi.copy()
    phi[quiet] = 0.0
    return phi


def _resolve_sigma2(cfg: ExperimentConfig, truth_sigma2: float | None) -> float | None:
    if cfg.sigma2 == "none":
        return None
    if cfg.sigma2 == "truth":
        return truth_sigma2
    return float(cfg.sigma2)


def localize_methods(signal: MultichannelSignal, cfg: ExperimentConfig, methods,
                     truth_sigma2: float | None = None, M: int | None = None
                     ) -> dict[str, LocalizationResult]:
    """Run several methods over the same STFT and PSD windows."""
    geometry = cfg.geometry()
    if signal.n_channels != geometry.n_sensors:
        raise ValueError(
            f"signal has {signal.n_channels} channels, geometry has {geometry.n_sensors}")
    M = cfg.snapshots if M is None else M
    if len(signal) < cfg.L:
        raise DataError(f"signal of {len(signal)} samples is shorter than one frame ({cfg.L})")
    X = stft(signal, cfg.L, cfg.hop, cfg.window)
    bins = bin_range(signal.fs, cfg.L, cfg.f_min, cfg.f_max)
    grid = cfg.grid()
    table = steering_grid(geometry, cfg.L, signal.fs, bins, grid)
    ends = window_ends(X.n_frames, M)

    sigma2 = _resolve_sigma2(cfg, truth_sigma2)
    if "du-sigma" in methods and sigma2 is None:
        log.warning("du-sigma without a noise power: using plain DU")
    sigma2_bin = stft_noise_power(sigma2, cfg) if sigma2 else 0.0

    acc = {m: [] for m in methods}
    fused_sum = {m: np.zeros(len(grid)) for m in methods}
    skipped = {m: 0 for m in methods}
    fallback = {m: 0 for m in methods}
    for end in ends:
        psd = estimate_psd(X, end, M, bins)
        phi = gate_bins(psd.phi, cfg.bin_gate_db)
        phat_psd = None
        for m in methods:
            if m == "srp-phat" and cfg.phat == "snapshot":
                if phat_psd is None:
                    phat_psd = estimate_psd(X, end, M, bins, phase_only=True)
                    phat_psd.phi[np.all(phi == 0, axis=(-2, -1))] = 0.0
                values = bf.srp_spectrum(phat_psd.phi, table.vectors)
            else:
                nb = bf.narrowband_spectra(m, phi, table.vectors, delta=cfg.delta,
                                           L=cfg.L, n_sources=cfg.n_sources, sigma2=sigma2_bin)
                values = nb.values
                if nb.fallback is not None:
                    fallback[m] += int(np.sum(nb.fallback))
            bb = fuse(values, grid.angles, cfg.beta, table.bins)
            skipped[m] += bb.skipped_bins
            fused_sum[m] += bb.values
            acc[m].append(locate(bb, cfg.n_sources, cfg.min_separation))
    return {
        m: LocalizationResult(m, acc[m], grid.angles, fused_sum[m] / len(ends),
                              skipped[m], fallback[m])
        for m in methods
    }


def localize(signal: MultichannelSignal, cfg: ExperimentConfig, method: str | None = None,
             truth_sigma2: float | None = None) -> LocalizationResult:
    method = cfg.method if method is None else method
    return localize_methods(signal, cfg, [method], truth_sigma2)[method]


def scene_for(cfg: ExperimentConfig, seed: int, snr_db=...):
    snr = cfg.snr_db if snr_db is ... else snr_db
    return simulate_scene(list(cfg.sources), cfg.geometry(), cfg.fs, snr, seed)


def beampattern(cfg: ExperimentConfig, freq: float, theta0: float,
                methods=("conventional", "du", "mvdr", "music")) -> tuple[np.ndarray, dict]:
    """Look-direction scans ``|w(theta)^H a(theta0)|^2`` for a sinusoid from ``theta0``.

    The PSD matrix comes from a simulated sinusoid at ``freq`` (power 1, the
    config's SNR and snapshot count) at the DFT bin nearest ``freq``.
    Patterns are returned in dB, each normalised to its own maximum.
    """
    if not cfg.f_min <= freq <= cfg.f_max:
        raise ValueError(f"frequency {freq} Hz outside [{cfg.f_min}, {cfg.f_max}] Hz")
    geometry = cfg.geometry()
    src = SourceSpec("sinusoid", theta0, power=1.0, duration=cfg.duration, frequency=freq)
    signal, _ = simulate_scene([src], geometry, cfg.fs, cfg.snr_db, cfg.seed)
    X = stft(signal, cfg.L, cfg.hop, cfg.window)
    k = int(round(freq * cfg.L / cfg.fs))
    phi = estimate_psd(X, window_ends(X.n_frames, cfg.snapshots)[0], cfg.snapshots, [k]).phi[0]
    grid = cfg.grid()
    a = steering_vector(geometry, k, cfg.L, cfg.fs, grid.angles)
    a0 = steering_vector(geometry, k, cfg.L, cfg.fs, theta0)
    load = bf.dl_load(phi, cfg.delta, cfg.L)
    out = {}
    for m in methods:
        w = bf.beam_weights(m, phi, a, load=load, n_sources=cfg.n_sources)
        p = np.abs(np.conj(w) @ a0) ** 2
        out[m] = 10 * np.log10(np.maximum(p / p.max(), 1e-30))
    return grid.angles, out


def _trial(cfg: ExperimentConfig, trial: int) -> dict:
    """Pairs (estimate, truth) per (axis value, method) for one seeded trial."""
    seed = cfg.seed + trial
    truths = [s.doa for s in cfg.sources]
    out = {}
    try:
        if cfg.sweep_axis == "snapshots":
            signal, s2 = scene_for(cfg, seed)
        for v in cfg.sweep_values:
            if cfg.sweep_axis == "snr_db":
                signal, s2 = scene_for(cfg, seed, float(v))
                res = localize_methods(signal, cfg, cfg.methods, s2)
            else:
                res = localize_methods(signal, cfg, cfg.methods, s2, M=int(v))
            for m, r in res.items():
                pairs = []
                for est in r.estimates:
                    pairs += match_estimates(est.angles, truths)
                out[(v, m)] = pairs
    except Exception as e:  # noqa: BLE001 - any failure aborts the sweep with its seed
        raise TrialError(seed, e) from e
    return out


def _trial_star(args):
    return _trial(*args)


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[tuple]:
    """Monte-Carlo sweep; trial ``i`` uses seed ``cfg.seed + i``.

    Returns rows ``(axis_value, method, rmse_deg, trials)`` in axis-then-method
    order, independent of ``workers``.
    """
    if not cfg.sources:
        raise ValueError("a sweep needs at least one source")
    tasks = [(cfg, i) for i in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_trial_star, tasks))
    else:
        results = [_trial_star(t) for t in tasks]
    rows = []
    for v in cfg.sweep_values:
        for m in cfg.methods:
            errs = np.array([e - t for r in results for e, t in r[(v, m)]])
            rows.append((v, m, float(np.sqrt(np.mean(errs**2))), cfg.trials))
    return rows
