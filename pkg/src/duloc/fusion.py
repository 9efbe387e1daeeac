"""Broadband incoherent fusion, peak picking and RMSE scoring."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BroadbandSpectrum:
    values: np.ndarray
    angles: np.ndarray
    beta: float
    bins: np.ndarray
    skipped_bins: int = 0


@dataclass(frozen=True)
class DoaEstimate:
    angles: np.ndarray
    peaks: np.ndarray


class PeakPickingError(ValueError):
    pass


def fuse(spectra: np.ndarray, angles, beta: float = 1.0, bins=None) -> BroadbandSpectrum:
    """Sum per-bin spectra, each divided by its own maximum raised to ``beta``.

    ``spectra`` has shape ``(B, G)``. Bins whose spectrum is identically zero
    are skipped and counted. Accumulation runs in ascending bin order.
    """
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    spectra = np.asarray(spectra, dtype=float)
    if spectra.ndim == 1:
        spectra = spectra[None]
    angles = np.asarray(angles, dtype=float)
    if spectra.shape[1] != angles.size:
        raise ValueError("spectra and grid disagree in length")
    if bins is None:
        bins = np.arange(spectra.shape[0])
    bins = np.asarray(list(bins) if isinstance(bins, range) else bins)
    order = np.argsort(bins, kind="stable")
    total = np.zeros(angles.size)
    skipped = 0
    for b in order:
        p = spectra[b]
        peak = p.max()
        if not peak > 0:
            skipped += 1
            continue
        total += p / peak**beta
    if skipped:
        log.info("fusion skipped %d bin(s) with an all-zero spectrum", skipped)
    return BroadbandSpectrum(total, angles, beta, bins, skipped)


def _local_maxima(p: np.ndarray) -> np.ndarray:
    # plateaus count once, at their leftmost sample; grid edges qualify
    n = p.size
    idx = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and p[j + 1] == p[i]:
            j += 1
        left_ok = i == 0 or p[i - 1] < p[i]
        right_ok = j == n - 1 or p[j + 1] < p[i]
        if left_ok and right_ok:
            idx.append(i)
        i = j + 1
    return np.asarray(idx, dtype=int)


def locate(spectrum: BroadbandSpectrum | np.ndarray, n_sources: int = 1,
           min_separation: float = 5.0, angles=None) -> DoaEstimate:
    """Pick ``n_sources`` DOAs from a broadband spectrum.

    One source: the global maximum, ties resolved toward the smallest angle.
    Several: greedy selection of the largest local maxima, each at least
    ``min_separation`` degrees from those already taken.
    """
    if isinstance(spectrum, BroadbandSpectrum):
        p, angles = spectrum.values, spectrum.angles
    else:
        p = np.asarray(spectrum, dtype=float)
        angles = np.asarray(angles, dtype=float)
    if n_sources < 1:
        raise ValueError("need at least one source")
    if n_sources == 1:
        i = int(np.argmax(p))
        return DoaEstimate(angles[[i]], p[[i]])
    if angles[-1] - angles[0] <= (n_sources - 1) * min_separation:
        raise ValueError("grid span too small for the requested separation")
    cand = _local_maxima(p)
    cand = cand[np.argsort(-p[cand], kind="stable")]
    taken: list[int] = []
    for i in cand:
        if all(abs(angles[i] - angles[j]) >= min_separation for j in taken):
            taken.append(int(i))
            if len(taken) == n_sources:
                break
    if len(taken) < n_sources:
        found = ", ".join(f"{angles[i]:g}" for i in taken) or "none"
        raise PeakPickingError(
            f"found {len(taken)} of {n_sources} separated peaks (at {found} deg)")
    taken.sort(key=lambda i: angles[i])
    return DoaEstimate(angles[taken], p[taken])


def match_estimates(estimates, truths) -> list[tuple[float, float]]:
    """Pair estimates with truths: both sorted ascending, then paired in order."""
    est = sorted(float(e) for e in estimates)
    tru = sorted(float(t) for t in truths)
    if len(est) != len(tru):
        raise ValueError(f"{len(est)} estimates vs {len(tru)} truths")
    return list(zip(est, tru))


def rmse(estimates, truths) -> float:
    """Root mean square angular error in degrees over matched pairs."""
    pairs = match_estimates(estimates, truths)
    if not pairs:
        raise ValueError("rmse of an empty set")
    err = np.array([e - t for e, t in pairs])
    return float(np.sqrt(np.mean(err**2)))
