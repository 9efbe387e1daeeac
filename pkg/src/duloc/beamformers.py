"""Narrowband spatial spectra: SRP, SRP-PHAT, DU, MVDR with diagonal loading, MUSIC.

All estimators take a stack of per-bin PSD matrices ``phi`` of shape
``(B, N, N)`` (a single ``(N, N)`` matrix also works) and steering vectors
of shape ``(B, G, N)`` (or ``(G, N)`` for a single bin), and return real
spectra of shape ``(B, G)``.

The DU spectrum is built from the trace and a quadratic form only; it never
touches the eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg

METHODS = ("srp", "srp-phat", "du", "du-sigma", "mvdr", "music")
WEIGHT_METHODS = ("conventional", "du", "mvdr", "music")

DEFAULT_DELTA = 1e-4
DEN_FLOOR = 1e-12
PHAT_EPS = 1e-15


class SingularSteeringError(ValueError):
    pass


@dataclass(frozen=True)
class NarrowbandSpectrum:
    """Per-bin spatial spectra, ``values[b, g]`` for bin index b and grid angle g."""

    values: np.ndarray
    method: str
    fallback: np.ndarray | None = None  # per-bin flag, du-sigma only


def _stack(phi, a):
    phi = np.asarray(phi)
    a = np.asarray(a)
    single = phi.ndim == 2
    if single:
        phi = phi[None]
    if a.ndim == 2:
        a = np.broadcast_to(a, (phi.shape[0],) + a.shape)
    return phi, a, single


def _out(values, single):
    return values[0] if single else values


def _traces(phi: np.ndarray) -> np.ndarray:
    return np.real(np.trace(phi, axis1=-2, axis2=-1))


def srp_spectrum(phi, a) -> np.ndarray:
    """Steered response power ``a^H phi a`` (the 1/N^2 factor is dropped)."""
    phi, a, single = _stack(phi, a)
    return _out(linalg.quadratic_form(phi, a), single)


def du_unload(phi) -> np.ndarray:
    """Diagonal unloading by the trace: ``tr(phi) I - phi``."""
    phi = np.asarray(phi)
    tr = _traces(phi)
    if np.any(tr == 0):
        raise ValueError("diagonal unloading of a zero matrix is undefined (trace is 0)")
    n = phi.shape[-1]
    return tr[..., None, None] * np.eye(n) - phi


def _reciprocal_spectrum(phi_reg, a, floor):
    den = linalg.quadratic_form(phi_reg, a)
    return 1.0 / np.maximum(den, floor[..., None])


def du_spectrum(phi, a) -> np.ndarray:
    """Pseudo-spectrum ``1 / a^H (tr(phi) I - phi) a``.

    The denominator is floored at ``1e-12 * tr * N`` so the exact null at a
    noise-free source direction gives a large finite peak. Bins with a zero
    matrix produce an all-zero spectrum.
    """
    phi, a, single = _stack(phi, a)
    n = phi.shape[-1]
    tr = _traces(phi)
    live = tr > 0
    out = np.zeros(a.shape[:-1])
    if np.any(live):
        reg = tr[live, None, None] * np.eye(n) - phi[live]
        out[live] = _reciprocal_spectrum(reg, a[live], DEN_FLOOR * tr[live] * n)
    return _out(out, single)


def du_noise_aware_spectrum(phi, sigma2: float, a) -> NarrowbandSpectrum:
    """DU with the known noise floor removed: ``[tr - (N-1) sigma2] I - phi``.

    Bins where ``tr <= (N-1) sigma2`` fall back to plain DU and are flagged.
    """
    if sigma2 < 0:
        raise ValueError(f"noise power must be non-negative, got {sigma2}")
    phi, a, single = _stack(phi, a)
    n = phi.shape[-1]
    if sigma2 == 0:
        vals = du_spectrum(phi, a)
        return NarrowbandSpectrum(_out(vals, single), "du-sigma",
                                  _out(np.zeros(phi.shape[0], dtype=bool), single))
    tr = _traces(phi)
    mu = tr - (n - 1) * sigma2
    fallback = ~(mu > 0)
    out = du_spectrum(phi, a)
    ok = ~fallback
    if np.any(ok):
        reg = mu[ok, None, None] * np.eye(n) - phi[ok]
        out[ok] = _reciprocal_spectrum(reg, a[ok], DEN_FLOOR * tr[ok] * n)
    return NarrowbandSpectrum(_out(out, single), "du-sigma", _out(fallback, single))


def dl_load(phi, delta: float = DEFAULT_DELTA, L: int = 2048):
    """Trace-proportional loading ``tr(phi) * delta / L``."""
    if not delta > 0:
        raise ValueError(f"loading constant must be positive, got {delta}")
    return linalg.trace(phi) * delta / L


def mvdr_dl_spectrum(phi, load, a) -> np.ndarray:
    """``1 / a^H (phi + load I)^-1 a``; ``load`` is a scalar or one value per bin."""
    phi, a, single = _stack(phi, a)
    load = np.broadcast_to(np.asarray(load, dtype=float), phi.shape[:1])
    if np.any(load <= 0):
        raise ValueError("diagonal load must be positive")
    inv = linalg.regularized_inverse(phi, load)
    den = linalg.quadratic_form(inv, a)
    return _out(1.0 / den, single)


def noise_projector(phi, n_sources: int) -> np.ndarray:
    """``U_v U_v^H`` built from the ``N - S`` trailing eigenvectors of ``phi``."""
    n = np.shape(phi)[-1]
    if not 1 <= n_sources < n:
        raise ValueError(f"source count must satisfy 1 <= S < N={n}, got {n_sources}")
    uv = linalg.hermitian_eig(phi).eigenvectors[..., n_sources:]
    return np.matmul(uv, np.conj(np.swapaxes(uv, -1, -2)))


def music_spectrum(phi, n_sources: int, a) -> np.ndarray:
    phi, a, single = _stack(phi, a)
    n = phi.shape[-1]
    proj = noise_projector(phi, n_sources)
    floor = np.full(phi.shape[0], DEN_FLOOR * n)
    return _out(_reciprocal_spectrum(proj, a, floor), single)


def phase_normalize(m: np.ndarray) -> np.ndarray:
    """Divide every entry by its modulus; entries below 1e-15 become 0."""
    m = np.asarray(m)
    mag = np.abs(m)
    keep = mag >= PHAT_EPS
    return np.where(keep, m / np.where(keep, mag, 1.0), 0.0)


def srp_phat_spectrum(phi, a) -> np.ndarray:
    """SRP on the phase-only (coherence-style) PSD matrix."""
    phi, a, single = _stack(phi, a)
    return _out(linalg.quadratic_form(phase_normalize(phi), a), single)


def regularized_matrix(method: str, phi, *, load=None, n_sources=None) -> np.ndarray:
    """The matrix R whose reciprocal quadratic form gives the method's spectrum."""
    if method == "du":
        return du_unload(phi)
    if method == "mvdr":
        if load is None:
            raise ValueError("mvdr needs a diagonal load")
        return linalg.regularized_inverse(phi, load)
    if method == "music":
        if n_sources is None:
            raise ValueError("music needs a source count")
        return noise_projector(phi, n_sources)
    raise ValueError(f"no regularized matrix for method {method!r}")


def beam_weights(method: str, phi, a, *, load=None, n_sources=None) -> np.ndarray:
    """Distortionless weights ``R a / (a^H R a)`` for each steering vector in ``a``.

    ``phi`` is a single ``(N, N)`` matrix and ``a`` has shape ``(G, N)``;
    returns ``(G, N)``. The conventional beamformer uses ``a / N``.
    """
    if method not in WEIGHT_METHODS:
        raise ValueError(f"unknown weighting method {method!r}; expected one of {WEIGHT_METHODS}")
    a = np.asarray(a)
    n = a.shape[-1]
    if method == "conventional":
        return a / n
    r = regularized_matrix(method, phi, load=load, n_sources=n_sources)
    ra = a @ r.T  # rows are R a
    den = np.real(np.sum(np.conj(a) * ra, axis=-1))
    bad = den <= DEN_FLOOR * linalg.trace(r)
    if np.any(bad):
        raise SingularSteeringError(
            f"{method} weights undefined at grid index {int(np.argmax(bad))}: "
            f"a^H R a = {den[bad][0]:.3e}")
    return ra / den[:, None]


def du_gain(n: int, snr: float) -> float:
    """Residual signal-subspace gain of trace unloading with white noise."""
    if n < 2 or snr < 0:
        raise ValueError("need N >= 2 and snr >= 0")
    return (n - 1) / (n * (snr + 1))


def two_source_gains(n: int, snr1: float, snr2: float) -> tuple[float, float]:
    if n < 3 or snr1 < 0 or snr2 < 0:
        raise ValueError("need N >= 3 and non-negative SNRs")
    den = n * (snr1 + snr2 + 1)
    return (n * snr2 + (n - 1)) / den, (n * snr1 + (n - 1)) / den


def narrowband_spectra(method: str, phi, a, *, delta: float = DEFAULT_DELTA, L: int = 2048,
                       n_sources: int = 1, sigma2: float | None = None) -> NarrowbandSpectrum:
    """Dispatch by CLI method name over a stack of bins.

    Bins whose PSD matrix has zero trace carry no information and get an
    all-zero spectrum for every method.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    phi = np.asarray(phi)
    a = np.asarray(a)
    live = _traces(phi) > 0
    values = np.zeros(a.shape[:-1])
    fallback = None
    if method == "du":
        values = du_spectrum(phi, a)
    elif method == "du-sigma":
        res = du_noise_aware_spectrum(phi, 0.0 if sigma2 is None else sigma2, a)
        values, fallback = res.values, res.fallback
    elif method == "srp":
        values = srp_spectrum(phi, a)
    elif method == "srp-phat":
        values = srp_phat_spectrum(phi, a)
    elif np.any(live):
        if method == "mvdr":
            load = dl_load(phi[live], delta, L)
            values[live] = mvdr_dl_spectrum(phi[live], load, a[live])
        else:
            values[live] = music_spectrum(phi[live], n_sources, a[live])
    return NarrowbandSpectrum(values, method, fallback)
