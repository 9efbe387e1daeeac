"""Small complex linear algebra kernel used by the beamformers.

Every function accepts either a single ``(N, N)`` matrix or a stack of them
with shape ``(..., N, N)``; stacks are processed in one vectorised pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_RTOL = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
ILL_CONDITIONED_RTOL = 1e-12


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class IllConditionedError(ValueError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def check_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate ``m`` as a (stack of) Hermitian matrices and return it as complex128.

    Raises NotHermitianError naming the worst offending entry pair.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2] or m.shape[-1] < 1:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    scale = np.abs(m).max(axis=(-2, -1), keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    asym = np.abs(m - np.conj(np.swapaxes(m, -1, -2))) / scale
    worst = float(asym.max()) if asym.size else 0.0
    if worst > rtol:
        idx = np.unravel_index(int(np.argmax(asym)), asym.shape)
        i, j = idx[-2], idx[-1]
        raise NotHermitianError(
            f"matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) "
            f"differ by {worst:.3e} relative (batch index {idx[:-2]})"
        )
    return m


def trace(m: np.ndarray) -> np.ndarray | float:
    """Real part of the diagonal sum."""
    t = np.real(np.trace(np.asarray(m), axis1=-2, axis2=-1))
    return float(t) if np.ndim(t) == 0 else t


def quadratic_form(m: np.ndarray, v: np.ndarray) -> np.ndarray | float:
    """Return ``real(v^H m v)``.

    ``v`` may carry extra leading axes relative to ``m``: with ``m`` of shape
    ``(B, N, N)`` and ``v`` of shape ``(B, G, N)`` the result has shape
    ``(B, G)``, one form per (matrix, vector) pair.
    """
    m = np.asarray(m)
    v = np.asarray(v)
    n = m.shape[-1]
    if v.shape[-1] != n:
        raise ValueError(f"dimension mismatch: vector length {v.shape[-1]} vs matrix order {n}")
    mv = np.matmul(v, np.swapaxes(m, -1, -2))
    q = np.real(np.sum(np.conj(v) * mv, axis=-1))
    return float(q) if np.ndim(q) == 0 else q


def _off_and_diag_norms(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.diagonal(a, axis1=-2, axis2=-1)
    diag_norm = np.sqrt(np.sum(np.abs(d) ** 2, axis=-1))
    n = a.shape[-1]
    off = a[..., ~np.eye(n, dtype=bool)]
    off_norm = np.sqrt(np.sum(np.abs(off) ** 2, axis=-1))
    return off_norm, diag_norm


def _fix_phase(u: np.ndarray) -> np.ndarray:
    # first component above the noise floor of each column made real-positive
    mag = np.abs(u)
    floor = 1e-12 * mag.max(axis=-2, keepdims=True)
    first = np.argmax(mag > floor, axis=-2)
    lead = np.take_along_axis(u, first[..., None, :], axis=-2)
    lead_mag = np.abs(lead)
    phase = np.where(lead_mag > 0, np.conj(lead) / np.where(lead_mag > 0, lead_mag, 1.0), 1.0)
    return u * phase


def hermitian_eig(m: np.ndarray, *, tol: float = JACOBI_TOL,
                  max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenSystem:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix or stack.

    All matrices of a stack are rotated together on the same (p, q) schedule,
    so the sweep order (and hence the output) is fixed for a given input.
    Eigenvalues come back descending; each eigenvector column has its first
    significant component real and positive.
    """
    a = check_hermitian(m).copy()
    n = a.shape[-1]
    batch_shape = a.shape[:-2]
    a = a.reshape((-1, n, n))
    # exact Hermitian symmetrisation before rotating
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()

    off, diag = _off_and_diag_norms(a)
    sweeps = 0
    while np.any(off > tol * diag):
        if sweeps >= max_sweeps:
            residual = float(np.max(off / np.where(diag > 0, diag, 1.0)))
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(relative off-diagonal residual {residual:.3e})", residual)
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q)
        sweeps += 1
        off, diag = _off_and_diag_norms(a)

    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    v = _fix_phase(v)
    return EigenSystem(w.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n)))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate entry (p, q) of every matrix in ``a`` in place; accumulate into ``v``."""
    apq = a[:, p, q]
    r = np.abs(apq)
    active = r > 0
    if not np.any(active):
        return
    safe_r = np.where(active, r, 1.0)
    ph = np.where(active, apq / safe_r, 1.0)  # e^{i phi}
    app = np.real(a[:, p, p])
    aqq = np.real(a[:, q, q])
    zeta = (aqq - app) / (2.0 * safe_r)
    t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # rotation J: J_pp = J_qq = c, J_pq = s e^{i phi}, J_qp = -s e^{-i phi}
    sp = (s * ph)[:, None]
    sm = (s * np.conj(ph))[:, None]
    cc = c[:, None]

    col_p = a[:, :, p].copy()
    col_q = a[:, :, q]
    a[:, :, p] = cc * col_p - sm * col_q
    a[:, :, q] = sp * col_p + cc * col_q

    row_p = a[:, p, :].copy()
    row_q = a[:, q, :]
    a[:, p, :] = cc * row_p - np.conj(sm) * row_q
    a[:, q, :] = np.conj(sp) * row_p + cc * row_q

    a[:, p, q] = 0.0
    a[:, q, p] = 0.0
    a[:, p, p] = np.real(a[:, p, p])
    a[:, q, q] = np.real(a[:, q, q])

    vp = v[:, :, p].copy()
    vq = v[:, :, q]
    v[:, :, p] = cc * vp - sm * vq
    v[:, :, q] = sp * vp + cc * vq


def regularized_inverse(m: np.ndarray, load: float | np.ndarray = 0.0) -> np.ndarray:
    """Inverse of ``m + load*I`` through the spectral decomposition of ``m``.

    ``load`` may be a scalar or one value per matrix of a stack.
    """
    es = hermitian_eig(m)
    load = np.asarray(load, dtype=float)
    shifted = es.eigenvalues + load[..., None]
    smallest = shifted.min(axis=-1)
    largest = np.abs(shifted).max(axis=-1)
    bad = smallest <= ILL_CONDITIONED_RTOL * largest
    if np.any(bad):
        k = np.unravel_index(int(np.argmax(bad)), np.shape(bad)) if np.ndim(bad) else ()
        lo = float(np.asarray(smallest)[k])
        hi = float(np.asarray(largest)[k])
        raise IllConditionedError(
            f"m + load*I is ill-conditioned: smallest shifted eigenvalue {lo:.3e} "
            f"vs largest {hi:.3e} (ratio below {ILL_CONDITIONED_RTOL:g})")
    u = es.eigenvectors
    return np.matmul(u * (1.0 / shifted)[..., None, :], np.conj(np.swapaxes(u, -1, -2)))
