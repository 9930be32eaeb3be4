"""Dense complex linear algebra for one- and two-qubit operators.

Matrices are plain ``numpy`` complex arrays. Qubit 1 is the slow tensor
factor, so the two-qubit basis order is |00>, |01>, |10>, |11>.

The Hermitian eigensolver is a cyclic Jacobi method that works on stacks of
matrices, which lets the optimizers evaluate a whole scan in one call.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_DIM = 8
HERMITIAN_TOL = 1e-10
PSD_CLAMP = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class LinAlgError(ValueError):
    """Raised on shape mismatches or inputs outside an operation's domain."""


class EigDecomp(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def cmat(data) -> np.ndarray:
    """Build a validated complex matrix (at most 8x8, finite entries)."""
    a = np.array(data, dtype=complex)
    if a.ndim != 2:
        raise LinAlgError(f"expected a 2-d matrix, got shape {a.shape}")
    rows, cols = a.shape
    if not (1 <= rows <= MAX_DIM and 1 <= cols <= MAX_DIM):
        raise LinAlgError(f"matrix shape {a.shape} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise LinAlgError("matrix has non-finite entries")
    return a


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] != b.shape[-2]:
        raise LinAlgError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, ``a`` indexing the slow (first-qubit) factor."""
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > MAX_DIM or cols > MAX_DIM:
        raise LinAlgError(f"kron result {rows}x{cols} exceeds {MAX_DIM}x{MAX_DIM}")
    return np.kron(a, b)


def partial_trace(rho: np.ndarray, keep: int) -> np.ndarray:
    """Reduce a 4x4 two-qubit operator to the qubit ``keep`` (1 or 2).

    Leading batch dimensions are carried through unchanged.
    """
    if rho.shape[-2:] != (4, 4):
        raise LinAlgError(f"partial_trace needs a 4x4 operator, got {rho.shape}")
    t = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    if keep == 1:
        return np.einsum("...ijkj->...ik", t)
    if keep == 2:
        return np.einsum("...ijil->...jl", t)
    raise LinAlgError(f"qubit index must be 1 or 2, got {keep!r}")


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(h - dagger(h)), initial=0.0) <= tol)


def _offdiag_norm(a: np.ndarray) -> np.ndarray:
    """Off-diagonal Frobenius norm over the leading (n, n) axes of an (n, n, N) stack."""
    n = a.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(a[mask]) ** 2, axis=0))


def _jacobi_sweep(a: np.ndarray, v: np.ndarray) -> None:
    """One cyclic sweep, in place, on (n, n, N) stacks (batch axis last)."""
    n = a.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            b = a[p, q]
            mag = np.abs(b)
            active = mag > 1e-300
            safe = np.where(active, mag, 1.0)
            e = np.where(active, b / safe, 1.0)
            tau = (a[q, q].real - a[p, p].real) / (2.0 * safe)
            t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            se = t * c * e
            sec = np.conj(se)

            # A <- A V, then A <- V^dag A, then E <- E V
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * cp - sec * cq
            a[:, q] = se * cp + c * cq
            rp, rq = a[p].copy(), a[q].copy()
            a[p] = c * rp - se * rq
            a[q] = sec * rp + c * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - sec * vq
            v[:, q] = se * vp + c * vq


def herm_eig(h: np.ndarray) -> EigDecomp:
    """Eigendecomposition of a Hermitian matrix (or stack of them).

    Cyclic Jacobi: each sweep zeroes every off-diagonal pair once with a
    complex Givens rotation. Iteration stops once the off-diagonal Frobenius
    norm of every matrix in the stack is below ``JACOBI_TOL`` (relative to
    the matrix norm when that exceeds 1).

    Returns eigenvalues sorted descending and eigenvectors as columns.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise LinAlgError(f"herm_eig needs square input, got {h.shape}")
    if not is_hermitian(h):
        raise LinAlgError("herm_eig input is not Hermitian")

    batch = h.shape[:-2]
    n = h.shape[-1]
    flat = h.reshape((-1, n, n))
    a = np.ascontiguousarray(np.moveaxis(0.5 * (flat + dagger(flat)), 0, -1))
    v = np.broadcast_to(np.eye(n, dtype=complex)[..., None], a.shape).copy()
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(0, 1))))

    for _ in range(JACOBI_MAX_SWEEPS):
        # matrices that have converged are left untouched, so each result is
        # independent of what else shares the stack
        pending = np.flatnonzero(_offdiag_norm(a) > JACOBI_TOL * scale)
        if pending.size == 0:
            break
        if pending.size == a.shape[-1]:
            _jacobi_sweep(a, v)
        else:
            sub_a, sub_v = a[..., pending], v[..., pending]
            _jacobi_sweep(sub_a, sub_v)
            a[..., pending], v[..., pending] = sub_a, sub_v

    evals = np.einsum("ii...->...i", a).real
    vecs = np.moveaxis(v, -1, 0)
    order = np.argsort(-evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)
    return EigDecomp(evals.reshape(batch + (n,)), vecs.reshape(batch + (n, n)))


def herm_eigvals(h: np.ndarray) -> np.ndarray:
    return herm_eig(h).eigenvalues


def psd_sqrt(h: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in [-1e-10, 0) are treated as round-off and clamped to zero.
    """
    evals, vecs = herm_eig(h)
    if np.any(evals < -PSD_CLAMP):
        raise LinAlgError(f"matrix is not PSD (min eigenvalue {evals.min():.3e})")
    root = np.sqrt(np.clip(evals, 0.0, None))
    return (vecs * root[..., None, :]) @ dagger(vecs)
