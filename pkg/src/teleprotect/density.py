"""Validated two-qubit density matrices and post-selected outcomes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cmatrix import HERMITIAN_TOL, PSD_CLAMP, herm_eigvals, is_hermitian

PROB_FLOOR = 1e-12


class StateError(ValueError):
    """A matrix failed the density-matrix checks."""


class DegenerateNormalizationError(StateError):
    """A selective operation left (almost) no probability to renormalize."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 4x4 matrix."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.shape != (4, 4):
            raise StateError(f"two-qubit state must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("state has non-finite entries")
        if not is_hermitian(m, HERMITIAN_TOL):
            raise StateError("state is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > HERMITIAN_TOL:
            raise StateError(f"state trace is {tr!r}, not 1")
        lo = herm_eigvals(m)[-1]
        if lo < -PSD_CLAMP:
            raise StateError(f"state has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def __getitem__(self, idx):
        return self.mat[idx]

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.mat - np.asarray(other))) <= atol)


@dataclass(frozen=True)
class SelectiveOutcome:
    state: DensityMatrix
    probability: float

    def __post_init__(self):
        if not -1e-12 <= self.probability <= 1.0 + 1e-12:
            raise StateError(f"probability {self.probability!r} outside [0, 1]")


def as_matrix(rho) -> np.ndarray:
    """Raw 4x4 array behind a DensityMatrix (or any array-like)."""
    if isinstance(rho, DensityMatrix):
        return rho.mat
    return np.asarray(rho, dtype=complex)
