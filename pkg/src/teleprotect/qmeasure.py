"""Correlation quantifiers for two-qubit states.

Concurrence, fully entangled fraction (FEF), teleportation fidelity (TF),
von Neumann entropies (in bits), mutual information and the one-way
classical correlation obtained by projective measurement of qubit 2.

Functions taking ``rho`` accept a :class:`DensityMatrix` or a raw 4x4 array.
The ``*_stack`` helpers evaluate many states at once for the optimizers.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from math import pi

import numpy as np
from scipy.optimize import minimize

from .cmatrix import SX, SY, SZ, I2, dagger, herm_eig, herm_eigvals, partial_trace
from .density import PROB_FLOOR, as_matrix

_SQ2 = np.sqrt(2.0)
YY = np.kron(SY, SY)

# columns: Phi+, i Phi-, i Psi+, Psi- ; real combinations are exactly the MES
MAGIC = np.array(
    [
        [1, 1j, 0, 0],
        [0, 0, 1j, 1],
        [0, 0, 1j, -1],
        [1, -1j, 0, 0],
    ],
    dtype=complex,
) / _SQ2

CC_GRID = (64, 128)
CC_XATOL = 1e-8
CC_MAXITER = 500


class OutcomeImpossibleError(ValueError):
    pass


@dataclass(frozen=True)
class BlochVector:
    theta: float
    phi: float

    @property
    def vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @classmethod
    def folded(cls, theta: float, phi: float) -> "BlochVector":
        """Same direction with theta in [0, pi] and phi in [0, 2 pi)."""
        theta = float(np.mod(theta, 2 * pi))
        if theta > pi:
            theta, phi = 2 * pi - theta, phi + pi
        phi = float(np.mod(phi, 2 * pi))
        if phi >= 2 * pi:
            phi = 0.0
        return cls(theta, phi)


@dataclass(frozen=True)
class CorrelationReport:
    concurrence: float
    fef: float
    tf: float
    entropy_a: float
    entropy_b: float
    entropy_ab: float
    mutual_info: float
    cc: float
    cc_argmax: BlochVector

    def as_dict(self) -> dict:
        d = asdict(self)
        arg = d.pop("cc_argmax")
        d["cc_theta"], d["cc_phi"] = arg["theta"], arg["phi"]
        return d


def spin_flip(rho) -> np.ndarray:
    m = as_matrix(rho)
    return YY @ np.conj(m) @ YY


# -- concurrence -------------------------------------------------------------

def concurrence_stack(mats: np.ndarray) -> np.ndarray:
    """Concurrence of a stack of states, shape (..., 4, 4) -> (...).

    The square roots of the eigenvalues of rho * spin_flip(rho) are the
    singular values of tau = X^T (sy x sy) X for any factorization
    rho = X X^dag. They are read off the Hermitian block matrix
    [[0, tau], [tau^dag, 0]], whose spectrum is +-singular values, which avoids
    taking square roots of eigenvalues that are zero up to round-off.
    """
    mats = np.asarray(mats, dtype=complex)
    mu, vecs = herm_eig(mats)
    x = vecs * np.sqrt(np.clip(mu, 0.0, None))[..., None, :]
    tau = np.swapaxes(x, -1, -2) @ YY @ x
    block = np.zeros(mats.shape[:-2] + (8, 8), dtype=complex)
    block[..., :4, 4:] = tau
    block[..., 4:, :4] = dagger(tau)
    sv = herm_eigvals(block)[..., :4]
    return np.maximum(0.0, sv[..., 0] - sv[..., 1:].sum(axis=-1))


def concurrence(rho) -> float:
    return float(concurrence_stack(as_matrix(rho)))


# -- fully entangled fraction and teleportation fidelity ---------------------

def _magic_real(mats: np.ndarray) -> np.ndarray:
    return (dagger(MAGIC) @ mats @ MAGIC).real


def fef_stack(mats: np.ndarray) -> np.ndarray:
    return herm_eigvals(_magic_real(np.asarray(mats, dtype=complex)))[..., 0]


def fef(rho) -> float:
    """Largest overlap with a maximally entangled state.

    In the magic basis every maximally entangled state has real coefficients
    (up to a global phase), so the maximum is the top eigenvalue of the real
    part of rho expressed in that basis.
    """
    return float(fef_stack(as_matrix(rho)))


def fef_maximizer(rho) -> np.ndarray:
    """A maximally entangled state vector attaining :func:`fef`."""
    evals, vecs = herm_eig(_magic_real(as_matrix(rho)))
    return MAGIC @ vecs[:, 0].real


def _mes_overlaps(m: np.ndarray, angles: np.ndarray) -> np.ndarray:
    a, b, c = angles[..., 0], angles[..., 1], angles[..., 2]
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    # U = Rz(a) Ry(b) Rz(c)
    u = np.empty(angles.shape[:-1] + (2, 2), dtype=complex)
    u[..., 0, 0] = np.exp(-0.5j * (a + c)) * cb
    u[..., 0, 1] = -np.exp(-0.5j * (a - c)) * sb
    u[..., 1, 0] = np.exp(0.5j * (a - c)) * sb
    u[..., 1, 1] = np.exp(0.5j * (a + c)) * cb
    # (I x U)|Phi+> has amplitude matrix U^T / sqrt 2
    phi = np.swapaxes(u, -1, -2).reshape(angles.shape[:-1] + (4,)) / _SQ2
    return np.einsum("...i,ij,...j->...", phi.conj(), m, phi).real


def fef_bruteforce(rho, grid_per_angle: int = 16, refine: int = 4) -> float:
    """FEF by direct search over local unitaries on qubit 2.

    Sweeps a three-Euler-angle grid, then polishes the ``refine`` best grid
    points with Nelder-Mead.
    """
    if grid_per_angle < 8:
        raise ValueError("grid_per_angle must be at least 8")
    m = as_matrix(rho)
    ax = np.linspace(0.0, 2 * pi, grid_per_angle, endpoint=False)
    bx = np.linspace(0.0, pi, grid_per_angle)
    grid = np.stack(np.meshgrid(ax, bx, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    vals = _mes_overlaps(m, grid)
    best = float(vals.max())
    for idx in np.argsort(-vals, kind="stable")[:refine]:
        res = minimize(
            lambda x: -_mes_overlaps(m, x),
            grid[idx],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000},
        )
        best = max(best, float(-res.fun))
    return best


def teleportation_fidelity(rho) -> float:
    return (2.0 * fef(rho) + 1.0) / 3.0


# -- entropies -----------------------------------------------------------------

def _entropy_from_eigs(lam: np.ndarray) -> np.ndarray:
    lam = np.clip(lam, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0.0, -lam * np.log2(np.where(lam > 0.0, lam, 1.0)), 0.0)
    return terms.sum(axis=-1)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; 0 log 0 is taken as 0."""
    m = as_matrix(rho)
    if abs(np.trace(m).real - 1.0) > 1e-10:
        raise ValueError("entropy needs a unit-trace operator")
    return float(_entropy_from_eigs(herm_eigvals(m)))


def mutual_information(rho) -> float:
    m = as_matrix(rho)
    return (
        von_neumann_entropy(partial_trace(m, 1))
        + von_neumann_entropy(partial_trace(m, 2))
        - von_neumann_entropy(m)
    )


# -- classical correlation -----------------------------------------------------

def _pauli_reductions(m: np.ndarray) -> np.ndarray:
    """Tr_2[(I x s_k) rho] for k = 0 (identity), x, y, z."""
    return np.stack([partial_trace(np.kron(I2, s) @ m, 1) for s in (I2, SX, SY, SZ)])


def _qubit_entropy(m: np.ndarray) -> np.ndarray:
    """Entropy of stacks of 2x2 positive operators normalized by their trace."""
    tr = (m[..., 0, 0] + m[..., 1, 1]).real
    half_gap = np.hypot(0.5 * (m[..., 0, 0] - m[..., 1, 1]).real, np.abs(m[..., 0, 1]))
    safe = np.where(tr > 0.0, tr, 1.0)
    r = np.clip(2.0 * half_gap / safe, 0.0, 1.0)
    lam = np.stack([(1.0 + r) / 2.0, (1.0 - r) / 2.0], axis=-1)
    return _entropy_from_eigs(lam)


def _cc_objective(red: np.ndarray, s_a: float, theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    st = np.sin(theta)
    n = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    bloch_part = np.einsum("...k,kij->...ij", n, red[1:])
    cond = 0.0
    for sign in (1.0, -1.0):
        unnorm = 0.5 * (red[0] + sign * bloch_part)
        prob = (unnorm[..., 0, 0] + unnorm[..., 1, 1]).real
        cond = cond + np.where(prob > 0.0, prob * _qubit_entropy(unnorm), 0.0)
    return s_a - cond


def conditional_state(rho, n: BlochVector, outcome: int) -> tuple[np.ndarray, float]:
    """Qubit-1 state after projecting qubit 2 onto (I + outcome n.sigma)/2."""
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    nx, ny, nz = n.vector
    proj = 0.5 * (I2 + outcome * (nx * SX + ny * SY + nz * SZ))
    big = np.kron(I2, proj)
    reduced = partial_trace(big @ as_matrix(rho) @ big, 1)
    prob = float(np.trace(reduced).real)
    if prob <= PROB_FLOOR:
        raise OutcomeImpossibleError(f"outcome {outcome:+d} has probability {prob:.3e}")
    return reduced / prob, prob


def classical_correlation(rho) -> tuple[float, BlochVector]:
    """Classical correlation S(rho_1) - min_n sum_j p_j S(rho_1|j), in bits.

    Deterministic: a 64 x 128 (theta, phi) grid seeds a Nelder-Mead polish
    from the first grid maximum in row-major order.
    """
    m = as_matrix(rho)
    red = _pauli_reductions(m)
    s_a = float(_qubit_entropy(red[0]))
    nt, nphi = CC_GRID
    th = np.linspace(0.0, pi, nt)
    ph = np.linspace(0.0, 2 * pi, nphi, endpoint=False)
    vals = _cc_objective(red, s_a, th[:, None], ph[None, :])
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best, arg = float(vals[i, j]), (th[i], ph[j])

    step = np.array([pi / (nt - 1), 2 * pi / nphi])
    x0 = np.array(arg)
    res = minimize(
        lambda x: -float(_cc_objective(red, s_a, x[0], x[1])),
        x0,
        method="Nelder-Mead",
        options={
            "xatol": CC_XATOL,
            "fatol": CC_XATOL,
            "maxiter": CC_MAXITER,
            "initial_simplex": np.array([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]]),
        },
    )
    if -res.fun > best:
        best, arg = float(-res.fun), (res.x[0], res.x[1])
    # concavity makes the true value >= 0; clip round-off
    return max(best, 0.0), BlochVector.folded(*arg)


def correlation_report(rho) -> CorrelationReport:
    m = as_matrix(rho)
    f = fef(m)
    cc, arg = classical_correlation(m)
    s_a = von_neumann_entropy(partial_trace(m, 1))
    s_b = von_neumann_entropy(partial_trace(m, 2))
    s_ab = von_neumann_entropy(m)
    return CorrelationReport(
        concurrence=concurrence(m),
        fef=f,
        tf=(2.0 * f + 1.0) / 3.0,
        entropy_a=s_a,
        entropy_b=s_b,
        entropy_ab=s_ab,
        mutual_info=s_a + s_b - s_ab,
        cc=cc,
        cc_argmax=arg,
    )
