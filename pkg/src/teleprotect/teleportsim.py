"""Protocol-level teleportation through an arbitrary shared two-qubit state.

The input qubit (register 0) and Alice's half of the shared pair are
measured in the Bell basis; Bob applies the matching Pauli correction. The
six Pauli eigenstates form a projective 2-design, so averaging over them
gives the exact uniform average fidelity. Monte Carlo over the Bloch sphere
is available as an independent check.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .cmatrix import SX, SZ, I2, dagger
from .density import as_matrix
from .qmeasure import fef_maximizer

RNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed, batch)"
MC_BATCH = 10_000

_S = 1.0 / np.sqrt(2.0)
# Bell states on (input, Alice) paired with Bob's correction
BELL_OUTCOMES = (
    (np.array([_S, 0, 0, _S], dtype=complex), I2),  # Phi+
    (np.array([0, _S, _S, 0], dtype=complex), SX),  # Psi+
    (np.array([_S, 0, 0, -_S], dtype=complex), SZ),  # Phi-
    (np.array([0, _S, -_S, 0], dtype=complex), SX @ SZ),  # Psi-
)


class Ensemble(str, enum.Enum):
    SIX_CARDINAL = "SIX_CARDINAL"
    HAAR_MC = "HAAR_MC"


@dataclass(frozen=True)
class InputEnsemble:
    kind: Ensemble = Ensemble.SIX_CARDINAL
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Ensemble(self.kind))
        if self.kind is Ensemble.HAAR_MC and self.samples < 1000:
            raise ValueError("Monte Carlo ensembles need at least 1000 samples")


@dataclass(frozen=True)
class TeleportResult:
    avg_fidelity: float
    per_input: np.ndarray = field(repr=False)
    std_error: float
    rng_algorithm: str | None = None


def six_cardinal_states() -> np.ndarray:
    s = _S
    return np.array(
        [[1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]], dtype=complex
    )


def bloch_samples(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform pure qubit states: z uniform in [-1, 1], azimuth uniform."""
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    theta = np.arccos(z)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def bell_outcomes(shared, psi: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """(probability, corrected Bob state) for each Bell outcome, single input."""
    psi = np.asarray(psi, dtype=complex)
    out = _teleport_batch(as_matrix(shared), psi[None])
    return [(float(p[0]), s[0]) for p, s in out]


def _teleport_batch(rho: np.ndarray, psis: np.ndarray):
    """Per-outcome probabilities and corrected Bob states for many inputs."""
    inp = np.einsum("ni,nj->nij", psis, psis.conj())
    # 8x8 state, register order (input, Alice, Bob)
    full = np.einsum("nij,kl->nikjl", inp, rho).reshape(-1, 8, 8)
    results = []
    for bell, corr in BELL_OUTCOMES:
        proj = np.kron(np.outer(bell, bell.conj()), I2)
        post = (proj @ full @ proj).reshape(-1, 4, 2, 4, 2)
        bob = np.einsum("nkikj->nij", post)
        prob = np.einsum("nii->n", bob).real
        bob = corr @ bob @ dagger(corr)
        results.append((prob, bob))
    return results


def _fidelities(rho: np.ndarray, psis: np.ndarray) -> np.ndarray:
    total = np.zeros(len(psis))
    for _, bob in _teleport_batch(rho, psis):
        total += np.einsum("ni,nij,nj->n", psis.conj(), bob, psis).real
    return total


def _check_inputs(psis: np.ndarray) -> None:
    norms = np.sum(np.abs(psis) ** 2, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("input state is not normalized")


def standard_teleport_fidelity(shared, psi) -> float:
    """Outcome-averaged fidelity <psi|rho_out|psi> for one pure input."""
    psi = np.asarray(psi, dtype=complex).reshape(1, 2)
    _check_inputs(psi)
    return float(_fidelities(as_matrix(shared), psi)[0])


def average_fidelity(shared, ensemble: InputEnsemble = InputEnsemble()) -> TeleportResult:
    rho = as_matrix(shared)
    if ensemble.kind is Ensemble.SIX_CARDINAL:
        per = _fidelities(rho, six_cardinal_states())
        return TeleportResult(float(per.mean()), per, 0.0)

    chunks = []
    for batch, start in enumerate(range(0, ensemble.samples, MC_BATCH)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([ensemble.seed, batch])))
        n = min(MC_BATCH, ensemble.samples - start)
        chunks.append(_fidelities(rho, bloch_samples(n, rng)))
    per = np.concatenate(chunks)
    return TeleportResult(
        float(per.mean()), per, float(per.std(ddof=1) / np.sqrt(per.size)), RNG_ALGORITHM
    )


def optimal_prerotation(shared) -> np.ndarray:
    """Unitary for qubit 2 that maps the best maximally entangled state to Phi+.

    With |phi> = (I x U)|Phi+> the FEF maximizer, U = sqrt(2) M^T where M is
    the 2x2 amplitude matrix of |phi>; the returned operator is U^dag.
    """
    phi = fef_maximizer(shared)
    u = np.sqrt(2.0) * phi.reshape(2, 2).T
    return dagger(u)


def rotate_qubit2(shared, u: np.ndarray) -> np.ndarray:
    big = np.kron(I2, u)
    return big @ as_matrix(shared) @ dagger(big)
