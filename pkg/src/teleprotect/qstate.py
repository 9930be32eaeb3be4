"""Two-qubit states: the shared Bell pair, its decohered and protected forms.

Each printed closed-form matrix has an operational twin built by pushing the
Bell state through the actual Kraus pipeline; tests compare the two.
"""
from __future__ import annotations

from math import sqrt
from typing import Sequence, Union

import numpy as np

from .density import (
    PROB_FLOOR,
    DegenerateNormalizationError,
    DensityMatrix,
    SelectiveOutcome,
)
from .qchannel import (
    ChannelError,
    KrausChannel,
    LocalKraus,
    adc_kraus,
    adc_stack,
    apply_channel,
    apply_selective,
    kraus_map,
    reverse_stack,
    reverse_weak_op,
    weak_measurement_op,
    weak_stack,
)

LocalOpStep = Union[KrausChannel, LocalKraus]

_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / sqrt(2.0)


def _unit(name, x, closed=True):
    x = float(x)
    if not (0.0 <= x <= 1.0 if closed else 0.0 <= x < 1.0):
        raise ChannelError(f"{name}={x!r} out of range")
    return x


def _x_state(a11, a22, a33, a44, a14) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[1, 1], m[2, 2], m[3, 3] = a11, a22, a33, a44
    m[0, 3] = m[3, 0] = a14
    return m


def bell_phi_plus() -> DensityMatrix:
    return DensityMatrix(np.outer(_PHI_PLUS, _PHI_PLUS.conj()))


def rho_D(d2: float) -> DensityMatrix:
    """Bell pair after amplitude damping of strength ``d2`` on qubit 2."""
    d2 = _unit("d2", d2)
    e = 1.0 - d2
    return DensityMatrix(_x_state(0.5, 0.0, d2 / 2, e / 2, sqrt(e) / 2))


def rho_DD(d1: float, d2: float) -> DensityMatrix:
    """Bell pair after amplitude damping on both qubits."""
    d1, d2 = _unit("d1", d1), _unit("d2", d2)
    e1, e2 = 1.0 - d1, 1.0 - d2
    return DensityMatrix(
        _x_state((1 + d1 * d2) / 2, d1 * e2 / 2, e1 * d2 / 2, e1 * e2 / 2, sqrt(e1 * e2) / 2)
    )


def sigma_R(d2: float, p2: float, q2: float) -> SelectiveOutcome:
    """Weak measurement, damping and reversal on qubit 2, renormalized.

    The no-click branch occurs with probability alpha/2 where
    alpha = 2 - p - q - d (1-p) q.
    """
    d2 = _unit("d2", d2, closed=False)
    p2, q2 = _unit("p2", p2, closed=False), _unit("q2", q2, closed=False)
    pb, qb, db = 1 - p2, 1 - q2, 1 - d2
    alpha = 2 - p2 - q2 - d2 * pb * q2
    if alpha <= PROB_FLOOR:
        raise DegenerateNormalizationError(f"alpha={alpha:.3e}")
    mat = _x_state(qb, 0.0, d2 * pb * qb, db * pb, sqrt(db * pb * qb)) / alpha
    return SelectiveOutcome(DensityMatrix(mat), alpha / 2)


def srr_beta(d: float, p: float, q: float) -> float:
    pb = 1 - p
    return 2 - 2 * q * (1 + d * pb**2) + q**2 * (1 + d**2 * pb**2) - (2 - p) * p


def sigma_RR(d: float, p: float, q: float) -> SelectiveOutcome:
    """Symmetric protection of both qubits; branch probability beta/2."""
    d = _unit("d", d, closed=False)
    p, q = _unit("p", p, closed=False), _unit("q", q, closed=False)
    pb, qb, db = 1 - p, 1 - q, 1 - d
    beta = srr_beta(d, p, q)
    if beta <= PROB_FLOOR:
        raise DegenerateNormalizationError(f"beta={beta:.3e}")
    mid = d * db * pb**2 * qb
    mat = _x_state(qb**2 * (1 + d**2 * pb**2), mid, mid, db**2 * pb**2, db * pb * qb) / beta
    return SelectiveOutcome(DensityMatrix(mat), beta / 2)


def build_pipeline(initial: DensityMatrix, steps: Sequence[LocalOpStep]) -> SelectiveOutcome:
    """Apply channels and selective operators in order.

    The returned probability is the product of the selective branch
    probabilities.
    """
    state, prob = initial, 1.0
    for step in steps:
        if isinstance(step, KrausChannel):
            state = apply_channel(state, step)
        elif isinstance(step, LocalKraus):
            out = apply_selective(state, step)
            state, prob = out.state, prob * out.probability
            if prob <= PROB_FLOOR:
                raise DegenerateNormalizationError(f"cumulative probability {prob:.3e}")
        else:
            raise TypeError(f"unsupported pipeline step {step!r}")
    return SelectiveOutcome(state, prob)


def scenario1_steps(d: float, p: float, q: float) -> list[LocalOpStep]:
    return [weak_measurement_op(p, 2), adc_kraus(d, 2), reverse_weak_op(q, 2)]


def scenario2_steps(d1: float, d2: float, p: float, q: float) -> list[LocalOpStep]:
    return [
        weak_measurement_op(p, 1),
        weak_measurement_op(p, 2),
        adc_kraus(d2, 2),
        adc_kraus(d1, 1),
        reverse_weak_op(q, 1),
        reverse_weak_op(q, 2),
    ]


def protected_states(scenario: int, d, p, q, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Pipeline states for arrays of (d, p, q), broadcast against each other.

    Returns ``(states, probabilities)``; states have the broadcast shape plus
    (4, 4). No density-matrix validation happens here: this is the
    optimizer's hot path. With ``strict=False`` branches whose probability
    is at or below the floor are returned unnormalized instead of raising.
    """
    d, p, q = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (d, p, q)))
    rho = np.broadcast_to(np.outer(_PHI_PLUS, _PHI_PLUS.conj()), d.shape + (4, 4))
    if scenario == 1:
        rho = kraus_map(rho, [weak_stack(p, 2)])
        rho = kraus_map(rho, adc_stack(d, 2))
        rho = kraus_map(rho, [reverse_stack(q, 2)])
    elif scenario == 2:
        rho = kraus_map(rho, [weak_stack(p, 1) @ weak_stack(p, 2)])
        rho = kraus_map(rho, adc_stack(d, 2))
        rho = kraus_map(rho, adc_stack(d, 1))
        rho = kraus_map(rho, [reverse_stack(q, 1) @ reverse_stack(q, 2)])
    else:
        raise ValueError(f"scenario must be 1 or 2, got {scenario!r}")
    probs = np.einsum("...ii->...", rho).real
    dead = probs <= PROB_FLOOR
    if strict and np.any(dead):
        raise DegenerateNormalizationError("reversal annihilated the state")
    return rho / np.where(dead, 1.0, probs)[..., None, None], probs
