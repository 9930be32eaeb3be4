"""Amplitude damping, weak measurement and its reversal on one qubit of two.

Trace-preserving channels are :class:`KrausChannel` objects. The two
measurement operators are single :class:`LocalKraus` elements that are
applied selectively: the state is renormalized and the branch probability is
returned alongside it.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np

from .cmatrix import I2, dagger, kron
from .density import (
    PROB_FLOOR,
    DegenerateNormalizationError,
    DensityMatrix,
    SelectiveOutcome,
    as_matrix,
)

COMPLETENESS_TOL = 1e-12


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LocalKraus:
    """A 2x2 operator acting on qubit 1 or 2 of a two-qubit register."""

    op: np.ndarray
    qubit: int

    def __post_init__(self):
        op = np.array(self.op, dtype=complex)
        if op.shape != (2, 2) or not np.all(np.isfinite(op)):
            raise ChannelError("local operator must be a finite 2x2 matrix")
        if self.qubit not in (1, 2):
            raise ChannelError(f"qubit must be 1 or 2, got {self.qubit!r}")
        op.setflags(write=False)
        object.__setattr__(self, "op", op)

    def lifted(self) -> np.ndarray:
        return lift(self.op, self.qubit)


@dataclass(frozen=True)
class KrausChannel:
    elements: tuple[LocalKraus, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ChannelError("channel needs at least one Kraus element")
        if len({k.qubit for k in self.elements}) != 1:
            raise ChannelError("all Kraus elements must act on the same qubit")

    @property
    def qubit(self) -> int:
        return self.elements[0].qubit

    def completeness_error(self) -> float:
        total = sum(dagger(k.op) @ k.op for k in self.elements)
        return float(np.max(np.abs(total - I2)))

    def is_complete(self, tol: float = COMPLETENESS_TOL) -> bool:
        return self.completeness_error() <= tol


def lift(op: np.ndarray, qubit: int) -> np.ndarray:
    """Embed a 2x2 operator into the two-qubit space (qubit 1 is slow)."""
    if qubit == 1:
        return kron(op, I2)
    if qubit == 2:
        return kron(I2, op)
    raise ChannelError(f"qubit must be 1 or 2, got {qubit!r}")


def _check_unit(name: str, x: float, *, closed: bool) -> float:
    x = float(x)
    ok = 0.0 <= x <= 1.0 if closed else 0.0 <= x < 1.0
    if not ok:
        bracket = "[0, 1]" if closed else "[0, 1)"
        raise ChannelError(f"{name} must lie in {bracket}, got {x!r}")
    return x


def adc_kraus(d: float, qubit: int = 2) -> KrausChannel:
    """Amplitude damping with decay probability ``d``."""
    d = _check_unit("damping strength", d, closed=True)
    w0 = np.array([[1.0, 0.0], [0.0, sqrt(1.0 - d)]], dtype=complex)
    w1 = np.array([[0.0, sqrt(d)], [0.0, 0.0]], dtype=complex)
    return KrausChannel((LocalKraus(w0, qubit), LocalKraus(w1, qubit)))


def weak_measurement_op(p: float, qubit: int) -> LocalKraus:
    """No-click branch of a weak measurement of strength ``p``: diag(1, sqrt(1-p))."""
    p = _check_unit("weak measurement strength", p, closed=False)
    return LocalKraus(np.diag([1.0, sqrt(1.0 - p)]), qubit)


def reverse_weak_op(q: float, qubit: int) -> LocalKraus:
    """Reversal measurement of strength ``q``: diag(sqrt(1-q), 1)."""
    q = _check_unit("reverse measurement strength", q, closed=False)
    return LocalKraus(np.diag([sqrt(1.0 - q), 1.0]), qubit)


def apply_channel(rho, ch: KrausChannel) -> DensityMatrix:
    if not ch.is_complete():
        raise ChannelError(
            f"channel is not trace preserving (|sum K^dag K - I| = {ch.completeness_error():.3e})"
        )
    m = as_matrix(rho)
    out = np.zeros((4, 4), dtype=complex)
    for k in ch.elements:
        big = k.lifted()
        out += big @ m @ dagger(big)
    return DensityMatrix(out)


def apply_selective(rho, k: LocalKraus) -> SelectiveOutcome:
    big = k.lifted()
    out = big @ as_matrix(rho) @ dagger(big)
    prob = float(np.trace(out).real)
    if prob <= PROB_FLOOR:
        raise DegenerateNormalizationError(
            f"selective operator leaves probability {prob:.3e}"
        )
    return SelectiveOutcome(DensityMatrix(out / prob), prob)


# Stack versions used by the optimizers. Strength arguments are arrays and
# every returned operator carries their shape as leading batch axes.

def kraus_map(mats: np.ndarray, ops: Sequence[np.ndarray]) -> np.ndarray:
    return sum(op @ mats @ dagger(op) for op in ops)


def lift_stack(local: np.ndarray, qubit: int) -> np.ndarray:
    batch = local.shape[:-2]
    if qubit == 1:
        big = np.einsum("...ij,kl->...ikjl", local, I2)
    elif qubit == 2:
        big = np.einsum("ij,...kl->...ikjl", I2, local)
    else:
        raise ChannelError(f"qubit must be 1 or 2, got {qubit!r}")
    return big.reshape(batch + (4, 4))


def _strengths(name: str, x, *, closed: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    bad = (x < 0.0) | (x > 1.0) if closed else (x < 0.0) | (x >= 1.0)
    if np.any(bad):
        raise ChannelError(f"{name} out of range")
    return x


def _diag_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 1, 1] = b
    return out


def adc_stack(d, qubit: int) -> list[np.ndarray]:
    d = _strengths("damping strength", d, closed=True)
    w1 = np.zeros(d.shape + (2, 2), dtype=complex)
    w1[..., 0, 1] = np.sqrt(d)
    return [lift_stack(_diag_stack(1.0, np.sqrt(1.0 - d)), qubit), lift_stack(w1, qubit)]


def weak_stack(p, qubit: int) -> np.ndarray:
    p = _strengths("weak measurement strength", p, closed=False)
    return lift_stack(_diag_stack(1.0, np.sqrt(1.0 - p)), qubit)


def reverse_stack(q, qubit: int) -> np.ndarray:
    q = _strengths("reverse measurement strength", q, closed=False)
    return lift_stack(_diag_stack(np.sqrt(1.0 - q), 1.0), qubit)
