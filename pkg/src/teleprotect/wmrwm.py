"""Weak measurement / reversal protection: closed forms and numeric optima.

Closed forms (``cf_*``) are direct transcriptions of the analytic results.
:func:`optimize_q` finds the best reversal strength numerically from the
pipeline-built states, so each closed form has an independent numeric twin.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from math import sqrt
from typing import NamedTuple, Sequence

import numpy as np

from .density import PROB_FLOOR
from .qmeasure import (
    CorrelationReport,
    concurrence,
    concurrence_stack,
    correlation_report,
    fef_stack,
)
from .qstate import (
    bell_phi_plus,
    build_pipeline,
    protected_states,
    rho_D,
    rho_DD,
    scenario1_steps,
    scenario2_steps,
    srr_beta,
)

Q_MAX = 1.0 - 1e-9
# Protected variants are evaluated just below d = 1. In Scenario II the
# optimal branch probability falls like (1-d)^2, so its clamp stays further
# out to keep that probability well above the normalization floor.
D_CLAMP = {1: 1.0 - 1e-9, 2: 1.0 - 1e-5}
SCAN_POINTS = 201
GOLDEN_TOL = 1e-10
CONVERGED_WIDTH = 1e-8
_INV_PHI = (sqrt(5.0) - 1.0) / 2.0


class Scenario(str, enum.Enum):
    I_BARE = "I_BARE"
    II_BARE = "II_BARE"
    I_WMRWM = "I_WMRWM"
    II_WMRWM = "II_WMRWM"

    @property
    def protected(self) -> bool:
        return self in (Scenario.I_WMRWM, Scenario.II_WMRWM)

    @property
    def number(self) -> int:
        return 1 if self in (Scenario.I_BARE, Scenario.I_WMRWM) else 2


class Variant(str, enum.Enum):
    NONE = "NONE"
    TF_MAX = "TF_MAX"
    C_MAX = "C_MAX"


class Objective(str, enum.Enum):
    TF = "TF"
    CONCURRENCE = "CONCURRENCE"


VARIANT_OBJECTIVE = {Variant.TF_MAX: Objective.TF, Variant.C_MAX: Objective.CONCURRENCE}


@dataclass(frozen=True)
class OptResult:
    q_star: float
    value: float
    objective: Objective
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ScenarioPoint:
    scenario: Scenario
    d: float
    p: float
    variant: Variant
    report: CorrelationReport
    success_prob: float
    q_star: float | None = None


# -- closed forms ----------------------------------------------------------

class BareS1(NamedTuple):
    c: float
    tf: float


class BareS2(NamedTuple):
    c_paper: float
    c_matrix: float
    tf: float


class S1TfMax(NamedTuple):
    f_max: float
    q_star: float
    c_at: float
    p_succ: float


class S1CMax(NamedTuple):
    c_max: float
    q_star: float
    tf_at: float
    p_succ: float


class S2Point(NamedTuple):
    fef_corrected: float
    c: float
    beta: float


class S2TfMax(NamedTuple):
    f_max: float
    q_star: float
    c_at: float


def cf_scenario1_bare(d: float) -> BareS1:
    s = sqrt(1.0 - d)
    return BareS1(s, (4.0 + 2.0 * s - d) / 6.0)


def cf_scenario2_bare(d: float) -> BareS2:
    c_paper = (1.0 - d) * (sqrt(1.0 + d * d) - d)
    return BareS2(c_paper, concurrence(rho_DD(d, d)), (3.0 - 2.0 * d + d * d) / 3.0)


def cf_s1_tfmax(d: float, p: float) -> S1TfMax:
    pb = 1.0 - p
    eta = d * pb
    return S1TfMax(
        f_max=(3.0 + 2.0 * eta) / (3.0 + 3.0 * eta),
        q_star=(3.0 * eta + eta * eta + p) / (1.0 + eta) ** 2,
        c_at=2.0 / (2.0 + eta),
        p_succ=(1.0 - d) * (2.0 + eta) * pb / (2.0 + 2.0 * eta),
    )


def cf_s1_cmax(d: float, p: float) -> S1CMax:
    pb = 1.0 - p
    eta = d * pb
    c_max = 1.0 / sqrt(1.0 + eta)
    return S1CMax(
        c_max=c_max,
        q_star=(p + 2.0 * eta) / (1.0 + eta),
        tf_at=(3.0 + 2.0 * c_max + 1.0 / (1.0 + eta)) / 6.0,
        p_succ=(1.0 - d) * pb,
    )


def _deltas(eta: float) -> tuple[float, float]:
    root = sqrt(1.0 + eta * eta)
    d1 = sqrt(2.0 * (1.0 + root) + eta * eta)
    # the radicand equals (root - 1)^2 >= 0; clamp round-off
    d2 = sqrt(max(2.0 * (1.0 - root) + eta * eta, 0.0))
    return d1, d2


def s2_fef_numerator(d: float, p: float, q: float) -> float:
    pb, qb = 1.0 - p, 1.0 - q
    return d * d * (1.0 + qb * qb) * pb * pb - 2.0 * d * pb * (pb + qb) + (pb + qb) ** 2


def cf_s2_fef_printed(d: float, p: float, q: float) -> float:
    """FEF of the doubly protected state with the published /beta normalization."""
    return s2_fef_numerator(d, p, q) / srr_beta(d, p, q)


def cf_s2(d: float, p: float, q: float) -> S2Point:
    """FEF (normalized by 2 beta), concurrence and beta for the doubly protected state."""
    beta = srr_beta(d, p, q)
    if beta <= 1e-12:
        raise ValueError(f"beta={beta:.3e} leaves nothing to normalize")
    pb, qb = 1.0 - p, 1.0 - q
    d1, d2 = _deltas(d * pb)
    c = (1.0 - d) * pb * qb * (d1 - d2 - 2.0 * d * pb) / beta
    return S2Point(s2_fef_numerator(d, p, q) / (2.0 * beta), c, beta)


def cf_s2_tfmax(d: float, p: float) -> S2TfMax:
    pb = 1.0 - p
    eta = d * pb
    root = sqrt(1.0 + eta * eta)
    d1, d2 = _deltas(eta)
    return S2TfMax(
        f_max=(2.0 + (1.0 - eta) * (root - eta)) / 3.0,
        q_star=(root - pb * (1.0 - d)) / root,
        c_at=0.5 * (root - eta) * (d1 - d2 - 2.0 * d * pb),
    )


# -- numeric optimization ------------------------------------------------------

def _objective_values(states: np.ndarray, objective: Objective) -> np.ndarray:
    if objective is Objective.TF:
        return (2.0 * fef_stack(states) + 1.0) / 3.0
    return concurrence_stack(states)


def _evaluate(scenario: int, ds, ps, qs, objective: Objective) -> np.ndarray:
    """Objective for rows k at q = qs[k, :] with parameters (ds[k], ps[k])."""
    qs = np.asarray(qs, dtype=float)
    states, probs = protected_states(
        scenario, np.asarray(ds)[:, None], np.asarray(ps)[:, None], qs, strict=False
    )
    # a branch that almost never fires is not a usable operating point
    return np.where(probs > PROB_FLOOR, _objective_values(states, objective), -np.inf)


def optimize_q_many(
    scenario: int,
    ds: Sequence[float],
    ps: Sequence[float],
    objective: Objective | str,
) -> list[OptResult]:
    """Best reversal strength for each (d, p) pair.

    A 201-point scan over q in [0, 1 - 1e-9] locates the best bracket, then
    golden-section search narrows it to width 1e-10. All pairs advance in
    lockstep to share eigensolver calls; a pair whose bracket has closed is
    no longer touched, so its result does not depend on the rest of the batch.
    """
    objective = Objective(objective)
    ds = np.asarray(ds, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if ds.shape != ps.shape or ds.ndim != 1:
        raise ValueError("ds and ps must be 1-d arrays of equal length")
    if np.any((ds < 0) | (ds >= 1)) or np.any((ps < 0) | (ps >= 1)):
        raise ValueError("d and p must lie in [0, 1)")
    n = ds.size
    grid = np.linspace(0.0, Q_MAX, SCAN_POINTS)
    scan = _evaluate(scenario, ds, ps, np.broadcast_to(grid, (n, SCAN_POINTS)), objective)
    best = np.argmax(scan, axis=1)
    lo = grid[np.maximum(best - 1, 0)]
    hi = grid[np.minimum(best + 1, SCAN_POINTS - 1)]

    c = hi - _INV_PHI * (hi - lo)
    e = lo + _INV_PHI * (hi - lo)
    fc = _evaluate(scenario, ds, ps, np.stack([c, e], axis=1), objective)
    fe = fc[:, 1].copy()
    fc = fc[:, 0].copy()
    iters = np.zeros(n, dtype=int)
    for _ in range(200):
        active = np.flatnonzero(hi - lo > GOLDEN_TOL)
        if active.size == 0:
            break
        iters[active] += 1
        left = fc[active] >= fe[active]
        probe = np.empty(active.size)
        for j, k in enumerate(active):
            if left[j]:
                hi[k], e[k], fe[k] = e[k], c[k], fc[k]
                c[k] = hi[k] - _INV_PHI * (hi[k] - lo[k])
                probe[j] = c[k]
            else:
                lo[k], c[k], fc[k] = c[k], e[k], fe[k]
                e[k] = lo[k] + _INV_PHI * (hi[k] - lo[k])
                probe[j] = e[k]
        vals = _evaluate(scenario, ds[active], ps[active], probe[:, None], objective)[:, 0]
        for j, k in enumerate(active):
            if left[j]:
                fc[k] = vals[j]
            else:
                fe[k] = vals[j]

    q_star = 0.5 * (lo + hi)
    values = _evaluate(scenario, ds, ps, q_star[:, None], objective)[:, 0]
    return [
        OptResult(
            q_star=float(q_star[k]),
            value=float(values[k]),
            objective=objective,
            iterations=int(iters[k]),
            converged=bool(hi[k] - lo[k] <= CONVERGED_WIDTH),
        )
        for k in range(n)
    ]


def optimize_q(scenario: int, d: float, p: float, objective: Objective | str) -> OptResult:
    return optimize_q_many(scenario, [d], [p], objective)[0]


# -- figure rows -------------------------------------------------------------------

def _protected_outcome(scenario: Scenario, d: float, p: float, q: float):
    if scenario.number == 1:
        steps = scenario1_steps(d, p, q)
    else:
        steps = scenario2_steps(d, d, p, q)
    return build_pipeline(bell_phi_plus(), steps)


def scenario_points(
    scenario: Scenario | str,
    ds: Sequence[float],
    p: float = 0.0,
    variant: Variant | str = Variant.NONE,
) -> list[ScenarioPoint]:
    """Full correlation reports along a grid of damping strengths."""
    scenario, variant = Scenario(scenario), Variant(variant)
    ds = [float(d) for d in ds]
    if not scenario.protected:
        if variant is not Variant.NONE:
            raise ValueError(f"{scenario.value} has no optimization variant")
        build = rho_D if scenario is Scenario.I_BARE else (lambda d: rho_DD(d, d))
        return [
            ScenarioPoint(scenario, d, float(p), variant, correlation_report(build(d)), 1.0)
            for d in ds
        ]
    if variant is Variant.NONE:
        raise ValueError(f"{scenario.value} needs variant TF_MAX or C_MAX")
    eff = [min(d, D_CLAMP[scenario.number]) for d in ds]
    opts = optimize_q_many(scenario.number, eff, [p] * len(eff), VARIANT_OBJECTIVE[variant])
    points = []
    for d, de, opt in zip(ds, eff, opts):
        out = _protected_outcome(scenario, de, p, opt.q_star)
        points.append(
            ScenarioPoint(
                scenario, d, float(p), variant, correlation_report(out.state),
                out.probability, opt.q_star,
            )
        )
    return points


def scenario_point(
    scenario: Scenario | str, d: float, p: float = 0.0, variant: Variant | str = Variant.NONE
) -> ScenarioPoint:
    return scenario_points(scenario, [d], p, variant)[0]
