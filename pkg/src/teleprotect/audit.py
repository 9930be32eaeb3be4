"""Self-verification: hard numerical checks plus an audit of published claims.

Hard checks must pass on a correct build. Audits compare a published value
or claim with what the matrices give; each mismatch becomes a
:class:`DiscrepancyRecord`. The set of records found must equal the
versioned allowlist shipped in ``data/known_discrepancies.json``: an
unexpected record means a regression, a missing one means the audit broke.
"""
from __future__ import annotations

import enum
import json
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from math import sqrt
from typing import Callable

import numpy as np

from .cmatrix import dagger
from .qchannel import adc_kraus
from .qmeasure import (
    classical_correlation,
    concurrence,
    fef,
    fef_bruteforce,
    mutual_information,
    teleportation_fidelity,
)
from .qstate import (
    bell_phi_plus,
    build_pipeline,
    rho_D,
    rho_DD,
    scenario1_steps,
    scenario2_steps,
    sigma_R,
    sigma_RR,
)
from .teleportsim import average_fidelity, optimal_prerotation, rotate_qubit2
from .wmrwm import (
    Objective,
    cf_s1_cmax,
    cf_s1_tfmax,
    cf_s2,
    cf_s2_fef_printed,
    cf_s2_tfmax,
    optimize_q_many,
)

GRID_201 = np.linspace(0.0, 1.0, 201)
GRID_21 = np.linspace(0.0, 1.0, 21)
GRID_20 = np.arange(20) * 0.05


class Severity(str, enum.Enum):
    TYPO_SUSPECTED = "TYPO_SUSPECTED"
    CLAIM_CONFLICT = "CLAIM_CONFLICT"


@dataclass(frozen=True)
class DiscrepancyRecord:
    claim_id: str
    paper_value: float | str
    computed_value: float
    location: str
    severity: Severity

    def as_dict(self) -> dict:
        d = asdict(self)
        d["severity"] = self.severity.value
        return d


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)
    discrepancies: list[DiscrepancyRecord] = field(default_factory=list)
    allowlist_version: int = 0
    unexpected: list[str] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and not self.unexpected and not self.missing

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "discrepancies": [r.as_dict() for r in self.discrepancies],
            "allowlist_version": self.allowlist_version,
            "unexpected": self.unexpected,
            "missing": self.missing,
        }


def load_allowlist() -> tuple[int, dict[str, Severity]]:
    text = resources.files("teleprotect").joinpath("data/known_discrepancies.json").read_text()
    data = json.loads(text)
    return int(data["version"]), {r["claim_id"]: Severity(r["severity"]) for r in data["records"]}


# -- audits ----------------------------------------------------------------------

def audit_ctf_dd_concurrence() -> DiscrepancyRecord | None:
    gaps = [
        abs((1 - d) * (sqrt(1 + d * d) - d) - concurrence(rho_DD(d, d))) for d in GRID_21
    ]
    if max(gaps) <= 1e-6:
        return None
    d = 0.5
    return DiscrepancyRecord(
        "eq-CTF_DD-concurrence",
        (1 - d) * (sqrt(1 + d * d) - d),
        concurrence(rho_DD(d, d)),
        "CTF_DD concurrence closed form vs concurrence of the State_DD matrix at D=0.5",
        Severity.TYPO_SUSPECTED,
    )


def audit_fww_normalization() -> DiscrepancyRecord | None:
    printed = cf_s2_fef_printed(0.0, 0.0, 0.0)
    actual = fef(sigma_RR(0.0, 0.0, 0.0).state)
    if abs(printed - actual) <= 1e-9:
        return None
    return DiscrepancyRecord(
        "eq-f_WW-normalization",
        printed,
        actual,
        "f_WW: FEF of sigma_RR at D=p=q=0 with the published 1/beta normalization",
        Severity.TYPO_SUSPECTED,
    )


def audit_cc_at_d1() -> DiscrepancyRecord | None:
    cc, _ = classical_correlation(rho_DD(1.0, 1.0))
    if abs(cc - 1.0) <= 1e-6:
        return None
    return DiscrepancyRecord(
        "cc-at-D1-scenario2",
        1.0,
        cc,
        "Scenario II discussion: CC(rho_DD) at D=1",
        Severity.CLAIM_CONFLICT,
    )


def audit_kraus_order() -> DiscrepancyRecord | None:
    ch = adc_kraus(0.5)
    printed_sum = sum(k.op @ dagger(k.op) for k in ch.elements)
    dev = float(np.max(np.abs(printed_sum - np.eye(2))))
    if dev <= 1e-12:
        return None
    return DiscrepancyRecord(
        "kraus-completeness-order",
        "sum_j W_j W_j^dag = I",
        dev,
        "ADC completeness relation written as W W^dag; max |sum W W^dag - I| at D=0.5",
        Severity.TYPO_SUSPECTED,
    )


def audit_fig3_claim(p: float = 0.1) -> DiscrepancyRecord | None:
    ds = np.arange(34, 100) / 100.0
    opts = optimize_q_many(2, ds, np.full(ds.size, p), Objective.CONCURRENCE)
    margins = np.array([o.value - concurrence(rho_DD(d, d)) for o, d in zip(opts, ds)])
    if np.all(margins < 0.0):
        return None
    return DiscrepancyRecord(
        "fig3-cmax-below-bare-D033",
        "C_max(sigma_RR) < C(rho_DD) for D > 0.33 at p=0.1",
        float(margins.min()),
        "Scenario II comparison: min over D in [0.34, 0.99] of C_max(sigma_RR) - C(rho_DD)",
        Severity.CLAIM_CONFLICT,
    )


def audit_c_ww_tf_max() -> DiscrepancyRecord | None:
    gaps = []
    for d in GRID_20:
        for p in (0.0, 0.1, 0.5):
            cf = cf_s2_tfmax(d, p)
            gaps.append(abs(cf.c_at - concurrence(sigma_RR(d, p, cf.q_star).state)))
    if max(gaps) <= 1e-6:
        return None
    return DiscrepancyRecord(
        "eq-C_WW_TF_Max",
        "closed-form concurrence at the TF-optimal reversal",
        max(gaps),
        "C_WW_TF_Max vs concurrence of sigma_RR at q_12^max",
        Severity.TYPO_SUSPECTED,
    )


AUDITS: list[Callable[[], DiscrepancyRecord | None]] = [
    audit_ctf_dd_concurrence,
    audit_fww_normalization,
    audit_cc_at_d1,
    audit_kraus_order,
    audit_fig3_claim,
    audit_c_ww_tf_max,
]


# -- hard checks -------------------------------------------------------------------

def _max(values) -> float:
    return float(np.max(np.asarray(list(values), dtype=float)))


def check_scenario1() -> str:
    err_c = _max(abs(concurrence(rho_D(d)) - sqrt(1 - d)) for d in GRID_201)
    err_f = _max(abs(teleportation_fidelity(rho_D(d)) - (4 + 2 * sqrt(1 - d) - d) / 6) for d in GRID_201)
    assert err_c <= 1e-9 and err_f <= 1e-9, f"concurrence err {err_c:.2e}, tf err {err_f:.2e}"
    return f"max err C {err_c:.1e}, TF {err_f:.1e}"


def tf_threshold(tol: float = 1e-12) -> float:
    """Damping strength where TF(rho_D) crosses 2/3, by bisection."""
    lo, hi = 0.0, 1.0
    g = lambda d: teleportation_fidelity(rho_D(d)) - 2.0 / 3.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_threshold() -> str:
    d = tf_threshold()
    assert abs(d - (2 * sqrt(2) - 2)) <= 1e-6, f"threshold {d}"
    return f"d* = {d:.10f}"


def check_scenario2() -> str:
    err = _max(abs(teleportation_fidelity(rho_DD(d, d)) - (3 - 2 * d + d * d) / 3) for d in GRID_201)
    worst = min(teleportation_fidelity(rho_DD(d, d)) for d in np.linspace(0, 1 - 1e-6, 201))
    assert err <= 1e-9, f"tf err {err:.2e}"
    assert worst > 2 / 3, f"tf falls to {worst}"
    c_err = _max(abs(concurrence(rho_DD(d, d)) - (1 - d) ** 2) for d in GRID_201)
    assert c_err <= 1e-9, f"concurrence err {c_err:.2e}"
    return f"TF err {err:.1e}, min TF - 2/3 = {worst - 2 / 3:.2e}, C err {c_err:.1e}"


def check_pipelines() -> str:
    bell = bell_phi_plus()
    worst = 0.0
    for d in GRID_21:
        worst = max(worst, np.max(np.abs(build_pipeline(bell, [adc_kraus(d, 2)]).state.mat - rho_D(d).mat)))
        worst = max(worst, np.max(np.abs(
            build_pipeline(bell, [adc_kraus(d, 2), adc_kraus(d, 1)]).state.mat - rho_DD(d, d).mat)))
    for d in GRID_21[:-1]:
        for p in GRID_21[:-1:4]:
            for q in GRID_21[:-1:4]:
                for build, ref in (
                    (lambda: build_pipeline(bell, scenario1_steps(d, p, q)), sigma_R(d, p, q)),
                    (lambda: build_pipeline(bell, scenario2_steps(d, d, p, q)), sigma_RR(d, p, q)),
                ):
                    out = build()
                    worst = max(worst, np.max(np.abs(out.state.mat - ref.state.mat)),
                                abs(out.probability - ref.probability))
    assert worst <= 1e-12, f"pipeline mismatch {worst:.2e}"
    return f"max entry gap {worst:.1e}"


def check_wmrwm_s1() -> str:
    dd, pp = (a.ravel() for a in np.meshgrid(GRID_20, GRID_20, indexing="ij"))
    tf = optimize_q_many(1, dd, pp, Objective.TF)
    cc = optimize_q_many(1, dd, pp, Objective.CONCURRENCE)
    worst_v = worst_q = worst_p = 0.0
    for d, p, a, b in zip(dd, pp, tf, cc):
        cf_t, cf_c = cf_s1_tfmax(d, p), cf_s1_cmax(d, p)
        worst_v = max(worst_v, abs(a.value - cf_t.f_max), abs(b.value - cf_c.c_max))
        worst_q = max(worst_q, abs(a.q_star - cf_t.q_star), abs(b.q_star - cf_c.q_star))
        pt = build_pipeline(bell_phi_plus(), scenario1_steps(d, p, cf_t.q_star)).probability
        pc = build_pipeline(bell_phi_plus(), scenario1_steps(d, p, cf_c.q_star)).probability
        worst_p = max(worst_p, abs(pt - cf_t.p_succ), abs(pc - cf_c.p_succ))
        assert cf_c.p_succ >= cf_t.p_succ - 1e-12, f"P_cmax < P_tfmax at d={d}, p={p}"
    assert worst_v <= 1e-6 and worst_q <= 1e-4 and worst_p <= 1e-9, (
        f"value {worst_v:.1e}, argmax {worst_q:.1e}, prob {worst_p:.1e}")
    return f"value {worst_v:.1e}, argmax {worst_q:.1e}, success prob {worst_p:.1e}"


def check_wmrwm_s2() -> str:
    dd, pp = (a.ravel() for a in np.meshgrid(GRID_20, GRID_20, indexing="ij"))
    tf = optimize_q_many(2, dd, pp, Objective.TF)
    cc = optimize_q_many(2, dd, pp, Objective.CONCURRENCE)
    worst_q = worst_same = worst_v = 0.0
    for d, p, a, b in zip(dd, pp, tf, cc):
        cf = cf_s2_tfmax(d, p)
        worst_q = max(worst_q, abs(a.q_star - cf.q_star))
        worst_same = max(worst_same, abs(a.q_star - b.q_star))
        worst_v = max(worst_v, abs(a.value - cf.f_max))
    ident = 0.0
    for d in GRID_21[:-1]:
        for p in GRID_21[:-1:4]:
            for q in GRID_21[:-1:4]:
                phi = np.array([1, 0, 0, 1]) / sqrt(2)
                overlap = float((phi @ sigma_RR(d, p, q).state.mat @ phi).real)
                ident = max(ident, abs(cf_s2(d, p, q).fef_corrected - overlap))
    assert worst_q <= 1e-4 and worst_same <= 1e-4 and worst_v <= 1e-6 and ident <= 1e-12, (
        f"argmax {worst_q:.1e}, same-q {worst_same:.1e}, value {worst_v:.1e}, fef {ident:.1e}")
    return f"argmax {worst_q:.1e}, C/TF argmax gap {worst_same:.1e}, corrected FEF {ident:.1e}"


def check_fef_oracle(n: int = 100, seed: int = 2024) -> str:
    worst = 0.0
    for rho in random_states(n, seed):
        worst = max(worst, abs(fef(rho) - fef_bruteforce(rho)))
    assert worst <= 1e-4, f"fef gap {worst:.2e}"
    return f"max gap {worst:.1e} over {n} states"


def check_cc() -> str:
    cc_bell, _ = classical_correlation(bell_phi_plus())
    assert abs(cc_bell - 1.0) <= 1e-6, f"CC(Bell) = {cc_bell}"
    cc_d1, _ = classical_correlation(rho_D(1.0))
    assert cc_d1 <= 1e-9, f"CC(rho_D(1)) = {cc_d1}"
    worst = 0.0
    for d in GRID_21:
        for rho in (rho_D(d), rho_DD(d, d)):
            cc, _ = classical_correlation(rho)
            mi = mutual_information(rho)
            assert -1e-12 <= cc <= mi + 1e-9, f"CC {cc} vs MI {mi} at d={d}"
            worst = max(worst, cc - mi)
    return f"CC(Bell)={cc_bell:.9f}, CC(rho_D(1))={cc_d1:.1e}"


def check_teleport_law() -> str:
    worst = 0.0
    for d in GRID_21:
        for rho in (rho_D(d), rho_DD(d, d)):
            u = optimal_prerotation(rho)
            got = average_fidelity(rotate_qubit2(rho, u)).avg_fidelity
            worst = max(worst, abs(got - (2 * fef(rho) + 1) / 3))
    assert worst <= 1e-9, f"law gap {worst:.2e}"
    return f"max gap {worst:.1e}"


def random_states(n: int, seed: int) -> list[np.ndarray]:
    """Seeded full-rank two-qubit states from the Ginibre ensemble."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = g @ g.conj().T
        out.append(m / np.trace(m).real)
    return out


CHECKS: list[tuple[str, Callable[[], str]]] = [
    ("scenario-I closed forms", check_scenario1),
    ("scenario-I TF threshold", check_threshold),
    ("scenario-II closed forms", check_scenario2),
    ("pipeline vs printed matrices", check_pipelines),
    ("WMRWM scenario I optimum", check_wmrwm_s1),
    ("WMRWM scenario II optimum", check_wmrwm_s2),
    ("FEF brute-force oracle", check_fef_oracle),
    ("classical correlation bounds", check_cc),
    ("teleportation fidelity law", check_teleport_law),
]


def run_verification(progress: Callable[[str], None] | None = None) -> VerifyReport:
    report = VerifyReport()
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except AssertionError as exc:
            detail, ok = str(exc), False
        res = CheckResult(name, ok, detail, time.perf_counter() - t0)
        report.checks.append(res)
        if progress:
            progress(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    for audit in AUDITS:
        rec = audit()
        if rec is not None:
            report.discrepancies.append(rec)

    version, allowed = load_allowlist()
    found = {r.claim_id for r in report.discrepancies}
    report.allowlist_version = version
    report.unexpected = sorted(found - set(allowed))
    report.missing = sorted(set(allowed) - found)
    return report
