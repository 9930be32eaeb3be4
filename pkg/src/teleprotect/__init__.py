"""Two-qubit teleportation resources under amplitude damping, with
weak-measurement / reversal protection."""

from .density import DegenerateNormalizationError, DensityMatrix, SelectiveOutcome, StateError
from .qmeasure import (
    BlochVector,
    CorrelationReport,
    classical_correlation,
    concurrence,
    correlation_report,
    fef,
    fef_bruteforce,
    mutual_information,
    teleportation_fidelity,
    von_neumann_entropy,
)
from .qstate import bell_phi_plus, build_pipeline, rho_D, rho_DD, sigma_R, sigma_RR
from .wmrwm import Objective, OptResult, Scenario, Variant, optimize_q, scenario_point

__version__ = "0.1.0"
