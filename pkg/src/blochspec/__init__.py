"""Floquet-Bloch spectra of periodic n-th order differential operators."""

__version__ = "0.1.0"

from .coefficients import (Certificate, OperatorSpec, PeriodicFunction, Regime, certify,
                           compute_C, derivative, l2_norm, load_spec, spec_from_dict)
from .errors import (BasinEscape, BlochError, BranchJump, CertificationCounterexample,
                     ConfigurationError, ContourTooClose, IntegrationError, NoConvergence,
                     NonConvergentWinding, NonFiniteSolution, NonSimpleEigenvalue,
                     StepSizeUnderflow)
from .operator_core import (CompanionSystem, FundamentalMatrix, characteristic,
                            integrate_adjoint, integrate_fundamental)
from .bloch_solver import (Disk, Eigenpair, Spectrum, audit_bounds, biorthogonality,
                           count_eigenvalues, disk, disks_disjoint, eigenpair, mu,
                           projection_norm_bound, refine_eigenvalue, spectrum)
from .band_tracker import (BandFunction, GlobalBand, Rectangle, ResolventLine, glue_bands,
                           homotopy_track, simplicity_report, track_band, track_bands,
                           verify_line, verify_rectangle)
from .expansion import ExpansionResult, TestFunction, expansion_coefficient, reconstruct

__all__ = [
    "Certificate", "OperatorSpec", "PeriodicFunction", "Regime", "certify", "compute_C",
    "derivative", "l2_norm", "load_spec", "spec_from_dict",
    "BasinEscape", "BlochError", "BranchJump", "CertificationCounterexample",
    "ConfigurationError", "ContourTooClose", "IntegrationError", "NoConvergence",
    "NonConvergentWinding", "NonFiniteSolution", "NonSimpleEigenvalue", "StepSizeUnderflow",
    "CompanionSystem", "FundamentalMatrix", "characteristic", "integrate_adjoint",
    "integrate_fundamental",
    "Disk", "Eigenpair", "Spectrum", "audit_bounds", "biorthogonality", "count_eigenvalues",
    "disk", "disks_disjoint", "eigenpair", "mu", "projection_norm_bound", "refine_eigenvalue",
    "spectrum",
    "BandFunction", "GlobalBand", "Rectangle", "ResolventLine", "glue_bands", "homotopy_track",
    "simplicity_report", "track_band", "track_bands", "verify_line", "verify_rectangle",
    "ExpansionResult", "TestFunction", "expansion_coefficient", "reconstruct",
]
