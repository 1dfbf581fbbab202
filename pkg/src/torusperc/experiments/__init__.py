"""Monte Carlo experiments and deterministic audits."""
from .audit import AuditPlan, audit_sample, implication_audit
from .harness import (circuit_scan, concentration_tail_test, crossing_curve, fkg_test, quarter_bound_test,
                      sample_thresholds, variance_scan)
from .runner import MCConfig, MCResult, parallel_map
from .stats import BoundCheck, Estimate, SE_MULTIPLIER, chebyshev_bound, phi, phi_psi, psi

__all__ = [
    "AuditPlan", "audit_sample", "implication_audit",
    "circuit_scan", "concentration_tail_test", "crossing_curve", "fkg_test", "quarter_bound_test",
    "sample_thresholds", "variance_scan",
    "MCConfig", "MCResult", "parallel_map",
    "BoundCheck", "Estimate", "SE_MULTIPLIER", "chebyshev_bound", "phi", "phi_psi", "psi",
]
