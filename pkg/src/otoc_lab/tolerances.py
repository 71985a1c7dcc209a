"""Numerical tolerances shared by validation helpers and the test-suite."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    unitary: float = 1e-10
    reconstruction: float = 1e-10
    projector_spectrum: float = 1e-10
    state_hermitian: float = 1e-10
    state_trace: float = 1e-10
    state_min_eigenvalue: float = -1e-8
    duration_multiple: float = 1e-9
    qpd_normalization: float = 1e-8
    otoc_bound: float = 1e-6


TOL = Tolerances()
