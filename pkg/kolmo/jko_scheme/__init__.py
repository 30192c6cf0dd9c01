"""
Minimizing-movement scheme, free energy and run diagnostics.
"""
from .potentials import PotentialSpec
from .energy import FreeEnergy, free_energy
from .scheme import (
    MonitorError,
    SchemeState,
    StepRecord,
    interpolate,
    jko_step,
    run_scheme,
)
from .diagnostics import (
    MissingReferenceError,
    convergence_report,
    energy_dissipation_table,
    equicontinuity_monitor,
    euler_lagrange_residual,
    euler_lagrange_terms,
    gaussian_measure,
    reference_solution,
    weak_form_residual,
)

__all__ = [
    'PotentialSpec',
    'FreeEnergy',
    'free_energy',
    'MonitorError',
    'SchemeState',
    'StepRecord',
    'interpolate',
    'jko_step',
    'run_scheme',
    'MissingReferenceError',
    'convergence_report',
    'energy_dissipation_table',
    'equicontinuity_monitor',
    'euler_lagrange_residual',
    'euler_lagrange_terms',
    'gaussian_measure',
    'reference_solution',
    'weak_form_residual',
]
