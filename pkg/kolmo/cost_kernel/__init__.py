"""
Mean-squared-derivative cost: exact matrices, float evaluator, identity suite.
"""
from .exact import (
    build_A,
    build_B,
    build_B_inverse_closed,
    build_LU,
    build_M,
    build_M_inverse_closed,
    build_H0,
    build_H,
    build_K,
    build_P,
    build_T_matrices,
)
from .evaluator import (
    BoundaryState,
    CostEvaluator,
    TimeMatrix,
    comparability_constant,
    kramers_comparison,
)
from .identities import IdentityCheck, IdentityReport, identity_suite

__all__ = [
    # Exact construction
    'build_A',
    'build_B',
    'build_B_inverse_closed',
    'build_LU',
    'build_M',
    'build_M_inverse_closed',
    'build_H0',
    'build_H',
    'build_K',
    'build_P',
    'build_T_matrices',
    # Evaluation
    'BoundaryState',
    'CostEvaluator',
    'TimeMatrix',
    'comparability_constant',
    'kramers_comparison',
    # Verification
    'IdentityCheck',
    'IdentityReport',
    'identity_suite',
]
