"""Numerical knobs shared across the package.

All tolerances live here so a verification run can override them in one
place instead of hunting through call sites.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Tolerance families used by identity checks.

    algebraic:          identities whose pipelines are alias-free (pure
                        coefficient arithmetic up to one truncation).
    composition:        identities that route through diffeomorphism
                        composition or other refitting steps.
    oracle:             agreement between an operation and its independent
                        oracle.
    finite_difference:  limits taken by central differences.
    """

    algebraic: float = 1e-8
    composition: float = 1e-7
    oracle: float = 1e-10
    finite_difference: float = 1e-4


# Domain guards.
EPS_POSITIVE = 1e-6      # min |a(x)| required before taking log|a|
EPS_INVERTIBLE = 1e-4    # min |det m(x)| for pointwise matrix inversion
EPS_REGULAR = 1e-3       # min |det(jacobian)| certifying a diffeomorphism

# Hermitian-symmetry residue policy for grid/point evaluation.
IMAG_ERROR = 1e-9        # imaginary residue above this raises
IMAG_DISCARD = 1e-12     # residues below this are silently dropped

# Truncation bookkeeping.
LOSS_FLAG = 1e-10        # relative spilled energy above this marks a value lossy

# Iteration budgets.
FLOW_STEPS = 64          # fixed RK4 steps used by vector-field flows
NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-13
REJECTION_MAX_ATTEMPTS = 50
