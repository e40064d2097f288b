"""Diophantine arithmetic, generating functions and Birkhoff normalization."""
from .diophantine import GOLDEN, DiophantineWitness, FrequencyVector, diophantine_margin, small_divisors
from .elliptic import (
    RescaledTwist,
    ShearToRotation,
    elliptic_rescale,
    is_identity_exact,
    matpow_exact,
    shear_to_rotation,
    symplectic_defect_exact,
)
from .fourier import FourierPoly, Jet, JetSpace, compose
from .generating import (
    GeneratingFunction,
    GeneratingFunctionMap,
    HamiltonianFlow,
    NormalizedMap,
    bnf_step,
    cutoff,
    homological_residual,
    loglog_slope,
    normalize,
    oscillation_profile,
    solve_homological,
    truncate_generating,
)
