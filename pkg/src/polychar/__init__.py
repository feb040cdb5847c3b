"""Characteristic functions of commuting row contractions at finite dimension."""

from .charfn import coeff, degree, eval_at, evaluate, gleason_regular, taylor
from .decomp import canonical, da_shift_unitary, partial_isometry_identity, phi
from .errors import PolycharError
from .examples import (
    FixtureSpec,
    gen_block_composite,
    gen_nilpotent_poly,
    gen_random_commuting,
    gen_random_noncommuting,
    gen_section7,
    gen_spherical_coiso,
    generate,
    jordan_1d,
)
from .factor import block_analyze, factorize2, factorize3, g_form, julia_halmos
from .fock import FockTruncation, creation, flip, nc_charfn, nc_coeff, symmetric_compression
from .opcore import Subspace, psd_sqrt, range_basis, unitary_check
from .tuples import OperatorTuple, classify, coisometric_subspace, gamma, validate

__all__ = [
    "OperatorTuple", "Subspace", "PolycharError", "FixtureSpec", "FockTruncation",
    "psd_sqrt", "range_basis", "unitary_check",
    "validate", "classify", "coisometric_subspace", "gamma",
    "coeff", "eval_at", "evaluate", "taylor", "degree", "gleason_regular",
    "canonical", "partial_isometry_identity", "da_shift_unitary", "phi",
    "creation", "flip", "nc_charfn", "nc_coeff", "symmetric_compression",
    "block_analyze", "julia_halmos", "factorize2", "factorize3", "g_form",
    "generate", "gen_nilpotent_poly", "gen_section7", "gen_spherical_coiso",
    "gen_block_composite", "gen_random_commuting", "gen_random_noncommuting", "jordan_1d",
]
