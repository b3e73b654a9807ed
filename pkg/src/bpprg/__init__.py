"""Fourier analysis of read-once branching programs and restriction-based PRGs."""

from .errors import CapExceeded, ClassError, ParameterError, ProgramError, SeedExhausted
from .fourier import (
    brry_weight,
    coefficient,
    coefficient_bruteforce,
    level_mass,
    parseval_check,
    spectral_norm,
    total_mass,
)
from .prg import generate, generate_traced, make_params, seed_length, select
from .program import (
    BranchingProgram,
    Layer,
    classify,
    evaluate,
    mod3_program,
    random_program,
    restrict,
)
from .samplers import SeedStream, almost_kwise_mask, chernoff_bound, kwise_bits, small_bias

__version__ = "0.1.0"
