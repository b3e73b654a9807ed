class ProgramError(ValueError):
    """Malformed program, input, or incompatible operands."""


class ClassError(ProgramError):
    """Operation not defined for the program's class (permutation/regular/general)."""


class CapExceeded(RuntimeError):
    """An exhaustive enumeration or cost guard would exceed its cap."""


class SeedExhausted(RuntimeError):
    """A sampler read past the end of its seed."""


class ParameterError(ValueError):
    """Generator parameters out of range or beyond field-size support."""
