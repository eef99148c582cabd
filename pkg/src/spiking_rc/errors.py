"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """Invalid configuration or argument values."""


class FormatError(ValueError):
    """Malformed input file."""


class InputError(ValueError):
    """Numerically invalid input data (e.g. non-finite drive values)."""


class DegenerateDataWarning(UserWarning):
    """Data was usable but degenerate (constant column, silent raster, ...)."""
