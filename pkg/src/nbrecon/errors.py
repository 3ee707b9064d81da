"""Exception types shared across the package.

Each carries a short machine-parsable ``code`` so the CLI can report
failures uniformly on stderr.
"""


class NbreconError(Exception):
    code = "E_GENERIC"


class GraphParseError(NbreconError):
    """Malformed graph input file; message names the file and line."""

    code = "E_PARSE"


class DimensionError(NbreconError):
    """Shape or length mismatch between two operands."""

    code = "E_DIM"


class ContractError(NbreconError):
    """A documented precondition was violated by the caller."""

    code = "E_CONTRACT"


class DegenerateInputError(NbreconError):
    """Input is in the measure-zero set an operation cannot handle."""

    code = "E_DEGENERATE"


class NumericError(NbreconError):
    """A computation produced NaN/Inf or otherwise lost its footing."""

    code = "E_NUMERIC"


class CheckpointError(NbreconError):
    """Checkpoint file is missing fields, truncated, or not a checkpoint."""

    code = "E_CKPT"
