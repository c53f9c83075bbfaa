"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`InputFormatError` to exit code 2 and
:class:`PreconditionError` to exit code 3.
"""


class PhaseCellError(Exception):
    """Base class for all phasecell errors."""


class InputFormatError(PhaseCellError, ValueError):
    """Malformed input: bad CSV/JSON, corrupt binary table, field overflow."""


class PreconditionError(PhaseCellError, ValueError):
    """Input parses but violates an operation's precondition."""
