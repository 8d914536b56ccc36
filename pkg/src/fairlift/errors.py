"""Exception hierarchy shared across the toolkit.

``InputError`` covers malformed user input (bad files, bad ids, invalid
parameters) and maps to CLI exit code 2; ``NumericError`` covers runtime
numerical failures (divergent training, degenerate outputs) and maps to
exit code 3.
"""


class FairliftError(Exception):
    """Base class for all toolkit errors."""


class InputError(FairliftError):
    """Invalid input data or parameters."""


class NumericError(FairliftError):
    """Numerical failure during computation."""


class NonPositiveWeight(InputError):
    """An edge weight was zero or negative."""


class MalformedId(InputError):
    """A node id could not be parsed."""


class IsolatedNode(InputError):
    """A zero-degree node where the operation requires positive degree."""


class UnknownValue(InputError):
    """An attribute value not covered by the schema."""


class MissingNode(InputError):
    """A node without an attribute/label assignment."""


class ZeroMassRow(InputError):
    """An attribute row with no mass, so it cannot be normalized."""


class DimensionMismatch(InputError):
    """Operands with incompatible shapes."""


class EmptyStratum(InputError):
    """A pair stratum required by a fairness metric is empty."""


class SingleClassInput(InputError):
    """A ranking metric or classifier got instances of only one class."""


class NotEnoughNonEdges(InputError):
    """The graph is too dense to sample the requested negative pairs."""
