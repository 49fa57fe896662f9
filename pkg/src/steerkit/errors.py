"""Exception taxonomy; the CLI maps these onto exit codes."""


class SteerkitError(Exception):
    """Base class of all package errors."""


class InputError(SteerkitError):
    """Malformed user input: bad JSON, missing file, wrong shape."""


class DimensionMismatchError(InputError):
    """Operator dimensions incompatible with the requested operation."""


class StructureError(InputError):
    """Element map is structurally incomplete (distinct from invariant violations)."""


class ScenarioMismatchError(InputError):
    """Two objects live on different scenarios."""


class StateValidationError(InputError):
    """Operator fails a precondition (non-PSD, non-normalized, non-POVM)."""


class UnsupportedClassError(InputError):
    """Model class not available for the given scenario cardinalities."""


class MemberError(SteerkitError):
    """Witness extraction requested for an assemblage inside the model class."""


class SolverFailureError(SteerkitError):
    """The conic solver stopped without a certified verdict."""

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = residuals or {}
