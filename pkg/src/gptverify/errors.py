"""Exception hierarchy shared across the package."""


class GPTError(Exception):
    """Base class for all errors raised by gptverify."""


class DimensionError(GPTError, ValueError):
    pass


class HermiticityError(GPTError, ValueError):
    pass


class CompositionError(GPTError, ValueError):
    pass


class TheoryMismatchError(CompositionError):
    pass


class UnsupportedError(GPTError, NotImplementedError):
    pass


class StateError(GPTError, ValueError):
    pass


class NotCopurifyingError(GPTError, ValueError):
    pass


class ValidationError(GPTError, ValueError):
    pass


class PreconditionError(GPTError):
    """A check was asked to run on input that violates its precondition.

    ``item`` names the failed requirement (e.g. ``"idempotent"``).
    """

    def __init__(self, message, item=None):
        super().__init__(message)
        self.item = item


class BudgetError(GPTError, ValueError):
    pass


class DiagramError(GPTError):
    """Error in a circuit description, optionally carrying a source location."""

    def __init__(self, message, filename=None, line=None, col=None):
        self.message = message
        self.filename = filename
        self.line = line
        self.col = col
        super().__init__(self.format())

    def format(self):
        if self.line is None:
            return self.message
        return f"{self.filename or '<input>'}:{self.line}:{self.col}: {self.message}"


class DslSyntaxError(DiagramError):
    pass


class UnknownIdentifier(DiagramError):
    pass


class ArityError(DiagramError):
    pass


class TypeMismatch(DiagramError):
    pass


class CycleError(DiagramError):
    pass


class DanglingPort(DiagramError):
    pass


class OpenDiagramError(DiagramError):
    pass
