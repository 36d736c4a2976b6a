"""Exception hierarchy shared by every module."""


class MotorFaultError(Exception):
    """Base class for all package errors."""


class StructuralError(MotorFaultError, ValueError):
    """Shapes or dimensions do not chain (e.g. wrong input width for a layer)."""

    def __init__(self, message, layer=None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class UsageError(MotorFaultError, ValueError):
    """A caller-supplied argument is outside its allowed range."""


class ParseError(MotorFaultError, ValueError):
    """Malformed text input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ProtocolError(ParseError):
    """A wire-protocol record could not be parsed."""


class DivergenceError(MotorFaultError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch
