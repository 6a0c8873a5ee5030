class WpcpsError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(WpcpsError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class UnknownIdentifier(ParseError):
    pass


class SignatureError(WpcpsError):
    pass


class TypeMismatch(WpcpsError):
    def __init__(self, message: str, expected=None, found=None, path: tuple[str, ...] = ()):
        where = "/".join(path) or "<root>"
        if expected is not None or found is not None:
            message = f"{message}: expected {expected}, found {found} (at {where})"
        else:
            message = f"{message} (at {where})"
        super().__init__(message)
        self.expected = expected
        self.found = found
        self.path = path


class UnboundVariable(TypeMismatch):
    pass


class UnsupportedNode(WpcpsError):
    """A logic construct the selected answer algebra cannot interpret."""


class EvaluationError(WpcpsError):
    pass


class NondeterministicAutomaton(WpcpsError):
    pass
