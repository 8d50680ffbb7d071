"""Exception hierarchy shared by every module."""


class BergeCheckError(Exception):
    """Base class for all library errors."""


class ExprSyntaxError(BergeCheckError, ValueError):
    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"at position {position}: {message}")


class DimensionError(BergeCheckError, ValueError):
    pass


class DomainError(BergeCheckError, ArithmeticError):
    """An expression is undefined at the requested point."""


class InvalidWindow(BergeCheckError, ValueError):
    pass


class EmptyImage(BergeCheckError):
    def __init__(self, x, detail: str = ""):
        self.x = x
        msg = f"empty image at x={x}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SchemaError(BergeCheckError, ValueError):
    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class ProblemIOError(BergeCheckError, OSError):
    pass
