"""Exception hierarchy shared by every module."""


class DiniKKTError(Exception):
    """Base class for all errors raised by the package."""


class ExpressionSyntaxError(DiniKKTError):
    """Malformed expression text.

    ``offset`` is the byte offset (UTF-8) of the offending token and
    ``expected`` a short description of what the parser wanted there.
    """

    def __init__(self, offset: int, expected: str, text: str = ""):
        self.offset = offset
        self.expected = expected
        self.text = text
        super().__init__(f"syntax error at offset {offset}: expected {expected}")


class UnknownIdentifier(DiniKKTError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class DomainError(DiniKKTError, ArithmeticError):
    """An expression was evaluated outside its natural domain."""


class InfeasibleCandidate(DiniKKTError):
    def __init__(self, violated: dict):
        # maps constraint label -> value at the candidate
        self.violated = dict(violated)
        labels = ", ".join(f"{k}={v:.3g}" for k, v in self.violated.items())
        super().__init__(f"candidate violates constraints: {labels}")


class FormatError(DiniKKTError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class CycleGuardExceeded(DiniKKTError):
    """Simplex iteration cap hit. Bland's rule makes this a defect."""


class NoFeasiblePoint(DiniKKTError):
    pass
