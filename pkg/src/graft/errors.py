"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class GraftError(Exception):
    """Base class for all errors raised by graft."""

    code = "GraftError"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class GraftSyntaxError(GraftError):
    code = "SyntaxError"

    def __init__(self, message: str, line: int = 0, col: int = 0, expected: str | None = None):
        self.line = line
        self.col = col
        self.expected = expected
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self), "line": self.line,
                "col": self.col, "expected": self.expected}


class ResolutionError(GraftError):
    """A name, kind or field does not resolve, or a construct is used illegally."""

    code = "ResolutionError"

    def __init__(self, message: str, reason: str = "Unresolved", line: int = 0):
        self.reason = reason
        self.line = line
        super().__init__(f"{reason}: {message}" + (f" (line {line})" if line else ""))

    def to_json(self) -> dict:
        return {"error": self.code, "reason": self.reason, "message": str(self)}


class CyclicHierarchy(GraftError):
    code = "CyclicHierarchy"


class NoConcreteTarget(GraftError):
    code = "NoConcreteTarget"


class NoCommonSupertype(GraftError):
    code = "NoCommonSupertype"


class CycleDetected(GraftError):
    code = "CycleDetected"


class FusionRejected(GraftError):
    """The program has validation violations and cannot be fused."""

    code = "FusionRejected"


class KindMismatch(GraftError):
    code = "KindMismatch"


class GraftRuntimeError(GraftError):
    """Dynamic failure while interpreting a program."""

    code = "RuntimeError"

    def __init__(self, message: str, node_path: str = "", where: str = ""):
        self.node_path = node_path
        self.where = where
        extra = []
        if node_path:
            extra.append(f"at node {node_path}")
        if where:
            extra.append(f"in {where}")
        super().__init__(message + (" (" + ", ".join(extra) + ")" if extra else ""))
