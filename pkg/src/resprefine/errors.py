"""Exception types raised across the package."""


class RefineError(Exception):
    """Base class for all package errors."""


class ParseError(RefineError):
    """The API document could not be parsed."""


class UnresolvedEntity(RefineError):
    """A constraint references a parameter or operation that does not exist."""


class UnknownOperation(UnresolvedEntity):
    pass


class UnknownParameter(UnresolvedEntity):
    pass


class NoTargetFound(RefineError):
    """No candidate parameter matches an error message."""


class NoProducerFound(RefineError):
    pass


class AmbiguousRelation(RefineError):
    pass


class NoConditionalMarker(RefineError):
    pass


class BackendUnavailable(RefineError):
    """The external inference endpoint could not be reached."""


class InfeasibleMandatory(RefineError):
    """Learned selection constraints admit no parameter scenario."""

    def __init__(self, op: str, message: str = "") -> None:
        super().__init__(message or f"no feasible parameter scenario for {op}")
        self.op = op


class UnsatisfiableData(RefineError):
    def __init__(self, op: str, message: str = "") -> None:
        super().__init__(message or f"data constraints for {op} are unsatisfiable")
        self.op = op


class MissingPathValue(RefineError):
    pass


class PathNotInResponse(RefineError):
    pass


class ConnectivityError(RefineError):
    pass


class BindError(RefineError):
    pass
