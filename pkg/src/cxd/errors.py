"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class CxdError(Exception):
    """Base class for all pipeline errors."""


# input / analysis errors


class EmptyPrompt(CxdError, ValueError):
    pass


class LexiconMissing(CxdError, FileNotFoundError):
    pass


class LexiconFormatError(CxdError, ValueError):
    pass


class EntityMismatch(CxdError, ValueError):
    pass


class InconsistentInputs(CxdError, ValueError):
    pass


# planning errors


class UnsatisfiableBudget(CxdError, ValueError):
    pass


class LayoutInfeasible(CxdError):
    pass


class PlanFormatError(CxdError, ValueError):
    pass


# painting errors


class ShapeMismatch(CxdError, ValueError):
    pass


class EmptyPlan(CxdError, ValueError):
    pass


# backend errors


class BackendFailure(CxdError):
    """A backend was unreachable or replied with something unusable.

    ``kind`` is one of ``"timeout"``, ``"bad_status"``, ``"malformed_reply"``,
    ``"transport"``, ``"invalid_reply"`` or ``"missing_fixture"``.  The raw reply
    body is kept in ``body`` when there was one.
    """

    kind = "backend"

    def __init__(self, message: str, *, kind: str | None = None,
                 status: int | None = None, body: str | None = None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind
        self.status = status
        self.body = body


class BackendTimeout(BackendFailure):
    kind = "timeout"


class BadStatus(BackendFailure):
    kind = "bad_status"


class MalformedReply(BackendFailure):
    kind = "malformed_reply"


class BackendUnavailable(CxdError):
    """A remote backend is required but no endpoint is configured."""


class MissingImage(CxdError, ValueError):
    pass
