"""Domain error types with stable machine-readable codes."""


class HybridNetError(Exception):
    """Base for all domain errors; carries a code and the offending subject."""

    code = "ERROR"

    def __init__(self, message, subject=None, code=None):
        super().__init__(message)
        self.subject = subject
        if code is not None:
            self.code = code

    def to_doc(self):
        return {"code": self.code, "message": str(self), "subject": self.subject}


class SchemaError(HybridNetError):
    """A document does not conform to its schema; subject is the JSON path."""

    code = "SCHEMA"


class InvalidArgument(HybridNetError):
    code = "INVALID_ARGUMENT"


class NoPathError(HybridNetError):
    code = "NO_PATH"


class LabelExhausted(HybridNetError):
    code = "LABEL_EXHAUSTED"


class EndpointConflict(HybridNetError):
    code = "ENDPOINT_CONFLICT"


class UnknownService(HybridNetError):
    code = "UNKNOWN_SERVICE"


class UnknownVtep(HybridNetError):
    code = "UNKNOWN_VTEP"


class UnboundPort(HybridNetError):
    code = "UNBOUND_PORT"


class RuleConflict(HybridNetError):
    code = "RULE_CONFLICT"


class InsufficientVms(HybridNetError):
    code = "INSUFFICIENT_VMS"


class UnprovisionedTarget(HybridNetError):
    code = "UNPROVISIONED_TARGET"


class FrameInvariantError(HybridNetError):
    code = "FRAME_INVARIANT"
