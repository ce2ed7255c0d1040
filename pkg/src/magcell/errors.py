"""Exception hierarchy shared by the whole toolchain.

Every fatal error carries a short machine-readable ``code`` so the CLI can
exit with exactly one code and the service can mirror it in error payloads.
"""


class MagcellError(Exception):
    code = "Error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self), **self.details}


class ParseError(MagcellError):
    code = "ParseError"


class OffsetCollapse(MagcellError):
    code = "OffsetCollapse"


class RemeshDiverged(MagcellError):
    code = "RemeshDiverged"


class EmptySection(MagcellError):
    code = "EmptySection"


class BooleanFailure(MagcellError):
    """Intersection curves could not be resolved into a closed solid.

    Callers subtracting cell polyhedra must treat this as a blank-region
    signal for the affected cell, not as a pipeline crash.
    """

    code = "BooleanFailure"


class SpecInvalid(MagcellError):
    code = "SpecInvalid"


class ZeroRatio(MagcellError):
    code = "ZeroRatio"


class EmptyPlacement(MagcellError):
    code = "EmptyPlacement"


class ProjectionMiss(MagcellError):
    code = "ProjectionMiss"


class NoLayersFound(MagcellError):
    code = "NoLayersFound"


class LayerMismatch(MagcellError):
    code = "LayerMismatch"


class OutOfBed(MagcellError):
    code = "OutOfBed"


class ConfigError(MagcellError):
    code = "ConfigError"
