"""Exception hierarchy shared by all radcal modules."""


class RadcalError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(RadcalError, ValueError):
    """Input outside the mathematical domain of an operation."""


class InsufficientDataError(RadcalError):
    """Too few usable points, frames or samples to form an estimate."""


class SingularGeometryError(RadcalError):
    """Design matrix is rank deficient (e.g. all azimuths identical)."""


class UnobservableScaleError(SingularGeometryError):
    """Scale factor cannot be separated from the angle.

    Raised when every lateral ratio is ~0 (straight driving). Callers should
    fall back to the weighted mean estimator with a unit scale.
    """


class ValidationError(RadcalError, ValueError):
    """Malformed configuration or input file content."""

    def __init__(self, message: str, problems: list[str] | None = None):
        self.problems = list(problems or [])
        if self.problems:
            message = message + "\n" + "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(message)


class ParseError(ValidationError):
    """A CSV row could not be parsed."""

    def __init__(self, path, line: int, reason: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {reason}")


class AlignmentError(ValidationError):
    """External weights do not line up with the radar frames."""

    def __init__(self, frame_index: int, reason: str):
        self.frame_index = frame_index
        super().__init__(f"frame {frame_index}: {reason}")
