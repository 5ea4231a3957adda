from typing import Optional


class CalibrationError(Exception):
    """Base class for every failure the toolkit reports to its callers."""

    kind = "calibration_error"

    def to_record(self) -> dict[str, object]:
        return {"error": self.kind, "message": str(self)}


class DomainError(CalibrationError, ValueError):
    kind = "domain_error"


class InsufficientDataError(CalibrationError, ValueError):
    kind = "insufficient_data"


class FitError(CalibrationError):
    kind = "fit_error"


class SaturationError(CalibrationError):
    kind = "saturation"


class IntegrationError(CalibrationError):
    kind = "integration_error"


class ShotRejected(CalibrationError):
    kind = "shot_rejected"


class StackFormatError(CalibrationError):
    kind = "stack_format"


class ChecksumError(CalibrationError):
    kind = "checksum_mismatch"


class ConfigError(CalibrationError):
    kind = "config_error"

    def __init__(self, message: str, violations: Optional[list[str]] = None) -> None:
        super().__init__(message)
        self.violations = violations or []

    def to_record(self) -> dict[str, object]:
        return {**super().to_record(), "violations": self.violations}
