"""Exception hierarchy shared by the simulator modules."""

from __future__ import annotations


class TwinError(Exception):
    """Base class for every error raised by this package."""


class ScenarioError(TwinError, ValueError):
    """A scenario document or object cannot be accepted."""


class ParseError(ScenarioError):
    """The scenario document is not well-formed JSON."""


class SchemaError(ScenarioError):
    """Unknown key, wrong type, or a value violating a type invariant."""

    def __init__(self, message: str, issues: list | None = None):
        super().__init__(message)
        self.issues = list(issues or [])


class DanglingReferenceError(ScenarioError):
    """A slot or experiment names a front-end that does not exist."""


class ConfigError(TwinError, ValueError):
    """Missing or inconsistent configuration for a computation."""


class PayloadError(TwinError):
    """Illegal payload state transition; ``code`` is machine-readable."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class InstanceTooLarge(TwinError, ValueError):
    """The exhaustive planner refuses instances beyond its guard bounds."""


class ScheduleRejected(TwinError):
    """A schedule with violations was handed to the simulator without force."""

    def __init__(self, violations):
        self.violations = list(violations)
        codes = ", ".join(sorted({v.code for v in self.violations}))
        super().__init__(f"schedule has {len(self.violations)} violation(s): {codes}")


class UnsupportedFormat(TwinError, ValueError):
    """Report format other than json or csv."""
