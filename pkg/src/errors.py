from __future__ import annotations

from collections.abc import Sequence


class OuterBilliardError(Exception):
    pass


class ConfigError(OuterBilliardError):
    pass


class InvalidPolygonError(OuterBilliardError, ValueError):
    pass


class DegeneratePolygonError(OuterBilliardError, ValueError):
    pass


class InvalidTableError(OuterBilliardError, ValueError):
    pass


class OutsideDomainError(OuterBilliardError, ValueError):
    pass


class SingularLineError(OuterBilliardError, ValueError):
    pass


class InvalidCurveError(OuterBilliardError, ValueError):
    pass


class GeometricDegeneracyError(OuterBilliardError, ValueError):
    pass


class NotClosedError(OuterBilliardError, ValueError):

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class DegenerationAlongPathError(OuterBilliardError, RuntimeError):

    def __init__(self, message: str, time: float) -> None:
        super().__init__(message)
        self.time = time


class NonConvergenceError(OuterBilliardError, RuntimeError):

    def __init__(self, message: str, history: Sequence[float]) -> None:
        super().__init__(message)
        self.history = list(history)


class FitFailureError(OuterBilliardError, RuntimeError):

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class InvalidParameterError(OuterBilliardError, ValueError):
    pass
