# src/errors.py

from typing import Optional, Sequence


class QuatflowError(ValueError):
    """
    Base class for every error raised by quatflow.
    """


class RepresentationError(QuatflowError):
    """
    A field was passed in the wrong representation (physical vs spectral).
    """


class SymmetryError(QuatflowError):
    """
    Spectral coefficients do not describe a real-valued field.
    """


class ConfigurationError(QuatflowError):
    """
    Invalid grid, filter bank, forcing or run configuration.

    Attributes:
        keys (Sequence[str]): The configuration keys involved, if any.
        line (Optional[int]): Line of a syntax error in a config file.
        column (Optional[int]): Column of a syntax error in a config file.
    """

    def __init__(
        self,
        message: str,
        keys: Sequence[str] = (),
        line: Optional[int] = None,
        column: Optional[int] = None,
    ) -> None:
        super().__init__(message)
        self.keys: Sequence[str] = tuple(keys)
        self.line: Optional[int] = line
        self.column: Optional[int] = column


class RangeError(QuatflowError):
    """
    A band index outside the filter bank's range.
    """


class ParameterError(QuatflowError):
    """
    Invalid numerical parameter, or a violated estimate hypothesis.
    """


class BlowUpError(QuatflowError):
    """
    The numerical solution lost finiteness or exceeded the energy limit.

    Attributes:
        step_index (int): Step at which the failure was detected.
        t (float): Simulation time of the failed step.
        last_besov_norm (float): Last finite Besov norm of the trajectory.
    """

    def __init__(self, step_index: int, t: float, last_besov_norm: float, reason: str) -> None:
        super().__init__(
            f"blow-up at step {step_index} (t={t:.6g}): {reason}; "
            f"last finite Besov norm {last_besov_norm:.6g}"
        )
        self.step_index: int = step_index
        self.t: float = t
        self.last_besov_norm: float = last_besov_norm


class InsufficientDataError(QuatflowError):
    """
    Not enough usable data for a fit or report.
    """


class SnapshotError(QuatflowError):
    """
    Base class for snapshot file errors.
    """


class BadMagicError(SnapshotError):
    pass


class VersionMismatchError(SnapshotError):
    pass


class TruncatedSnapshotError(SnapshotError):
    pass


class ChecksumError(SnapshotError):
    pass


class DimensionMismatchError(SnapshotError):
    pass
