class BaguanError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(BaguanError):
    """Shapes of the operands do not agree."""


class ContractError(BaguanError):
    """A documented precondition of an operation was violated."""


class ConfigurationError(BaguanError):
    """A configuration value is invalid or inconsistent."""


class ConfigParseError(ConfigurationError):
    def __init__(self, path: str, line_number: int, line: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: malformed line {line!r} (expected key=value)")


class NormalizationError(BaguanError):
    """Per-variable statistics cannot be used for normalization."""


class UndefinedCorrelationError(BaguanError):
    """Anomaly correlation is undefined because one field has zero anomaly energy."""


class InfiniteDifficultyError(BaguanError):
    """Every token of both frames is masked, so the task difficulty is unbounded."""


class EvaluationError(BaguanError):
    """A function evaluated during a gradient check returned a non-finite value."""


class LinearAlgebraError(BaguanError):
    """A linear solve failed."""


class NumericalError(BaguanError):
    """An operation produced NaN or Inf."""


class TrainingAbortedError(BaguanError):
    def __init__(self, step: int, parameter: str, reason: str):
        self.step = step
        self.parameter = parameter
        super().__init__(f"training aborted at step {step}: {reason} in '{parameter}'")


class UsageError(BaguanError):
    """Command-line usage error."""
