"""Exception types shared by all submodules."""


class NullInfError(Exception):
    """Base class. `exit_code` is used by the command line runner."""

    exit_code = 3


class DomainError(NullInfError, ValueError):
    pass


class FitError(NullInfError):
    pass


class StepError(NullInfError):
    pass


class ToleranceAmbiguous(NullInfError):
    pass


class FiberChartError(NullInfError):
    pass


class NotCritical(NullInfError):
    pass


class StepFailure(NullInfError):
    pass


class ChartExit(NullInfError):
    pass


class UnknownTheoremTag(NullInfError, KeyError):
    exit_code = 2


class CFLViolation(NullInfError):
    pass


class UnsupportedMode(NullInfError):
    pass


class QuadratureError(NullInfError):
    pass


class GridTooCoarse(NullInfError):
    pass


class InsufficientRange(NullInfError):
    pass


class ThresholdViolation(NullInfError):
    exit_code = 4


class NoConvergence(NullInfError):
    pass


class AliasError(NullInfError):
    pass


class ConfigError(NullInfError):
    exit_code = 2

    def __init__(self, msg, line=None, field=None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            msg = f"{msg} ({', '.join(where)})"
        super().__init__(msg)
        self.line = line
        self.field = field
