"""Exception hierarchy shared by every module."""


class MimError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(MimError, ValueError):
    pass


class SizeError(MimError, ValueError):
    """An enumeration or cover would exceed a configured or representable size."""


class NumericError(MimError, ArithmeticError):
    pass


class ParameterError(MimError, ValueError):
    pass


class ConfigError(MimError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending key."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)


class BudgetExhaustedError(MimError, RuntimeError):
    """Raised when an oracle call would exceed its query or sample cap.

    ``stage`` is filled in by the pipeline so callers can tell which step ran
    dry (for example ``"influence-estimation"``).
    """

    def __init__(self, kind, used, cap, stage=None):
        self.kind = kind
        self.used = used
        self.cap = cap
        self.stage = stage
        super().__init__(self._message())

    def _message(self):
        msg = f"{self.kind} budget exhausted ({self.used}/{self.cap})"
        if self.stage:
            msg = f"[{self.stage}] {msg}"
        return msg

    def with_stage(self, stage):
        self.stage = stage
        self.args = (self._message(),)
        return self
