"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`KoopmanError`. The CLI prints ``category`` (the class name) on
stderr so callers can branch on it without parsing messages.
"""


class KoopmanError(Exception):
    """Base class for all package errors."""

    @property
    def category(self) -> str:
        return type(self).__name__


class ZeroVariance(KoopmanError, ValueError):
    def __init__(self, channel: str):
        super().__init__(f"channel {channel!r} has zero standard deviation")
        self.channel = channel


class MissingStats(KoopmanError, ValueError):
    pass


class TooShort(KoopmanError, ValueError):
    def __init__(self, n_samples: int, n_d: int):
        super().__init__(
            f"need at least n_d + 2 = {n_d + 2} samples, got {n_samples}")
        self.n_samples = n_samples
        self.n_d = n_d


class DimensionMismatch(KoopmanError, ValueError):
    pass


class ConfigMismatch(KoopmanError, ValueError):
    pass


class LengthMismatch(KoopmanError, ValueError):
    pass


class ShapeMismatch(KoopmanError, ValueError):
    pass


class NonFinite(KoopmanError, ValueError):
    pass


class ConstantReference(KoopmanError, ValueError):
    def __init__(self, channel: int):
        super().__init__(f"reference channel {channel} is constant")
        self.channel = channel


class Diverged(KoopmanError, RuntimeError):
    """Rollout left the admissible range.

    ``partial`` holds the predictions made before the offending step (in
    normalized units), ``step`` the 1-based index of the first bad step.
    """

    def __init__(self, step: int, partial=None):
        super().__init__(f"rollout diverged at step {step}")
        self.step = step
        self.partial = partial


class InputOutOfRange(KoopmanError, ValueError):
    pass


class UnsupportedVariant(KoopmanError, ValueError):
    pass


class VersionMismatch(KoopmanError, ValueError):
    pass


class ParseError(KoopmanError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
