"""Exception hierarchy shared by every module of the package."""


class StickyTceError(Exception):
    """Base class for all errors raised by sticky_tce."""


class HorizonError(StickyTceError):
    """A path or time change was queried outside the interval it covers."""


class ConfigurationError(StickyTceError):
    """Inconsistent meshes, windows, config documents or call arguments."""


class NonInvertibleError(StickyTceError):
    """A time change has a flat segment (or does not start at 0) and has no inverse."""


class InvalidInitialCondition(StickyTceError):
    """The starting point z + X(0) is negative."""


class ModelHypothesisError(StickyTceError):
    """The Levy triplet violates a hypothesis required by the construction.

    The failing :class:`~sticky_tce.levy.ValidationVerdict` is kept on
    ``self.verdict``.
    """

    def __init__(self, verdict):
        super().__init__(verdict.message)
        self.verdict = verdict
