"""Exception and warning types raised across the package."""


class LDDCError(Exception):
    """Base class for all errors raised by :mod:`lddc`."""


class ValidationError(LDDCError, ValueError):
    """Input data violates a documented invariant."""


class InvalidRange(ValidationError):
    pass


class InvalidBand(ValidationError):
    pass


class DenominatorUnderflow(LDDCError, ZeroDivisionError):
    """Transfer function evaluated at (or numerically on top of) a pole."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NearZeroSample(LDDCError, ZeroDivisionError):
    """A sample is too small to be inverted (transmission zero on the grid)."""

    def __init__(self, index):
        super().__init__(f"sample {index} is numerically zero; cannot invert")
        self.index = index


class IllConditionedFit(LDDCError):
    pass


class RankDeficiency(LDDCError):
    pass


class PoleHit(LDDCError, ZeroDivisionError):
    pass


class SensitivitySingular(LDDCError, ZeroDivisionError):
    """``1 - M`` vanishes on the grid: the reference model demands infinite gain."""

    def __init__(self, index):
        super().__init__(f"1 - M(jw) vanishes at grid index {index}")
        self.index = index


class CoincidentPoints(LDDCError):
    def __init__(self, i, j):
        super().__init__(f"interpolation points mu[{i}] and lambda[{j}] coincide")
        self.i = i
        self.j = j


class SingularPencil(LDDCError):
    pass


class TruncationTooAggressive(LDDCError):
    pass


class ResolventSingular(LDDCError):
    def __init__(self, s):
        super().__init__(f"sE - A is singular at s = {s!r}")
        self.s = s


class AlgebraicLoopSingular(LDDCError):
    def __init__(self, index):
        super().__init__(f"1 + P K vanishes at grid index {index}")
        self.index = index


class ConfigError(ValidationError):
    """Invalid pipeline configuration; ``path`` locates the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class StiffnessWarning(UserWarning):
    pass


class AchievabilityWarning(UserWarning):
    pass
