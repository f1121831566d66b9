"""Exception hierarchy shared by all modules."""


class BubbleScatterError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveParameter(BubbleScatterError, ValueError):
    pass


class DuplicateCenters(BubbleScatterError, ValueError):
    pass


class SourceInsideBubble(BubbleScatterError, ValueError):
    pass


class SceneParseError(BubbleScatterError, ValueError):
    """Malformed scene document. Carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class OnSurface(BubbleScatterError, ValueError):
    pass


class AtSource(BubbleScatterError, ValueError):
    pass


class StepTooLarge(BubbleScatterError, ValueError):
    pass


class NonPositiveStiffness(BubbleScatterError, ValueError):
    pass


class SingularMatrix(BubbleScatterError, ValueError):
    pass


class NonPositiveEigenvalue(BubbleScatterError, ValueError):
    pass


class NotADimer(BubbleScatterError, ValueError):
    pass


class NotATetramer(BubbleScatterError, ValueError):
    pass


class NotIdentical(BubbleScatterError, ValueError):
    pass


class NotEquidistant(BubbleScatterError, ValueError):
    pass


class BadPairing(BubbleScatterError, ValueError):
    pass


class StrongCouplingRegime(BubbleScatterError, ValueError):
    """Collective resonance factor J <= 0; oscillatory formulas do not apply."""


class PointInsideBubble(BubbleScatterError, ValueError):
    pass


class NonPositiveD(BubbleScatterError, ValueError):
    pass


class AllMasked(BubbleScatterError, ValueError):
    """Every node of the denominator fell below the masking threshold."""


class GridMismatch(BubbleScatterError, ValueError):
    pass
