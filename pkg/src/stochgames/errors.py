"""Exception hierarchy shared across the package."""


class StochGamesError(Exception):
    """Base class for all library errors."""


class GameFormatError(StochGamesError):
    """Game description is malformed (unknown field, bad shape, bad literal)."""


class IndexOutOfRange(GameFormatError):
    """A state or action reference points outside the declared sets."""


class NegativeProbability(GameFormatError):
    """A transition probability is negative."""


class RowSumNotOne(GameFormatError):
    """A transition row does not sum exactly to one."""


class DimensionMismatch(StochGamesError):
    """Profile or vector dimensions do not match the game."""


class TOutOfRange(StochGamesError):
    """Clock argument outside [0, 1]."""


class ExhaustedEvaluation(StochGamesError):
    """Stage index beyond the support of a finite evaluation."""


class NumericalFailure(StochGamesError):
    """The LP solver did not reach a certified optimum."""


class MaxIterationsExceeded(StochGamesError):
    """Fixed-point iteration budget exhausted before reaching tolerance."""


class LadderTooShort(StochGamesError):
    """Fewer ladder points than the expansion fitter requires."""


class UnstableExponent(StochGamesError):
    """Log-log slopes disagree across ladder gaps (branch switch suspected)."""


class NotAbsorbing(StochGamesError):
    """Operation requires an absorbing game."""


class MassOverflow(StochGamesError):
    """Regularized strategy mass exceeds one at the requested discount."""


class DegenerateWindow(StochGamesError):
    """Window endpoints map to the same stage index."""


class WindowOutOfRange(StochGamesError):
    """Window (t, t+h) violates 0 <= t < t+h < 1."""


class QuadratureNotConverged(StochGamesError):
    """Step-doubling did not stabilize the quadrature result."""


class NotCoveredByTheory(StochGamesError):
    """Game is neither absorbing nor critical under the fitted expansion."""
