"""Exception taxonomy shared across the pipeline.

Every error that callers are expected to branch on has its own class so
that "skip this call / pair / sector" decisions never rely on string
matching.  All classes derive from :class:`TopicSwitchError`.
"""

from __future__ import annotations


class TopicSwitchError(Exception):
    """Base class for all library errors."""


# --- parsing ---------------------------------------------------------------


class MalformedInput(TopicSwitchError):
    """Input file or stream cannot be parsed.

    Carries ``line`` (1-based) or ``offset`` context when known.
    """

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        ctx = ""
        if line is not None:
            ctx = f" (line {line})"
        elif offset is not None:
            ctx = f" (offset {offset})"
        super().__init__(message + ctx)
        self.line = line
        self.offset = offset


class NoPairsFound(TopicSwitchError):
    """A call contains no analyst-then-manager adjacency; exclude the call."""


# --- embedding -------------------------------------------------------------


class ShapeMismatch(TopicSwitchError):
    """Matrix or vector shapes are inconsistent with the operation."""


class EmptyText(TopicSwitchError):
    """Text is empty or yields no tokens."""


class BridgeUnreachable(TopicSwitchError):
    """The embedding bridge did not accept a connection in time."""


class BridgeProtocolError(TopicSwitchError):
    """The bridge responded outside the documented wire schema."""


class DimensionMismatch(TopicSwitchError):
    """Vector lengths disagree with each other or with a declared dimension."""


# --- index -----------------------------------------------------------------


class ZeroNorm(TopicSwitchError):
    """A vector with zero norm was passed where a direction is required."""


class AllPairsSkipped(TopicSwitchError):
    """Every pair in a call was skipped; the call yields no index record."""


# --- market ----------------------------------------------------------------


class NonPositivePrice(TopicSwitchError):
    """Price rows must be strictly positive and finite."""


class DuplicateDate(TopicSwitchError):
    """A price series contains the same date twice."""


class InsufficientWindow(TopicSwitchError):
    """No trading day strictly before or after the call date; exclude the call."""


# --- models ----------------------------------------------------------------


class EmptyDataset(TopicSwitchError):
    """A dataset with zero rows cannot be used."""


class DivergenceDetected(TopicSwitchError):
    """The training objective became non-finite (learning rate too large)."""


# --- regression ------------------------------------------------------------


class DegenerateRegressor(TopicSwitchError):
    """The regressor is constant; the slope is not identified."""


class LengthMismatch(TopicSwitchError):
    """Paired sequences have different lengths."""


class TooFewPoints(TopicSwitchError):
    """Fewer points than the regression's degrees of freedom require."""


# --- analytics -------------------------------------------------------------


class EmptyInput(TopicSwitchError):
    """An aggregate over zero values is undefined."""


# --- pipeline --------------------------------------------------------------


class EmptySplit(TopicSwitchError):
    """The train or test side of the date split contains no examples."""


class NoUsableCalls(TopicSwitchError):
    """No input transcript survived parsing, pairing, and scoring."""
