"""Shared constants and exception types."""

from __future__ import annotations

# Label given to points that no density-based cluster claims. Kept as an int
# so label maps stay homogeneous; exports render it as the pseudo-label
# "noise".
NOISE = -1

# Sankey target for users that the language side never labeled (absent or
# noise there). Rendered as "undefined" in exports.
UNDEFINED = -2


class LikemindedError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LikemindedError):
    """A parameter or input violates a documented precondition."""


class EmptyCorpusError(LikemindedError):
    """An ingested file yielded zero parseable records."""


class InsufficientDataError(ValidationError):
    """Not enough data points for the requested computation."""


class ConsistencyError(ValidationError):
    """Two inputs that must describe the same objects disagree."""


class FunnelError(ValidationError):
    """A filter-funnel stage is missing the intermediate it needs."""


def label_to_text(label: int) -> str:
    """Render a cluster label for delimited output."""
    if label == NOISE:
        return "noise"
    if label == UNDEFINED:
        return "undefined"
    return str(label)


def text_to_label(text: str) -> int:
    """Parse a label written by :func:`label_to_text`."""
    if text == "noise":
        return NOISE
    if text == "undefined":
        return UNDEFINED
    return int(text)
