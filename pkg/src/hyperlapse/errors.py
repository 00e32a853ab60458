"""Exception types shared across the package."""


class HyperlapseError(Exception):
    """Base class for all package-specific errors."""


class ParseError(HyperlapseError):
    """A trace/plan/correspondence file is malformed."""


class InvariantError(HyperlapseError):
    """Loaded data violates a documented invariant."""


class MissingLink(HyperlapseError):
    """No motion link exists for the requested frame pair."""


class MiddleFrameMismatch(HyperlapseError):
    """Two links passed as a triplet do not share the middle frame."""


class TrackingLost(HyperlapseError):
    """Homography chaining hit an untracked gap."""


class EmptyCoverage(HyperlapseError):
    """A crop center has no covered canvas pixels around it."""


class NoPath(HyperlapseError):
    """The sampling graph has no source-to-sink path."""
