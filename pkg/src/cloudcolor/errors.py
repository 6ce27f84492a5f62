"""Exception types shared across the library."""


class CloudColorError(Exception):
    """Base class for all cloudcolor errors."""


class MalformedHeader(CloudColorError):
    """PLY header is syntactically invalid or inconsistent."""


class MissingProperty(CloudColorError):
    """PLY vertex element lacks a required position or color property."""


class TruncatedBody(CloudColorError):
    """PLY body ends early or contains unparseable vertex rows."""


class UnsupportedFormat(CloudColorError):
    """PLY flavor the reader does not handle (e.g. big endian)."""


class IoFailure(CloudColorError):
    """Underlying file I/O failed."""


class InvalidTransform(CloudColorError):
    """4x4 matrix is not a proper rigid transform."""


class EmptyCloud(CloudColorError):
    """Operation requires a non-empty point cloud."""


class DegenerateDistribution(CloudColorError):
    """Distance distribution has too few occupied bins to threshold."""


class EmptyDistribution(CloudColorError):
    """Histogram mapping requires both cumulative histograms to be non-empty."""


class IndexOutOfRange(CloudColorError):
    """Subset refers to point indices outside the cloud."""


class InvalidSpec(CloudColorError):
    """Synthetic pair specification is out of range."""


class InvalidConfig(CloudColorError):
    """Run configuration is inconsistent (e.g. mutually exclusive flags)."""
