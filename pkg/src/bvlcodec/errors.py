"""Exception types shared across the codec."""


class CodecError(Exception):
    """Base class for all codec errors."""


class PlyError(CodecError):
    """Malformed or unsupported PLY input."""


class EmptyCloudError(CodecError):
    """The operation needs at least one occupied voxel."""


class BitstreamError(CodecError):
    """Corrupt or inconsistent coded payload."""


class TruncatedStreamError(BitstreamError):
    """Coded payload ended before the expected data."""


class ContainerError(CodecError):
    """Invalid container framing (magic, version, or segmentation)."""
