"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SonomapError(Exception):
    """Base class for all package errors."""


class GeometryError(SonomapError, ValueError):
    pass


class HeadingDegenerate(GeometryError):
    """Sensor optical axis is (nearly) vertical, so no planar heading exists."""


class FrameError(GeometryError):
    """A point cloud was passed in the wrong coordinate frame."""


class ParseError(SonomapError, ValueError):
    """Malformed input file.

    Carries the file path plus a line number (text formats), byte offset
    (binary formats) or JSON pointer (structured documents) so the offending
    position can be reported.
    """

    def __init__(self, message, path=None, line=None, offset=None, pointer=None):
        self.path = None if path is None else str(path)
        self.line = line
        self.offset = offset
        self.pointer = pointer
        self.reason = message
        where = []
        if self.path is not None:
            where.append(self.path)
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        if pointer is not None:
            where.append(pointer)
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MonotonicityError(ParseError):
    pass


class FieldCountError(ParseError):
    pass


class TruncationError(ParseError):
    def __init__(self, message, path=None, line=None, offset=None, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        super().__init__(message, path=path, line=line, offset=offset)


class UnsupportedCodec(ParseError):
    def __init__(self, format_tag, path=None, offset=None):
        self.format_tag = format_tag
        super().__init__(f"unsupported WAV codec (format tag 0x{format_tag:04x})", path=path, offset=offset)


class DuplicateKeyError(ParseError):
    pass


def has_position(err):
    return any(getattr(err, k, None) is not None for k in ("line", "offset", "pointer"))


class SampleRateMismatch(SonomapError, ValueError):
    def __init__(self, message, path=None, pointer=None):
        self.path = None if path is None else str(path)
        self.pointer = pointer
        prefix = ":".join(str(v) for v in (self.path, pointer) if v is not None)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MissingGridCell(SonomapError, KeyError):
    """A BRIR lookup or full-grid check hit an absent (azimuth, distance) cell."""

    def __init__(self, azimuth_deg, distance_m, message=None):
        self.azimuth_deg = azimuth_deg
        self.distance_m = distance_m
        self.message = message or f"no BRIR for azimuth {azimuth_deg} deg, distance {distance_m} m"
        super().__init__(self.message)

    def __str__(self):
        return self.message


class SceneError(SonomapError, ValueError):
    """Invalid synthetic scene or pose outside the scene."""


class FrameProcessingError(SonomapError):
    """Wraps a failure while processing one replayed frame."""

    def __init__(self, frame_index, cause, path=None, timestamp=None):
        self.frame_index = frame_index
        self.path = None if path is None else str(path)
        self.timestamp = timestamp
        self.cause = cause
        where = f"frame {frame_index}"
        if timestamp is not None:
            where += f" (t={timestamp:.6f})"
        if self.path is not None:
            where += f" [{self.path}]"
        super().__init__(f"{where}: {cause}")
