"""RIFF/WAVE reading (PCM16, IEEE float32) and float32 writing."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError, TruncationError, UnsupportedCodec

PCM = 0x0001
IEEE_FLOAT = 0x0003
EXTENSIBLE = 0xFFFE


@dataclass
class AudioBuffer:
    """PCM audio as an (N, channels) float array nominally in [-1, 1]."""

    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if not np.issubdtype(s.dtype, np.floating):
            s = s.astype(np.float64)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[1] not in (1, 2):
            raise ValueError(f"samples must be (N,) or (N, 1|2), got {s.shape}")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        self.sample_rate = int(self.sample_rate)
        self.samples = s

    @property
    def channels(self):
        return self.samples.shape[1]

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    def __len__(self):
        return len(self.samples)

    def mono(self):
        """The single channel of a mono buffer as a 1-D array."""
        if self.channels != 1:
            raise ValueError("buffer is not mono")
        return self.samples[:, 0]


def read_wav(path):
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ParseError("not a RIFF/WAVE file", path=path, offset=0)
    pos = 12
    fmt = None
    payload = None
    payload_at = None
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if cid == b"fmt ":
            if size < 16 or body + size > len(data):
                raise ParseError("short fmt chunk", path=path, offset=pos)
            tag, channels, rate, _, block, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == EXTENSIBLE:
                if size < 40:
                    raise ParseError("short WAVE_FORMAT_EXTENSIBLE chunk", path=path, offset=pos)
                (tag,) = struct.unpack_from("<H", data, body + 24)
            fmt = (tag, channels, rate, block, bits, pos)
        elif cid == b"data":
            payload_at = body
            end = body + size
            if end > len(data):
                raise TruncationError(
                    f"data chunk declares {size} bytes, {len(data) - body} present",
                    path=path, offset=body, expected=size, actual=len(data) - body,
                )
            payload = data[body:end]
            break
        pos = body + size + (size & 1)
    if fmt is None:
        raise ParseError("missing fmt chunk", path=path, offset=12)
    if payload is None:
        raise ParseError("missing data chunk", path=path, offset=pos)
    tag, channels, rate, block, bits, fmt_at = fmt
    if tag not in (PCM, IEEE_FLOAT):
        raise UnsupportedCodec(tag, path=path, offset=fmt_at + 8)
    if channels not in (1, 2):
        raise ParseError(f"unsupported channel count {channels}", path=path, offset=fmt_at + 10)
    if rate == 0:
        raise ParseError("zero sample rate", path=path, offset=fmt_at + 12)
    if (tag, bits) == (PCM, 16):
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif (tag, bits) == (IEEE_FLOAT, 32):
        dtype, scale = np.dtype("<f4"), None
    else:
        raise ParseError(f"unsupported bit depth {bits} for format tag 0x{tag:04x}", path=path, offset=fmt_at + 22)
    frame = dtype.itemsize * channels
    if block != frame:
        raise ParseError(f"block align {block} does not match {frame}", path=path, offset=fmt_at + 20)
    if len(payload) % frame:
        raise TruncationError(
            "data chunk is not a whole number of frames",
            path=path, offset=payload_at + len(payload), expected=frame, actual=len(payload) % frame,
        )
    raw = np.frombuffer(payload, dtype).reshape(-1, channels)
    if scale is None:
        samples = raw.astype(np.float32)
    else:
        samples = raw.astype(np.float64) * scale
    return AudioBuffer(rate, samples)


def write_wav(path, buf):
    """Write ``buf`` as IEEE float32; float32 inputs round-trip bit-exactly."""
    s = np.ascontiguousarray(buf.samples, dtype="<f4")
    nbytes = s.size * 4
    channels = buf.channels
    header = b"RIFF" + struct.pack("<I", 4 + 8 + 16 + 8 + nbytes) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, IEEE_FLOAT, channels, buf.sample_rate, buf.sample_rate * 4 * channels, 4 * channels, 32
    )
    header += b"data" + struct.pack("<I", nbytes)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(s.tobytes())


def write_pcm16(path, buf):
    """PCM16 writer, mostly for building test fixtures."""
    s = np.clip(np.round(np.asarray(buf.samples, dtype=np.float64) * 32768.0), -32768, 32767).astype("<i2")
    nbytes = s.size * 2
    ch = buf.channels
    header = b"RIFF" + struct.pack("<I", 36 + nbytes) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, PCM, ch, buf.sample_rate, buf.sample_rate * 2 * ch, 2 * ch, 16)
    header += b"data" + struct.pack("<I", nbytes)
    with open(path, "wb") as fh:
        fh.write(header + s.tobytes())
