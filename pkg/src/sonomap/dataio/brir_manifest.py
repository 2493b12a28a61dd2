"""JSON manifest + WAV files describing a BRIR dataset.

    {"sample_rate": 48000,
     "convention": {"azimuth_zero": "front", "positive": "ccw"},
     "entries": [{"azimuth_deg": 0, "distance_m": 0.4, "wav": "brir/a0_d0.4.wav"}, ...]}

An entry may name separate mono ``left``/``right`` files instead of ``wav``.
Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..brir import BrirStore
from ..errors import DuplicateKeyError, ParseError, SampleRateMismatch
from .wav import read_wav


def _number(entry, name, where, path):
    v = entry.get(name)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseError(f"{name!r} must be a finite number", path=path, pointer=f"{where}/{name}")
    return float(v)


def parse_brir_manifest(path, require_full_grid=False):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError("manifest is not UTF-8", path=path, offset=exc.start) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg}, column {exc.colno})", path=path, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("manifest root must be an object", path=path, pointer="")
    rate = doc.get("sample_rate")
    if isinstance(rate, bool) or not isinstance(rate, int) or rate <= 0:
        raise ParseError("must be a positive integer", path=path, pointer="/sample_rate")
    sign = 1.0
    conv = doc.get("convention", {"azimuth_zero": "front", "positive": "ccw"})
    if not isinstance(conv, dict):
        raise ParseError("must be an object", path=path, pointer="/convention")
    if conv.get("azimuth_zero", "front") != "front":
        raise ParseError(f"unsupported azimuth_zero {conv.get('azimuth_zero')!r}", path=path, pointer="/convention/azimuth_zero")
    positive = conv.get("positive", "ccw")
    if positive == "cw":
        sign = -1.0
    elif positive != "ccw":
        raise ParseError(f"unsupported azimuth direction {positive!r}", path=path, pointer="/convention/positive")
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise ParseError("must be a list", path=path, pointer="/entries")

    base = path.parent
    store = BrirStore(rate)
    for i, entry in enumerate(entries):
        where = f"/entries/{i}"
        if not isinstance(entry, dict):
            raise ParseError("must be an object", path=path, pointer=where)
        az = sign * _number(entry, "azimuth_deg", where, path)
        dist = _number(entry, "distance_m", where, path)
        if dist <= 0:
            raise ParseError("distance_m must be positive", path=path, pointer=where)
        if (az, dist) in store:
            raise DuplicateKeyError(f"duplicate cell (azimuth {az} deg, distance {dist} m)", path=path, pointer=where)
        ir = _load_ir(entry, base, rate, where, path)
        store.add(az, dist, ir)
    if require_full_grid:
        store.require_full_grid()
    return store


def _load_ir(entry, base, rate, where, path):
    try:
        return _read_ir(entry, base, rate, where, path)
    except OSError as exc:
        raise ParseError(f"cannot read audio: {exc.strerror or exc}", path=path, pointer=where) from None
    except ValueError as exc:
        if isinstance(exc, (ParseError, SampleRateMismatch)):
            raise
        # e.g. a NUL byte in the file name
        raise ParseError(f"invalid audio path: {exc}", path=path, pointer=where) from None


def _read_ir(entry, base, rate, where, path):
    if isinstance(entry.get("wav"), str):
        buf = read_wav(base / entry["wav"])
        _check_rate(buf, rate, where, path)
        if buf.channels != 2:
            raise ParseError(f"{entry['wav']!r} is not stereo", path=path, pointer=where)
        return buf.samples.astype(np.float64)
    if isinstance(entry.get("left"), str) and isinstance(entry.get("right"), str):
        left, right = read_wav(base / entry["left"]), read_wav(base / entry["right"])
        for b in (left, right):
            _check_rate(b, rate, where, path)
            if b.channels != 1:
                raise ParseError("left/right files must be mono", path=path, pointer=where)
        n = max(len(left), len(right))
        ir = np.zeros((n, 2))
        ir[: len(left), 0] = left.mono()
        ir[: len(right), 1] = right.mono()
        return ir
    raise ParseError("needs 'wav' or both 'left' and 'right'", path=path, pointer=where)


def _check_rate(buf, rate, where, path):
    if buf.sample_rate != rate:
        raise SampleRateMismatch(f"WAV is {buf.sample_rate} Hz, manifest says {rate} Hz", path=path, pointer=where)
