"""PLY 1.0 point clouds (ascii and binary_little_endian).

Only the ``vertex`` element is loaded; its x, y, z properties become the
points and every other property is skipped. Vertices with non-finite
coordinates are dropped and reported through a :class:`NonFiniteVerticesWarning`.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from ..errors import ParseError, TruncationError
from ..geometry import SENSOR, PointCloud

_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
_FORMATS = ("ascii", "binary_little_endian")
_MAX_HEADER = 1 << 16


class NonFiniteVerticesWarning(UserWarning):
    def __init__(self, count, path=None):
        self.count = count
        super().__init__(f"{path}: dropped {count} vertices with non-finite coordinates")


class _Element:
    def __init__(self, name, count, line):
        self.name = name
        self.count = count
        self.line = line
        self.props = []  # (name, dtype) or (name, ("list", count_dtype, item_dtype))

    @property
    def has_lists(self):
        return any(isinstance(t, tuple) for _, t in self.props)

    def dtype(self):
        return np.dtype([(n, "<" + t) for n, t in self.props])


def _read_header(data, path):
    end = data.find(b"end_header", 0, _MAX_HEADER)
    if end < 0:
        raise ParseError("no end_header found", path=path, offset=0)
    nl = data.find(b"\n", end)
    if nl < 0:
        raise ParseError("header not terminated by newline", path=path, offset=end)
    try:
        text = data[:end].decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError("non-ASCII byte in header", path=path, offset=exc.start) from None
    lines = text.replace("\r", "").split("\n")
    if lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", path=path, line=1)
    fmt = None
    elements = []
    for lineno, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        if tok[0] == "format":
            if len(tok) != 3 or tok[1] not in _FORMATS or tok[2] != "1.0":
                raise ParseError(f"unsupported format line {line.strip()!r}", path=path, line=lineno)
            fmt = tok[1]
        elif tok[0] == "element":
            if len(tok) != 3:
                raise ParseError("malformed element line", path=path, line=lineno)
            try:
                count = int(tok[2])
            except ValueError:
                raise ParseError(f"bad element count {tok[2]!r}", path=path, line=lineno) from None
            if count < 0:
                raise ParseError("negative element count", path=path, line=lineno)
            elements.append(_Element(tok[1], count, lineno))
        elif tok[0] == "property":
            if not elements:
                raise ParseError("property before any element", path=path, line=lineno)
            if len(tok) == 5 and tok[1] == "list":
                if tok[2] not in _TYPES or tok[3] not in _TYPES:
                    raise ParseError("unknown list property type", path=path, line=lineno)
                elements[-1].props.append((tok[4], ("list", _TYPES[tok[2]], _TYPES[tok[3]])))
            elif len(tok) == 3 and tok[1] in _TYPES:
                elements[-1].props.append((tok[2], _TYPES[tok[1]]))
            else:
                raise ParseError(f"malformed property line {line.strip()!r}", path=path, line=lineno)
        else:
            raise ParseError(f"unknown header keyword {tok[0]!r}", path=path, line=lineno)
    if fmt is None:
        raise ParseError("missing format line", path=path, line=2)
    return fmt, elements, nl + 1, len(lines) + 1


def _skip_binary(data, pos, elem, path):
    if not elem.has_lists:
        size = elem.dtype().itemsize * elem.count
        if pos + size > len(data):
            raise TruncationError(
                f"element {elem.name!r} needs {size} bytes, {len(data) - pos} available",
                path=path, offset=pos, expected=size, actual=len(data) - pos,
            )
        return pos + size
    for _ in range(elem.count):
        for _, t in elem.props:
            if isinstance(t, tuple):
                cdt, idt = np.dtype("<" + t[1]), np.dtype("<" + t[2])
                if pos + cdt.itemsize > len(data):
                    raise TruncationError("truncated list count", path=path, offset=pos)
                n = int(np.frombuffer(data, cdt, 1, pos)[0])
                pos += cdt.itemsize + n * idt.itemsize
            else:
                pos += np.dtype(t).itemsize
            if pos > len(data):
                raise TruncationError(f"truncated element {elem.name!r}", path=path, offset=len(data))
    return pos


def parse_ply(path):
    path = Path(path)
    data = path.read_bytes()
    fmt, elements, body, first_body_line = _read_header(data, path)
    vertex = next((e for e in elements if e.name == "vertex"), None)
    if vertex is None:
        raise ParseError("no vertex element", path=path, line=1)
    names = [n for n, _ in vertex.props]
    for axis in "xyz":
        if axis not in names:
            raise ParseError(f"vertex element lacks property {axis!r}", path=path, line=vertex.line)
    if vertex.has_lists:
        raise ParseError("list properties in the vertex element are not supported", path=path, line=vertex.line)

    if fmt == "ascii":
        xyz = _parse_ascii(data, body, first_body_line, elements, vertex, names, path)
    else:
        pos = body
        for elem in elements:
            if elem is vertex:
                break
            pos = _skip_binary(data, pos, elem, path)
        dt = vertex.dtype()
        expected = dt.itemsize * vertex.count
        actual = len(data) - pos
        if actual < expected:
            raise TruncationError(
                f"vertex payload truncated: expected {expected} bytes, got {actual}",
                path=path, offset=pos, expected=expected, actual=actual,
            )
        rec = np.frombuffer(data, dt, vertex.count, pos)
        xyz = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)

    finite = np.all(np.isfinite(xyz), axis=1)
    dropped = int(np.count_nonzero(~finite))
    if dropped:
        warnings.warn(NonFiniteVerticesWarning(dropped, path), stacklevel=2)
        xyz = xyz[finite]
    return PointCloud(xyz, frame=SENSOR)


def _parse_ascii(data, body, first_line, elements, vertex, names, path):
    try:
        lines = data[body:].decode("ascii").replace("\r", "").split("\n")
    except UnicodeDecodeError as exc:
        raise ParseError("non-ASCII byte in body", path=path, offset=body + exc.start) from None
    idx = 0
    for elem in elements:
        if elem is vertex:
            break
        idx += elem.count
    cols = [names.index(a) for a in "xyz"]
    nprops = len(names)
    rows = lines[idx : idx + vertex.count]
    xyz = np.empty((len(rows), 3))
    for i, row in enumerate(rows):
        tok = row.split()
        lineno = first_line + idx + i
        if not tok:
            break
        if len(tok) != nprops:
            raise ParseError(f"expected {nprops} values, got {len(tok)}", path=path, line=lineno)
        try:
            xyz[i] = [float(tok[c]) for c in cols]
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    else:
        i = len(rows)
    if i < vertex.count:
        raise TruncationError(
            f"expected {vertex.count} vertices, found {i}",
            path=path, line=first_line + idx + i, expected=vertex.count, actual=i,
        )
    return xyz


def write_ply(path, points, binary=True):
    """Write float32 x, y, z vertices."""
    pts = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        f"ply\nformat {fmt} 1.0\nelement vertex {len(pts)}\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n"
    ).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            fh.write(pts.astype("<f4").tobytes())
        else:
            for p in pts:
                fh.write((" ".join(repr(float(v)) for v in p) + "\n").encode("ascii"))
