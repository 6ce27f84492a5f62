"""PLY 1.0 reader/writer for color point clouds.

Supported flavor: ascii or binary_little_endian, vertex properties
x, y, z as float/double plus red, green, blue as uchar.  Extra scalar
vertex properties (normals, alpha, ...) are skipped on read and never
written back; list properties inside the vertex element are rejected.
Written files always order properties x y z red green blue and store
positions as double, so a read/write round trip is bitwise exact.
"""

from __future__ import annotations

import numpy as np

from .cloud import ColorPointCloud
from .errors import (
    IoFailure,
    MalformedHeader,
    MissingProperty,
    TruncatedBody,
    UnsupportedFormat,
)

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_POSITION_TYPES = {"float", "float32", "double", "float64"}
_COLOR_TYPES = {"uchar", "uint8"}


class _Element:
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        self.properties: list[tuple[str, str]] = []  # (ply type, name)
        self.has_list = False


def _read_header_line(f) -> str:
    raw = f.readline()
    if not raw:
        raise MalformedHeader("unexpected end of file inside header")
    return raw.decode("ascii", errors="replace").strip()


def _parse_header(f) -> tuple[str, list[_Element]]:
    if _read_header_line(f) != "ply":
        raise MalformedHeader("file does not start with 'ply'")
    fmt = None
    elements: list[_Element] = []
    while True:
        line = _read_header_line(f)
        if line == "end_header":
            break
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        tokens = line.split()
        if tokens[0] == "format":
            if len(tokens) != 3 or tokens[2] != "1.0":
                raise MalformedHeader(f"bad format line: {line!r}")
            if tokens[1] == "binary_big_endian":
                raise UnsupportedFormat("binary_big_endian is not supported")
            if tokens[1] not in ("ascii", "binary_little_endian"):
                raise UnsupportedFormat(f"unknown format {tokens[1]!r}")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MalformedHeader(f"bad element line: {line!r}")
            try:
                count = int(tokens[2])
            except ValueError:
                raise MalformedHeader(f"bad element count: {line!r}") from None
            if count < 0:
                raise MalformedHeader(f"negative element count: {line!r}")
            elements.append(_Element(tokens[1], count))
        elif tokens[0] == "property":
            if not elements:
                raise MalformedHeader("property before any element")
            if len(tokens) >= 2 and tokens[1] == "list":
                if len(tokens) != 5:
                    raise MalformedHeader(f"bad list property: {line!r}")
                elements[-1].has_list = True
                elements[-1].properties.append(("list", tokens[4]))
            else:
                if len(tokens) != 3:
                    raise MalformedHeader(f"bad property line: {line!r}")
                if tokens[1] not in _SCALAR_TYPES:
                    raise MalformedHeader(f"unknown property type {tokens[1]!r}")
                elements[-1].properties.append((tokens[1], tokens[2]))
        else:
            raise MalformedHeader(f"unrecognized header line: {line!r}")
    if fmt is None:
        raise MalformedHeader("header has no format line")
    return fmt, elements


def _vertex_layout(vertex: _Element) -> dict[str, tuple[int, str]]:
    """Map property name -> (column index, ply type), validating requirements."""
    layout = {name: (i, ptype) for i, (ptype, name) in enumerate(vertex.properties)}
    for name in ("x", "y", "z"):
        if name not in layout:
            raise MissingProperty(f"vertex element lacks position property {name!r}")
        if layout[name][1] not in _POSITION_TYPES:
            raise MissingProperty(f"position property {name!r} must be float or double")
    for name in ("red", "green", "blue"):
        if name not in layout:
            raise MissingProperty(f"vertex element lacks color property {name!r}")
        if layout[name][1] not in _COLOR_TYPES:
            raise MissingProperty(f"color property {name!r} must be uchar")
    return layout


def _read_ascii(f, elements: list[_Element], vertex: _Element,
                layout: dict[str, tuple[int, str]]) -> ColorPointCloud:
    positions = np.empty((vertex.count, 3), dtype=np.float64)
    colors = np.empty((vertex.count, 3), dtype=np.int64)
    pos_cols = [layout[n][0] for n in ("x", "y", "z")]
    col_cols = [layout[n][0] for n in ("red", "green", "blue")]
    n_props = len(vertex.properties)

    def rows():
        for raw in f:
            line = raw.decode("ascii", errors="replace").strip()
            if line:
                yield line

    row_iter = rows()
    for element in elements:
        if element is vertex:
            break
        if element.has_list:
            raise UnsupportedFormat(
                f"cannot skip element {element.name!r} with list properties before vertices"
            )
        for _ in range(element.count):
            next(row_iter, None)
    for i in range(vertex.count):
        line = next(row_iter, None)
        if line is None:
            raise TruncatedBody(f"expected {vertex.count} vertices, got {i}")
        tokens = line.split()
        if len(tokens) < n_props:
            raise TruncatedBody(f"vertex row {i} has {len(tokens)} fields, expected {n_props}")
        try:
            for j, c in enumerate(pos_cols):
                positions[i, j] = float(tokens[c])
            for j, c in enumerate(col_cols):
                colors[i, j] = int(float(tokens[c]))
        except ValueError:
            raise TruncatedBody(f"unparseable vertex row {i}: {line!r}") from None
    if colors.size and (colors.min() < 0 or colors.max() > 255):
        raise TruncatedBody("color value outside [0, 255]")
    if not np.all(np.isfinite(positions)):
        raise TruncatedBody("non-finite vertex position")
    return ColorPointCloud(positions, colors)


def _read_binary(f, elements: list[_Element], vertex: _Element,
                 layout: dict[str, tuple[int, str]]) -> ColorPointCloud:
    for element in elements:
        if element is vertex:
            break
        if element.has_list:
            raise UnsupportedFormat(
                f"cannot skip element {element.name!r} with list properties before vertices"
            )
        stride = sum(np.dtype(_SCALAR_TYPES[t]).itemsize for t, _ in element.properties)
        f.seek(element.count * stride, 1)
    if vertex.has_list:
        raise UnsupportedFormat("list properties inside the vertex element are not supported")
    dtype = np.dtype([
        (f"p{i}", "<" + _SCALAR_TYPES[ptype])
        for i, (ptype, _) in enumerate(vertex.properties)
    ])
    body = f.read(vertex.count * dtype.itemsize)
    if len(body) < vertex.count * dtype.itemsize:
        raise TruncatedBody(
            f"vertex body has {len(body)} bytes, expected {vertex.count * dtype.itemsize}"
        )
    records = np.frombuffer(body, dtype=dtype, count=vertex.count)
    positions = np.empty((vertex.count, 3), dtype=np.float64)
    for j, name in enumerate(("x", "y", "z")):
        positions[:, j] = records[f"p{layout[name][0]}"]
    colors = np.empty((vertex.count, 3), dtype=np.uint8)
    for j, name in enumerate(("red", "green", "blue")):
        colors[:, j] = records[f"p{layout[name][0]}"]
    if not np.all(np.isfinite(positions)):
        raise TruncatedBody("non-finite vertex position")
    return ColorPointCloud(positions, colors)


def read_ply(path) -> ColorPointCloud:
    """Parse a PLY file into a ColorPointCloud, preserving vertex order."""
    try:
        f = open(path, "rb")
    except OSError as e:
        raise IoFailure(f"cannot open {path}: {e}") from e
    with f:
        fmt, elements = _parse_header(f)
        vertex = next((e for e in elements if e.name == "vertex"), None)
        if vertex is None:
            raise MalformedHeader("header declares no vertex element")
        layout = _vertex_layout(vertex)
        if fmt == "ascii":
            return _read_ascii(f, elements, vertex, layout)
        return _read_binary(f, elements, vertex, layout)


def write_ply(cloud: ColorPointCloud, path, format: str = "binary_little_endian") -> None:
    """Write the cloud as PLY with properties x y z red green blue.

    Positions are stored as double in both formats, so reading the file
    back yields a cloud bitwise equal to the input.
    """
    if format not in ("ascii", "binary_little_endian"):
        raise UnsupportedFormat(f"unknown output format {format!r}")
    header = "\n".join([
        "ply",
        f"format {format} 1.0",
        f"element vertex {cloud.count}",
        "property double x",
        "property double y",
        "property double z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]) + "\n"
    try:
        with open(path, "wb") as f:
            f.write(header.encode("ascii"))
            if format == "ascii":
                lines = []
                for (x, y, z), (r, g, b) in zip(cloud.positions, cloud.colors):
                    lines.append(f"{float(x)!r} {float(y)!r} {float(z)!r} {r} {g} {b}")
                if lines:
                    f.write(("\n".join(lines) + "\n").encode("ascii"))
            else:
                records = np.empty(cloud.count, dtype=np.dtype([
                    ("x", "<f8"), ("y", "<f8"), ("z", "<f8"),
                    ("red", "u1"), ("green", "u1"), ("blue", "u1"),
                ]))
                for j, name in enumerate(("x", "y", "z")):
                    records[name] = cloud.positions[:, j]
                for j, name in enumerate(("red", "green", "blue")):
                    records[name] = cloud.colors[:, j]
                f.write(records.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
