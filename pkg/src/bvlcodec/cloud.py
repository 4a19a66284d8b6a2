"""Voxelized point clouds: construction, PLY I/O, quantization, permutation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import PlyError

_AXIS_ORDERINGS: tuple[tuple[int, int, int], ...] = tuple(itertools.permutations((0, 1, 2)))
PERMUTATION_COUNT = len(_AXIS_ORDERINGS)


@dataclass(frozen=True)
class VoxelCloud:
    """A set of occupied integer voxels inside an (Nx, Ny, Nz) grid."""

    dims: tuple[int, int, int]
    points: frozenset[tuple[int, int, int]]

    def __post_init__(self) -> None:
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValueError(f"invalid dims {self.dims!r}")

    @classmethod
    def from_points(cls, points, dims: tuple[int, int, int] | None = None) -> "VoxelCloud":
        pts = frozenset((int(x), int(y), int(z)) for x, y, z in points)
        if dims is None:
            if pts:
                dims = tuple(max(p[k] for p in pts) + 1 for k in range(3))
            else:
                dims = (1, 1, 1)
        return cls((int(dims[0]), int(dims[1]), int(dims[2])), pts)

    def validate(self) -> None:
        nx, ny, nz = self.dims
        for x, y, z in self.points:
            if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
                raise ValueError(f"point {(x, y, z)} outside dims {self.dims}")

    def to_array(self) -> np.ndarray:
        """Points as an (N, 3) int64 array, in no particular order."""
        if not self.points:
            return np.empty((0, 3), dtype=np.int64)
        return np.array(list(self.points), dtype=np.int64)


@dataclass(frozen=True)
class AxisPermutation:
    """Joint relabeling of the three axes; id indexes the 6 orderings."""

    id: int

    def __post_init__(self) -> None:
        if not 0 <= self.id < PERMUTATION_COUNT:
            raise ValueError(f"permutation id {self.id} out of range")

    @property
    def axes(self) -> tuple[int, int, int]:
        return _AXIS_ORDERINGS[self.id]

    @classmethod
    def from_axes(cls, axes) -> "AxisPermutation":
        return cls(_AXIS_ORDERINGS.index((axes[0], axes[1], axes[2])))

    def inverse(self) -> "AxisPermutation":
        inv = [0, 0, 0]
        for k, a in enumerate(self.axes):
            inv[a] = k
        return AxisPermutation.from_axes(inv)

    def apply(self, cloud: VoxelCloud) -> VoxelCloud:
        a, b, c = self.axes
        dims = (cloud.dims[a], cloud.dims[b], cloud.dims[c])
        pts = frozenset((p[a], p[b], p[c]) for p in cloud.points)
        return VoxelCloud(dims, pts)


def permute_axes(cloud: VoxelCloud, permutation: AxisPermutation) -> VoxelCloud:
    return permutation.apply(cloud)


def source_bit_depth(cloud: VoxelCloud) -> int:
    """Bits needed to address the largest axis: ceil(log2(max dim))."""
    return (max(cloud.dims) - 1).bit_length()


def quantize(cloud: VoxelCloud, target_bits: int) -> VoxelCloud:
    """Right-shift coordinates down to target_bits of per-axis resolution.

    Duplicates collapse to one voxel. When target_bits exceeds the source
    depth the cloud is returned unchanged; callers flag that as a no-op.
    """
    if target_bits < 1:
        raise ValueError("target_bits must be >= 1")
    shift = source_bit_depth(cloud) - target_bits
    if shift < 0:
        return cloud
    size = 1 << target_bits
    pts = frozenset((x >> shift, y >> shift, z >> shift) for x, y, z in cloud.points)
    return VoxelCloud((size, size, size), pts)


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
_FLOAT_CODES = {"f4", "f8"}


def _split_header(data: bytes) -> tuple[str, bytes]:
    if not data.startswith(b"ply"):
        raise PlyError("not a PLY file")
    tag = data.find(b"end_header")
    if tag < 0:
        raise PlyError("missing end_header")
    nl = data.find(b"\n", tag)
    if nl < 0:
        raise PlyError("unterminated header")
    try:
        header = data[:nl].decode("ascii")
    except UnicodeDecodeError as exc:
        raise PlyError("non-ASCII header") from exc
    return header, data[nl + 1 :]


def _parse_header(header: str):
    fmt = None
    elements: list[dict] = []
    comment_dims = None
    for line in header.splitlines()[1:]:
        parts = line.split()
        if not parts:
            continue
        kw = parts[0]
        if kw == "comment":
            if len(parts) == 5 and parts[1] == "voxel_dims":
                try:
                    comment_dims = (int(parts[2]), int(parts[3]), int(parts[4]))
                except ValueError:
                    comment_dims = None
            continue
        if kw == "format":
            if len(parts) < 2:
                raise PlyError("malformed format line")
            fmt = parts[1]
        elif kw == "element":
            if len(parts) != 3:
                raise PlyError(f"malformed element line: {line!r}")
            try:
                count = int(parts[2])
            except ValueError as exc:
                raise PlyError(f"bad element count: {line!r}") from exc
            elements.append({"name": parts[1], "count": count, "props": []})
        elif kw == "property":
            if not elements:
                raise PlyError("property before any element")
            if parts[1] == "list":
                elements[-1]["props"].append(("list", parts[-1]))
            else:
                if len(parts) != 3:
                    raise PlyError(f"malformed property line: {line!r}")
                code = _SCALAR_TYPES.get(parts[1])
                if code is None:
                    raise PlyError(f"unsupported property type {parts[1]!r}")
                elements[-1]["props"].append((code, parts[2]))
        elif kw in ("end_header", "obj_info"):
            continue
        else:
            raise PlyError(f"unknown header keyword {kw!r}")
    if fmt not in ("ascii", "binary_little_endian"):
        raise PlyError(f"unsupported PLY format {fmt!r}")
    return fmt, elements, comment_dims


def _coordinate_columns(props) -> tuple[int, int, int]:
    names = [name for _, name in props]
    try:
        return names.index("x"), names.index("y"), names.index("z")
    except ValueError as exc:
        raise PlyError("vertex element lacks x, y, z properties") from exc


def _vertices_ascii(body: bytes, elements) -> np.ndarray:
    lines = [ln for ln in body.decode("ascii", errors="replace").splitlines() if ln.strip()]
    at = 0
    for element in elements:
        if element["name"] != "vertex":
            at += element["count"]
            continue
        if any(kind == "list" for kind, _ in element["props"]):
            raise PlyError("list property in vertex element is unsupported")
        cx, cy, cz = _coordinate_columns(element["props"])
        codes = [kind for kind, _ in element["props"]]
        if at + element["count"] > len(lines):
            raise PlyError("truncated vertex data")
        out = np.empty((element["count"], 3), dtype=np.int64)
        for row in range(element["count"]):
            tokens = lines[at + row].split()
            if len(tokens) < len(codes):
                raise PlyError(f"short vertex line: {lines[at + row]!r}")
            for k, col in enumerate((cx, cy, cz)):
                if codes[col] in _FLOAT_CODES:
                    value = float(tokens[col])
                    if not value.is_integer():
                        raise PlyError(f"non-integral coordinate {tokens[col]}")
                    out[row, k] = int(value)
                else:
                    out[row, k] = int(tokens[col])
        return out
    raise PlyError("no vertex element")


def _vertices_binary(body: bytes, elements) -> np.ndarray:
    offset = 0
    for element in elements:
        has_list = any(kind == "list" for kind, _ in element["props"])
        if element["name"] != "vertex":
            if has_list:
                raise PlyError("cannot skip a list-typed element before vertex")
            itemsize = sum(np.dtype("<" + code).itemsize for code, _ in element["props"])
            offset += element["count"] * itemsize
            continue
        if has_list:
            raise PlyError("list property in vertex element is unsupported")
        cx, cy, cz = _coordinate_columns(element["props"])
        dtype = np.dtype([(f"f{i}", "<" + code) for i, (code, _) in enumerate(element["props"])])
        if offset + element["count"] * dtype.itemsize > len(body):
            raise PlyError("truncated vertex data")
        table = np.frombuffer(body, dtype=dtype, count=element["count"], offset=offset)
        out = np.empty((element["count"], 3), dtype=np.int64)
        for k, col in enumerate((cx, cy, cz)):
            values = table[f"f{col}"]
            if element["props"][col][0] in _FLOAT_CODES:
                if not np.all(np.isfinite(values)) or not np.array_equal(values, np.floor(values)):
                    raise PlyError("non-integral coordinate in binary vertex data")
            out[:, k] = values.astype(np.int64)
        return out
    raise PlyError("no vertex element")


def parse_ply(data: bytes, dims: tuple[int, int, int] | None = None) -> VoxelCloud:
    """Read vertex x, y, z from an ASCII or binary little-endian PLY.

    Other vertex properties and other elements are ignored. Duplicate
    vertices collapse to one voxel. dims defaults to max coordinate + 1 per
    axis; an explicit argument wins, then a `comment voxel_dims` header line.
    """
    header, body = _split_header(data)
    fmt, elements, comment_dims = _parse_header(header)
    if fmt == "ascii":
        coords = _vertices_ascii(body, elements)
    else:
        coords = _vertices_binary(body, elements)
    if coords.size and coords.min() < 0:
        raise PlyError("negative coordinate")
    if dims is None:
        dims = comment_dims
    cloud = VoxelCloud.from_points(map(tuple, coords.tolist()), dims)
    try:
        cloud.validate()
    except ValueError as exc:
        raise PlyError(str(exc)) from exc
    return cloud


def write_ply(cloud: VoxelCloud, binary: bool = False) -> bytes:
    """Serialize the voxel set as PLY; dims travel in a comment line."""
    pts = sorted(cloud.points)
    nx, ny, nz = cloud.dims
    header = (
        "ply\n"
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0\n"
        f"comment voxel_dims {nx} {ny} {nz}\n"
        f"element vertex {len(pts)}\n"
        "property int x\n"
        "property int y\n"
        "property int z\n"
        "end_header\n"
    ).encode("ascii")
    if binary:
        arr = np.array(pts, dtype="<i4") if pts else np.empty((0, 3), dtype="<i4")
        return header + arr.tobytes()
    return header + "".join(f"{x} {y} {z}\n" for x, y, z in pts).encode("ascii")
