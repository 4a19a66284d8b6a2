"""Cloud model, PLY I/O, quantization, and permutation tests."""

import numpy as np
import pytest

from bvlcodec import AxisPermutation, PlyError, VoxelCloud, parse_ply, quantize, write_ply
from bvlcodec.cloud import PERMUTATION_COUNT, source_bit_depth


def _ascii_ply(vertices, extra_header="", fmt="ascii"):
    body = "".join(f"{v[0]} {v[1]} {v[2]}\n" for v in vertices)
    return (
        "ply\n"
        f"format {fmt} 1.0\n"
        f"{extra_header}"
        f"element vertex {len(vertices)}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "end_header\n" + body
    ).encode()


def test_parse_basic_and_default_dims():
    cloud = parse_ply(_ascii_ply([(0, 0, 0), (1, 2, 3)]))
    assert cloud.dims == (2, 3, 4)
    assert cloud.points == {(0, 0, 0), (1, 2, 3)}


def test_parse_duplicates_collapse():
    cloud = parse_ply(_ascii_ply([(4, 4, 4), (4, 4, 4)]))
    assert len(cloud.points) == 1


def test_parse_negative_coordinate_rejected():
    with pytest.raises(PlyError):
        parse_ply(_ascii_ply([(-1, 0, 0)]))


def test_parse_non_integral_float_rejected():
    with pytest.raises(PlyError):
        parse_ply(_ascii_ply([(0.5, 0, 0)]))


def test_parse_integral_floats_accepted():
    cloud = parse_ply(_ascii_ply([(2.0, 3.0, 4.0)]))
    assert cloud.points == {(2, 3, 4)}


def test_parse_malformed_header():
    with pytest.raises(PlyError):
        parse_ply(b"not a ply at all")
    with pytest.raises(PlyError):
        parse_ply(b"ply\nformat ascii 1.0\nelement vertex 1\n")  # no end_header


def test_parse_truncated_bodies():
    ascii_data = _ascii_ply([(0, 0, 0), (1, 1, 1)])
    with pytest.raises(PlyError):
        parse_ply(ascii_data.rsplit(b"\n", 2)[0] + b"\n")  # one vertex line missing
    cloud = VoxelCloud.from_points({(0, 0, 0), (3, 2, 1)})
    binary_data = write_ply(cloud, binary=True)
    with pytest.raises(PlyError):
        parse_ply(binary_data[:-4])


def test_parse_dims_override_and_comment():
    data = _ascii_ply([(1, 1, 1)], extra_header="comment voxel_dims 8 9 10\n")
    assert parse_ply(data).dims == (8, 9, 10)
    assert parse_ply(data, dims=(4, 4, 4)).dims == (4, 4, 4)
    with pytest.raises(PlyError):
        parse_ply(data, dims=(1, 1, 1))  # point outside explicit dims


def test_parse_extra_properties_ignored():
    data = (
        "ply\nformat ascii 1.0\n"
        "element vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\n"
        "end_header\n"
        "0 0 0 255\n"
        "1 1 1 128\n"
    ).encode()
    assert parse_ply(data).points == {(0, 0, 0), (1, 1, 1)}


def test_write_parse_round_trip_ascii_and_binary():
    rng = np.random.default_rng(0)
    pts = set(map(tuple, rng.integers(0, 50, size=(400, 3)).tolist()))
    cloud = VoxelCloud.from_points(pts, (64, 64, 64))
    for binary in (False, True):
        again = parse_ply(write_ply(cloud, binary=binary))
        assert again == cloud  # dims survive via the comment line


def test_binary_parse_matches_ascii():
    rng = np.random.default_rng(1)
    pts = set(map(tuple, rng.integers(0, 30, size=(100, 3)).tolist()))
    cloud = VoxelCloud.from_points(pts)
    assert parse_ply(write_ply(cloud, binary=True)).points == cloud.points


def test_empty_vertex_element():
    cloud = parse_ply(_ascii_ply([]))
    assert cloud.points == frozenset()
    assert cloud.dims == (1, 1, 1)


def test_quantize_shift_by_one():
    cloud = VoxelCloud.from_points({(2046, 0, 3)}, (2048, 2048, 2048))
    q = quantize(cloud, 10)
    assert q.points == {(1023, 0, 1)}
    assert q.dims == (1024, 1024, 1024)


def test_quantize_identity_at_source_depth():
    cloud = VoxelCloud.from_points({(5, 6, 7)}, (100, 100, 100))
    q = quantize(cloud, source_bit_depth(cloud))
    assert q.points == cloud.points
    assert q.dims == (128, 128, 128)


def test_quantize_collapse_matches_brute_force():
    cloud = VoxelCloud.from_points({(4, 5, 6), (5, 5, 7)}, (2048, 2048, 2048))
    q = quantize(cloud, 8)
    shift = source_bit_depth(cloud) - 8
    expected = {(x >> shift, y >> shift, z >> shift) for x, y, z in cloud.points}
    assert shift == 3
    assert q.points == expected == {(0, 0, 0)}


def test_quantize_random_matches_brute_force():
    rng = np.random.default_rng(17)
    pts = set(map(tuple, rng.integers(0, 1024, size=(500, 3)).tolist()))
    cloud = VoxelCloud.from_points(pts, (1024, 1024, 1024))
    for bits in (9, 7, 4, 1):
        shift = 10 - bits
        expected = {(x >> shift, y >> shift, z >> shift) for x, y, z in pts}
        q = quantize(cloud, bits)
        assert q.points == expected
        assert q.dims == (1 << bits,) * 3
        assert quantize(q, bits).points == q.points  # idempotent at same depth


def test_quantize_above_source_depth_is_noop():
    cloud = VoxelCloud.from_points({(1, 2, 3)}, (10, 10, 10))
    assert quantize(cloud, 12) is cloud


def test_permutation_example_and_identity():
    cloud = VoxelCloud.from_points({(1, 2, 3)}, (8, 8, 8))
    ident = AxisPermutation(0)
    assert ident.apply(cloud) == cloud
    zxy = AxisPermutation.from_axes((2, 0, 1))
    assert zxy.apply(cloud).points == {(3, 1, 2)}


def test_permutation_round_trip_all_six():
    rng = np.random.default_rng(3)
    pts = set(map(tuple, rng.integers(0, 40, size=(1000, 3)).tolist()))
    cloud = VoxelCloud.from_points(pts, (40, 50, 60))
    for pid in range(PERMUTATION_COUNT):
        perm = AxisPermutation(pid)
        permuted = perm.apply(cloud)
        assert len(permuted.points) == len(cloud.points)
        assert perm.inverse().apply(permuted) == cloud


def test_permutation_dims_follow_axes():
    cloud = VoxelCloud.from_points({(0, 0, 0)}, (2, 3, 4))
    for pid in range(PERMUTATION_COUNT):
        perm = AxisPermutation(pid)
        dims = perm.apply(cloud).dims
        assert sorted(dims) == [2, 3, 4]
        a, b, c = perm.axes
        assert dims == (cloud.dims[a], cloud.dims[b], cloud.dims[c])


def test_invalid_inputs():
    with pytest.raises(ValueError):
        VoxelCloud((0, 1, 1), frozenset())
    with pytest.raises(ValueError):
        AxisPermutation(6)
    with pytest.raises(ValueError):
        quantize(VoxelCloud.from_points({(0, 0, 0)}), 0)
    bad = VoxelCloud((2, 2, 2), frozenset({(5, 0, 0)}))
    with pytest.raises(ValueError):
        bad.validate()
