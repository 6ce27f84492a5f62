import numpy as np
import pytest

from cloudcolor import read_ply, write_ply
from cloudcolor.errors import (
    IoFailure,
    MalformedHeader,
    MissingProperty,
    TruncatedBody,
    UnsupportedFormat,
)

from conftest import make_cloud, random_cloud


def _ascii_ply(body_lines, count, extra_props=(), fmt="ascii"):
    props = [
        "property float x", "property float y", "property float z",
        "property uchar red", "property uchar green", "property uchar blue",
    ] + list(extra_props)
    header = ["ply", f"format {fmt} 1.0", f"element vertex {count}"] + props + ["end_header"]
    return ("\n".join(header) + "\n" + "\n".join(body_lines) + ("\n" if body_lines else "")).encode()


class TestReadPly:
    def test_single_ascii_vertex(self, tmp_path):
        p = tmp_path / "one.ply"
        p.write_bytes(_ascii_ply(["0 0 0 255 0 0"], 1))
        cloud = read_ply(p)
        assert cloud.count == 1
        assert np.array_equal(cloud.colors, [[255, 0, 0]])
        assert np.array_equal(cloud.positions, [[0.0, 0.0, 0.0]])

    def test_binary_matches_ascii(self, tmp_path):
        pa = tmp_path / "a.ply"
        pa.write_bytes(_ascii_ply(["0 0 0 255 0 0"], 1))
        cloud = make_cloud([[0, 0, 0]], [[255, 0, 0]])
        pb = tmp_path / "b.ply"
        write_ply(cloud, pb, "binary_little_endian")
        assert read_ply(pb).equal_to(read_ply(pa))

    def test_roundtrip_1000_points(self, tmp_path, rng):
        cloud = random_cloud(rng, 1000, scale=10.0)
        for fmt in ("ascii", "binary_little_endian"):
            path = tmp_path / f"rt_{fmt}.ply"
            write_ply(cloud, path, fmt)
            back = read_ply(path)
            assert np.array_equal(back.positions, cloud.positions)
            assert np.array_equal(back.colors, cloud.colors)

    def test_extra_scalar_properties_skipped(self, tmp_path):
        p = tmp_path / "extra.ply"
        p.write_bytes(_ascii_ply(
            ["1 2 3 10 20 30 0.5 0.5 0.0 128"], 1,
            extra_props=["property float nx", "property float ny",
                         "property float nz", "property uchar alpha"]))
        cloud = read_ply(p)
        assert np.array_equal(cloud.positions, [[1.0, 2.0, 3.0]])
        assert np.array_equal(cloud.colors, [[10, 20, 30]])

    def test_missing_color_property(self, tmp_path):
        p = tmp_path / "nocolor.ply"
        header = ["ply", "format ascii 1.0", "element vertex 1",
                  "property float x", "property float y", "property float z",
                  "end_header", "0 0 0"]
        p.write_bytes(("\n".join(header) + "\n").encode())
        with pytest.raises(MissingProperty):
            read_ply(p)

    def test_integer_position_property_rejected(self, tmp_path):
        p = tmp_path / "intpos.ply"
        header = ["ply", "format ascii 1.0", "element vertex 1",
                  "property int x", "property float y", "property float z",
                  "property uchar red", "property uchar green", "property uchar blue",
                  "end_header", "0 0 0 1 2 3"]
        p.write_bytes(("\n".join(header) + "\n").encode())
        with pytest.raises(MissingProperty):
            read_ply(p)

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "bad.ply"
        p.write_bytes(b"ply\nformat ascii 1.0\nelement vertex nope\nend_header\n")
        with pytest.raises(MalformedHeader):
            read_ply(p)
        p.write_bytes(b"not a ply file\n")
        with pytest.raises(MalformedHeader):
            read_ply(p)

    def test_big_endian_rejected(self, tmp_path):
        p = tmp_path / "big.ply"
        p.write_bytes(_ascii_ply([], 0, fmt="binary_big_endian"))
        with pytest.raises(UnsupportedFormat):
            read_ply(p)

    def test_truncated_ascii_body(self, tmp_path):
        p = tmp_path / "short.ply"
        p.write_bytes(_ascii_ply(["0 0 0 1 2 3"], 2))
        with pytest.raises(TruncatedBody):
            read_ply(p)

    def test_truncated_binary_body(self, tmp_path):
        cloud = make_cloud([[0, 0, 0], [1, 1, 1]], [[1, 2, 3], [4, 5, 6]])
        p = tmp_path / "cut.ply"
        write_ply(cloud, p, "binary_little_endian")
        data = p.read_bytes()
        p.write_bytes(data[:-10])
        with pytest.raises(TruncatedBody):
            read_ply(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailure):
            read_ply(tmp_path / "absent.ply")


class TestWritePly:
    def test_empty_cloud(self, tmp_path):
        cloud = make_cloud(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))
        p = tmp_path / "empty.ply"
        write_ply(cloud, p, "ascii")
        text = p.read_text()
        assert "element vertex 0" in text
        assert read_ply(p).count == 0

    def test_ascii_header_property_order(self, tmp_path):
        cloud = make_cloud([[0, 0, 0], [1, 2, 3]], [[1, 2, 3], [4, 5, 6]])
        p = tmp_path / "two.ply"
        write_ply(cloud, p, "ascii")
        lines = p.read_text().splitlines()
        props = [l.split()[-1] for l in lines if l.startswith("property")]
        assert props == ["x", "y", "z", "red", "green", "blue"]

    def test_roundtrip_10k_random(self, tmp_path, rng):
        cloud = random_cloud(rng, 10000, scale=100.0)
        for fmt in ("ascii", "binary_little_endian"):
            path = tmp_path / f"big_{fmt}.ply"
            write_ply(cloud, path, fmt)
            back = read_ply(path)
            assert np.array_equal(back.positions, cloud.positions)
            assert np.array_equal(back.colors, cloud.colors)
