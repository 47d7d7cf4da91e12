import gzip
import struct
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest
from PIL import Image

from primvox import (
    GenConfig,
    ShapeClass,
    VolumeFormatError,
    VolumeHeader,
    XyRule,
    ZRule,
    build_primitive,
    composite,
    extract_shell,
    read_volume,
    write_volume,
    render_preview,
)
from primvox.volio import VOX_OFFSET, _pack_nifti_header

DATA = Path(__file__).parent / "data"


class TestWriteRead:
    def test_zero_volume_size(self, tmp_path):
        g = np.zeros((96, 96, 96), dtype=np.uint8)
        path = tmp_path / "zero.nii"
        write_volume(g, VolumeHeader(dims=(96, 96, 96)), path)
        assert path.stat().st_size == 352 + 96**3

    @pytest.mark.parametrize("suffix", [".nii", ".nii.gz", ".raw"])
    @pytest.mark.parametrize("datatype", ["uint8", "uint16"])
    def test_round_trip(self, tmp_path, suffix, datatype):
        rng = np.random.default_rng(hash((suffix, datatype)) % 2**32)
        dims = tuple(int(d) for d in rng.integers(4, 20, size=3))
        info = np.iinfo(datatype)
        g = rng.integers(0, info.max + 1, size=dims).astype(datatype)
        path = tmp_path / f"vol{suffix}"
        write_volume(g, VolumeHeader(dims=dims, datatype=datatype), path)
        back, hdr = read_volume(path)
        assert np.array_equal(back, g)
        assert hdr.dims == dims
        assert hdr.datatype == datatype

    def test_byte_determinism(self, tmp_path):
        g = np.arange(4 * 5 * 6, dtype=np.uint8).reshape(4, 5, 6)
        a, b = tmp_path / "a.nii.gz", tmp_path / "b.nii.gz"
        write_volume(g, VolumeHeader(dims=(4, 5, 6)), a)
        write_volume(g, VolumeHeader(dims=(4, 5, 6)), b)
        assert a.read_bytes() == b.read_bytes()

    def test_golden_headers(self):
        assert (
            _pack_nifti_header(VolumeHeader(dims=(96, 96, 96)))
            == (DATA / "golden_header_u8.bin").read_bytes()
        )
        assert (
            _pack_nifti_header(
                VolumeHeader(dims=(96, 96, 96), datatype="uint16")
            )
            == (DATA / "golden_header_u16.bin").read_bytes()
        )

    def test_datatype_overflow(self, tmp_path):
        g = np.full((4, 4, 4), 300, dtype=np.uint16)
        with pytest.raises(ValueError, match="overflow"):
            write_volume(g, VolumeHeader(dims=(4, 4, 4)), tmp_path / "x.nii")

    def test_shape_mismatch(self, tmp_path):
        g = np.zeros((4, 4, 4), dtype=np.uint8)
        with pytest.raises(ValueError):
            write_volume(g, VolumeHeader(dims=(4, 4, 5)), tmp_path / "x.nii")


class TestReadErrors:
    def _write_valid(self, path):
        g = np.zeros((4, 4, 4), dtype=np.uint8)
        write_volume(g, VolumeHeader(dims=(4, 4, 4)), path)

    def test_two_file_magic_rejected(self, tmp_path):
        path = tmp_path / "x.nii"
        self._write_valid(path)
        blob = bytearray(path.read_bytes())
        struct.pack_into("4s", blob, 344, b"ni1\x00")
        path.write_bytes(bytes(blob))
        with pytest.raises(VolumeFormatError, match="ni1"):
            read_volume(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.nii"
        self._write_valid(path)
        blob = bytearray(path.read_bytes())
        struct.pack_into("4s", blob, 344, b"junk")
        path.write_bytes(bytes(blob))
        with pytest.raises(VolumeFormatError, match="magic"):
            read_volume(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "x.nii"
        self._write_valid(path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(VolumeFormatError, match="payload"):
            read_volume(path)

    def test_unsupported_datatype(self, tmp_path):
        path = tmp_path / "x.nii"
        self._write_valid(path)
        blob = bytearray(path.read_bytes())
        struct.pack_into("<h", blob, 70, 16)  # float32
        path.write_bytes(bytes(blob))
        with pytest.raises(VolumeFormatError, match="datatype"):
            read_volume(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(VolumeFormatError):
            read_volume(tmp_path / "nope.nii")

    def test_missing_sidecar(self, tmp_path):
        path = tmp_path / "x.raw"
        path.write_bytes(b"\x00" * 64)
        with pytest.raises(VolumeFormatError, match="sidecar"):
            read_volume(path)


class TestPreview:
    def _sample(self, s, m):
        return SimpleNamespace(s_volume=s, m_volume=m)

    def test_all_zero_black_panel(self, tmp_path):
        s = np.zeros((16, 16, 16), dtype=np.uint8)
        m = np.zeros_like(s)
        out = tmp_path / "p.png"
        render_preview(self._sample(s, m), "z", 8, out)
        img = np.asarray(Image.open(out))
        assert img.shape == (16, 16 + 2 + 16, 3)
        assert not img[:, :16].any()

    def test_pillar_ring_and_disc(self, tmp_path):
        cfg = GenConfig(grid=(96, 96, 96), ia_enabled=False)
        obj = build_primitive(
            ShapeClass(XyRule.ELLIPSE, ZRule.PILLAR), cfg,
            np.random.default_rng(0),
        )
        s, m = composite([(obj, (48, 48, 48))], cfg)
        out = tmp_path / "p.png"
        render_preview(self._sample(s, m), "z", 48, out)
        img = np.asarray(Image.open(out))
        w = s.shape[0]
        s_panel = img[:, :w]
        m_panel = img[:, w + 2:]
        ring_px = int((s_panel[:, :, 0] == 128).sum())
        disc_px = int((m_panel.any(axis=2)).sum())
        # mid slice of a pillar: S shows the slice outline, m the full disc
        slice_fill = int(obj.occupancy[:, :, 15].sum())
        slice_ring = int(
            extract_shell(obj.occupancy)[:, :, 15].sum()
        )
        assert disc_px == slice_fill
        assert ring_px == slice_ring
        assert ring_px < disc_px

    def test_out_of_range_slice(self, tmp_path):
        s = np.zeros((8, 8, 8), dtype=np.uint8)
        with pytest.raises(ValueError, match="out of range"):
            render_preview(self._sample(s, s), "z", 8, tmp_path / "p.png")

    def test_bad_axis(self, tmp_path):
        s = np.zeros((8, 8, 8), dtype=np.uint8)
        with pytest.raises(ValueError, match="axis"):
            render_preview(self._sample(s, s), "w", 0, tmp_path / "p.png")
