"""Volume I/O: minimal single-file NIfTI-1, raw+sidecar, PNG previews.

Only the layouts this tool writes are supported on read: little-endian
single-file NIfTI-1 ("n+1"), uint8 or uint16, no extensions, payload at
byte 352. Everything is byte-deterministic; gzip output uses mtime=0.
"""

from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

HEADER_SIZE = 348
VOX_OFFSET = 352
_DTYPE_CODES = {"uint8": 2, "uint16": 512}
_CODE_DTYPES = {2: np.uint8, 512: np.uint16}
_BITPIX = {"uint8": 8, "uint16": 16}


class VolumeFormatError(Exception):
    """Unreadable or unsupported volume file."""


@dataclass
class VolumeHeader:
    dims: tuple[int, int, int]
    datatype: str = "uint8"
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if self.datatype not in _DTYPE_CODES:
            raise ValueError(f"unsupported datatype {self.datatype!r}")


def _pack_nifti_header(header: VolumeHeader) -> bytes:
    buf = bytearray(VOX_OFFSET)  # header + 4-byte extension flag (zeros)
    w, h, d = header.dims
    struct.pack_into("<i", buf, 0, HEADER_SIZE)
    struct.pack_into("<8h", buf, 40, 3, w, h, d, 1, 1, 1, 1)
    struct.pack_into("<h", buf, 70, _DTYPE_CODES[header.datatype])
    struct.pack_into("<h", buf, 72, _BITPIX[header.datatype])
    sx, sy, sz = header.spacing
    struct.pack_into("<8f", buf, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", buf, 108, float(VOX_OFFSET))
    struct.pack_into("<f", buf, 112, 1.0)  # scl_slope
    descrip = b"primvox"
    struct.pack_into("80s", buf, 148, descrip)
    struct.pack_into("<h", buf, 252, 1)  # qform_code: identity quaternion
    struct.pack_into("<h", buf, 254, 1)  # sform_code
    struct.pack_into("<4f", buf, 280, sx, 0.0, 0.0, 0.0)
    struct.pack_into("<4f", buf, 296, 0.0, sy, 0.0, 0.0)
    struct.pack_into("<4f", buf, 312, 0.0, 0.0, sz, 0.0)
    struct.pack_into("4s", buf, 344, b"n+1\x00")
    return bytes(buf)


def write_volume(grid: np.ndarray, header: VolumeHeader, path: str | Path) -> None:
    """Write a 3D integer grid, format chosen by extension.

    .nii / .nii.gz: single-file NIfTI-1. .raw: x-fastest payload plus a
    JSON sidecar at <path>.json.
    """
    path = Path(path)
    if tuple(grid.shape) != tuple(header.dims):
        raise ValueError(f"grid shape {grid.shape} != header dims {header.dims}")
    dtype = np.dtype(header.datatype)
    info = np.iinfo(dtype)
    gmax = int(grid.max()) if grid.size else 0
    gmin = int(grid.min()) if grid.size else 0
    if gmax > info.max or gmin < info.min:
        raise ValueError(
            f"grid values [{gmin}, {gmax}] overflow {header.datatype}"
        )
    payload = np.ascontiguousarray(grid).astype(dtype).tobytes(order="F")

    name = path.name
    if name.endswith(".nii") or name.endswith(".nii.gz"):
        blob = _pack_nifti_header(header) + payload
        if name.endswith(".gz"):
            with open(path, "wb") as f:
                with gzip.GzipFile(
                    filename="", mode="wb", fileobj=f, compresslevel=6, mtime=0
                ) as gz:
                    gz.write(blob)
        else:
            path.write_bytes(blob)
    elif name.endswith(".raw"):
        path.write_bytes(payload)
        sidecar = {
            "dims": list(header.dims),
            "datatype": header.datatype,
            "order": "x-fastest",
            "endianness": "little",
            "spacing": list(header.spacing),
        }
        Path(str(path) + ".json").write_text(
            json.dumps(sidecar, indent=2) + "\n"
        )
    else:
        raise ValueError(f"unknown volume extension on {path.name!r}")


def read_volume(path: str | Path) -> tuple[np.ndarray, VolumeHeader]:
    """Inverse of write_volume for files this tool produced."""
    path = Path(path)
    if not path.exists():
        raise VolumeFormatError(f"{path}: no such file")
    name = path.name
    if name.endswith(".nii") or name.endswith(".nii.gz"):
        if name.endswith(".gz"):
            with gzip.open(path, "rb") as f:
                blob = f.read()
        else:
            blob = path.read_bytes()
        return _parse_nifti(blob, str(path))
    if name.endswith(".raw"):
        sidecar_path = Path(str(path) + ".json")
        if not sidecar_path.exists():
            raise VolumeFormatError(f"{path}: missing sidecar {sidecar_path.name}")
        sidecar = json.loads(sidecar_path.read_text())
        if sidecar.get("endianness") != "little" or sidecar.get("order") != "x-fastest":
            raise VolumeFormatError(f"{path}: unsupported raw layout")
        header = VolumeHeader(
            dims=tuple(sidecar["dims"]),
            datatype=sidecar["datatype"],
            spacing=tuple(sidecar.get("spacing", (1.0, 1.0, 1.0))),
        )
        payload = path.read_bytes()
        return _decode_payload(payload, header, str(path)), header
    raise VolumeFormatError(f"{path}: unknown volume extension")


def _parse_nifti(blob: bytes, name: str) -> tuple[np.ndarray, VolumeHeader]:
    if len(blob) < VOX_OFFSET:
        raise VolumeFormatError(f"{name}: truncated header")
    magic = struct.unpack_from("4s", blob, 344)[0]
    if magic == b"ni1\x00":
        raise VolumeFormatError(
            f"{name}: two-file NIfTI-1 (magic 'ni1') is not supported"
        )
    if magic != b"n+1\x00":
        raise VolumeFormatError(f"{name}: bad magic {magic!r}")
    (sizeof_hdr,) = struct.unpack_from("<i", blob, 0)
    if sizeof_hdr != HEADER_SIZE:
        raise VolumeFormatError(
            f"{name}: sizeof_hdr={sizeof_hdr}, expected {HEADER_SIZE} "
            "(big-endian files are not supported)"
        )
    dim = struct.unpack_from("<8h", blob, 40)
    if dim[0] != 3:
        raise VolumeFormatError(f"{name}: only 3D volumes supported, ndim={dim[0]}")
    dims = (dim[1], dim[2], dim[3])
    (datatype_code,) = struct.unpack_from("<h", blob, 70)
    if datatype_code not in _CODE_DTYPES:
        raise VolumeFormatError(f"{name}: unsupported datatype code {datatype_code}")
    (vox_offset,) = struct.unpack_from("<f", blob, 108)
    vox_offset = int(vox_offset)
    if vox_offset < VOX_OFFSET:
        raise VolumeFormatError(f"{name}: bad vox_offset {vox_offset}")
    pixdim = struct.unpack_from("<8f", blob, 76)
    datatype = "uint8" if datatype_code == 2 else "uint16"
    header = VolumeHeader(
        dims=dims, datatype=datatype, spacing=tuple(pixdim[1:4])
    )
    return _decode_payload(blob[vox_offset:], header, name), header


def _decode_payload(payload: bytes, header: VolumeHeader, name: str) -> np.ndarray:
    dtype = np.dtype(header.datatype).newbyteorder("<")
    expected = int(np.prod(header.dims)) * dtype.itemsize
    if len(payload) < expected:
        raise VolumeFormatError(
            f"{name}: payload {len(payload)} bytes, dims imply {expected}"
        )
    arr = np.frombuffer(payload[:expected], dtype=dtype)
    grid = arr.reshape(header.dims, order="F")
    return np.ascontiguousarray(grid).astype(np.dtype(header.datatype))


# 33-entry label colour table: background black plus 32 distinct hues.
def _label_colors() -> np.ndarray:
    colors = np.zeros((33, 3), dtype=np.uint8)
    for i in range(32):
        hue = (i * 0.11) % 1.0
        colors[i + 1] = _hsv_to_rgb(hue, 0.85, 1.0 if i % 2 == 0 else 0.7)
    return colors


def _hsv_to_rgb(h: float, s: float, v: float) -> tuple[int, int, int]:
    i = int(h * 6.0) % 6
    f = h * 6.0 - int(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    r, g, b = [
        (v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)
    ][i]
    return int(r * 255), int(g * 255), int(b * 255)


_LABEL_COLORS = _label_colors()


def render_preview(sample, axis: str, slice_index: int, path: str | Path) -> None:
    """Side-by-side PNG of one slice of S (grayscale) and m (colour table)."""
    axes = {"x": 0, "y": 1, "z": 2}
    if axis not in axes:
        raise ValueError(f"axis must be one of x/y/z, got {axis!r}")
    ax = axes[axis]
    if not 0 <= slice_index < sample.s_volume.shape[ax]:
        raise ValueError(
            f"slice {slice_index} out of range for axis {axis} "
            f"(size {sample.s_volume.shape[ax]})"
        )
    s_slice = np.take(sample.s_volume, slice_index, axis=ax)
    m_slice = np.take(sample.m_volume, slice_index, axis=ax)
    s_rgb = np.repeat(s_slice.T.astype(np.uint8)[:, :, None], 3, axis=2)
    labels = m_slice.T.astype(np.int64)
    m_idx = np.where(labels == 0, 0, 1 + (labels - 1) % 32)
    m_rgb = _LABEL_COLORS[m_idx]
    gap = np.full((s_rgb.shape[0], 2, 3), 255, dtype=np.uint8)
    panel = np.concatenate([s_rgb, gap, m_rgb], axis=1)
    Image.fromarray(panel, mode="RGB").save(path)
