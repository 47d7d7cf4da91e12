"""Dataset access: manifest parsing, NIfTI reading, patch sampling.

The generator's on-disk contract is all we rely on: a manifest.json
listing sample volume paths, and little-endian single-file NIfTI-1
volumes (payload at byte 352, uint8 or uint16, x-fastest order).
"""

from __future__ import annotations

import gzip
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

_DTYPES = {2: np.uint8, 512: np.uint16}


def read_nifti(path: str | Path) -> np.ndarray:
    """Minimal reader for the generator's single-file NIfTI-1 volumes."""
    path = Path(path)
    if path.name.endswith(".gz"):
        with gzip.open(path, "rb") as f:
            blob = f.read()
    else:
        blob = path.read_bytes()
    if len(blob) < 352:
        raise ValueError(f"{path}: truncated header")
    magic = struct.unpack_from("4s", blob, 344)[0]
    if magic != b"n+1\x00":
        raise ValueError(f"{path}: unexpected magic {magic!r}")
    dim = struct.unpack_from("<8h", blob, 40)
    dims = tuple(dim[1:4])
    (code,) = struct.unpack_from("<h", blob, 70)
    if code not in _DTYPES:
        raise ValueError(f"{path}: unsupported datatype {code}")
    (vox_offset,) = struct.unpack_from("<f", blob, 108)
    dtype = np.dtype(_DTYPES[code]).newbyteorder("<")
    count = int(np.prod(dims))
    payload = blob[int(vox_offset) : int(vox_offset) + count * dtype.itemsize]
    if len(payload) < count * dtype.itemsize:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=dtype).reshape(dims, order="F")


@dataclass
class SamplePair:
    image_path: Path
    mask_path: Path


@dataclass
class DatasetIndex:
    pairs: list[SamplePair]
    label_mode: str
    grid: tuple[int, int, int]
    intensity: int
    skipped: int = 0


def load_index(manifest_path: str | Path) -> DatasetIndex:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    config = manifest["config"]
    pairs = [
        SamplePair(base / e["s_path"], base / e["m_path"])
        for e in manifest["samples"]
    ]
    return DatasetIndex(
        pairs=pairs,
        label_mode=config["label_mode"],
        grid=tuple(config["grid"]),
        intensity=int(config["intensity"]),
    )


@dataclass
class PatchSampler:
    """Yields (image, mask) patches; images normalized to [0, 1].

    Unreadable volumes are skipped with a warning and counted.
    """

    index: DatasetIndex
    patch_size: int
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.default_rng(0)
    )

    def __post_init__(self) -> None:
        if any(self.patch_size > d for d in self.index.grid):
            raise ValueError(
                f"patch size {self.patch_size} exceeds grid {self.index.grid}"
            )

    def _load(self, pair: SamplePair):
        try:
            img = read_nifti(pair.image_path)
            mask = read_nifti(pair.mask_path)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", pair.image_path.name, exc)
            self.index.skipped += 1
            return None
        return img, mask

    def _crop(self, img, mask, corner):
        p = self.patch_size
        sl = tuple(slice(c, c + p) for c in corner)
        x = img[sl].astype(np.float32) / max(self.index.intensity, 1)
        y = mask[sl].astype(np.int64)
        return x, y

    def random_patch(self, pair_indices: list[int]):
        """One random crop from a randomly chosen sample."""
        for _ in range(3 * len(pair_indices) + 10):
            pos = int(self.rng.integers(0, len(pair_indices)))
            loaded = self._load(self.index.pairs[pair_indices[pos]])
            if loaded is None:
                continue
            img, mask = loaded
            corner = tuple(
                int(self.rng.integers(0, d - self.patch_size + 1))
                for d in img.shape
            )
            return self._crop(img, mask, corner)
        raise ValueError("no readable samples in the training split")

    def center_patch(self, pair_index: int):
        """Deterministic centred crop, used for evaluation."""
        loaded = self._load(self.index.pairs[pair_index])
        if loaded is None:
            return None
        img, mask = loaded
        corner = tuple((d - self.patch_size) // 2 for d in img.shape)
        return self._crop(img, mask, corner)
