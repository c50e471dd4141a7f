"""IDX (MNIST) file reading and the image-pair maze observation encoder."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IdxFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def parse_idx(data: bytes, expected_magic: int) -> np.ndarray:
    """Decode an unsigned-byte IDX payload into an array of the declared shape."""
    if len(data) < 4:
        raise IdxFormatError("file too short for an IDX magic number")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise IdxFormatError(f"wrong magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxFormatError("truncated payload: header cut short")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    size = int(np.prod(dims, dtype=np.int64))
    if len(data) - header < size:
        raise IdxFormatError(f"truncated payload: expected {size} bytes, found {len(data) - header}")
    if len(data) - header > size:
        raise IdxFormatError(f"payload longer than declared ({len(data) - header} > {size} bytes)")
    return np.frombuffer(data, dtype=np.uint8, count=size, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray):
    """Write a uint8 array (1-D labels or 3-D images) in IDX format."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    header = struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape)
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as f:
        f.write(header + array.tobytes())


@dataclass
class IdxImageSet:
    images: np.ndarray  # (count, rows, cols) uint8
    labels: np.ndarray  # (count,) uint8
    _by_label: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def count(self) -> int:
        return self.images.shape[0]

    @property
    def rows(self) -> int:
        return self.images.shape[1]

    @property
    def cols(self) -> int:
        return self.images.shape[2]

    def indices_for(self, label: int) -> np.ndarray:
        if label not in self._by_label:
            self._by_label[label] = np.flatnonzero(self.labels == label)
        return self._by_label[label]


def load_idx(images_path, labels_path) -> IdxImageSet:
    images = parse_idx(_read_bytes(images_path), IMAGES_MAGIC)
    labels = parse_idx(_read_bytes(labels_path), LABELS_MAGIC)
    if images.ndim != 3:
        raise IdxFormatError(f"image file must be 3-D, got {images.ndim}-D")
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(f"dimension mismatch: {images.shape[0]} images vs {labels.shape[0]} labels")
    if labels.size and labels.max() > 9:
        raise IdxFormatError("labels must lie in 0-9")
    return IdxImageSet(images, labels)


def describe_idx(path) -> str:
    """One-line summary of an IDX file's header, for inspection."""
    data = _read_bytes(path)
    if len(data) < 4:
        raise IdxFormatError("file too short for an IDX magic number")
    (magic,) = struct.unpack(">I", data[:4])
    if magic not in (IMAGES_MAGIC, LABELS_MAGIC):
        raise IdxFormatError(f"wrong magic 0x{magic:08x}")
    arr = parse_idx(data, magic)
    kind = "images" if magic == IMAGES_MAGIC else "labels"
    return f"{path}: {kind} magic=0x{magic:08x} shape={'x'.join(map(str, arr.shape))}"


@dataclass(frozen=True)
class MazeObservation:
    """Either exact coordinates or a pair of digit images showing them."""

    coords: tuple[int, int] | None = None
    images: tuple[np.ndarray, np.ndarray] | None = None

    def as_vector(self) -> np.ndarray:
        if self.images is not None:
            return np.concatenate([self.images[0].ravel(), self.images[1].ravel()])
        return np.asarray(self.coords, dtype=np.float64)


def encode_state(pos, idx_set: IdxImageSet, rng: np.random.Generator) -> MazeObservation:
    """Pick a random image of digit ``x`` and one of digit ``y``; pixels scaled to [0, 1]."""
    out = []
    for digit in pos:
        digit = int(digit)
        if not 0 <= digit <= 9:
            raise ValueError(f"coordinate {digit} cannot be shown as a single digit")
        pool = idx_set.indices_for(digit)
        if len(pool) == 0:
            raise IdxFormatError(f"dataset has no image of digit {digit}")
        out.append(idx_set.images[pool[rng.integers(len(pool))]].astype(np.float64) / 255.0)
    return MazeObservation(coords=tuple(int(v) for v in pos), images=(out[0], out[1]))
