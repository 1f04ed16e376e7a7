"""MNIST IDX ingestion, [-1, 1] scaling, and an offline synthetic dataset.

IDX files are the classic big-endian containers: a u32 magic (0x00000803
for rank-3 unsigned-byte image tensors, 0x00000801 for rank-1 label
vectors), the dimension sizes as u32s, then the raw payload. Both plain
and gzip-compressed files are accepted; gzip is sniffed from its 2-byte
magic. Nothing is ever downloaded — callers are told which files are
missing and where they were expected.

Images flatten row-major (28 rows of 28 columns) to 784-vectors and are
scaled by pixel/127.5 - 1, mapping 0 -> -1 and 255 -> +1 exactly.
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass

import numpy as np

from .rng import Stream, derive

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"

IMAGE_FILES = {"train": "train-images-idx3-ubyte", "test": "t10k-images-idx3-ubyte"}
LABEL_FILES = {"train": "train-labels-idx1-ubyte", "test": "t10k-labels-idx1-ubyte"}


class IdxFormatError(ValueError):
    """Byte stream is not a valid IDX container of the expected kind."""


class DatasetMissingError(FileNotFoundError):
    """Expected dataset files are absent; message lists the candidates."""


@dataclass(frozen=True)
class Dataset:
    """Flattened points in [-1, 1]^784 with optional digit labels."""

    points: np.ndarray
    labels: np.ndarray | None
    source: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 784 or pts.shape[0] < 1:
            raise ValueError(f"points must be (count, 784), got {pts.shape}")
        if np.abs(pts).max() > 1.0:
            raise ValueError("dataset coordinates must lie in [-1, 1]")
        if self.labels is not None and len(self.labels) != pts.shape[0]:
            raise ValueError("labels must align 1:1 with points")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def subsample(self, count: int, seed: int) -> np.ndarray:
        """Deterministic subsample of `count` points (without replacement)."""
        n = len(self)
        if count >= n:
            return self.points
        order = Stream(derive(seed, n, count)).permutation(n)[:count]
        return self.points[np.sort(order)]


def _maybe_gunzip(blob: bytes) -> bytes:
    if blob[:2] == GZIP_MAGIC:
        return gzip.decompress(blob)
    return blob


def parse_idx_images(blob: bytes) -> np.ndarray:
    """Parse an IDX image container into a (count, rows, cols) uint8 tensor."""
    blob = _maybe_gunzip(blob)
    if len(blob) < 16:
        raise IdxFormatError(f"image header needs 16 bytes, got {len(blob)}")
    magic = int.from_bytes(blob[0:4], "big")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    count = int.from_bytes(blob[4:8], "big")
    rows = int.from_bytes(blob[8:12], "big")
    cols = int.from_bytes(blob[12:16], "big")
    expected = count * rows * cols
    payload = blob[16:]
    if len(payload) != expected:
        raise IdxFormatError(
            f"image payload holds {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)


def parse_idx_labels(blob: bytes) -> np.ndarray:
    """Parse an IDX label container into a (count,) uint8 vector."""
    blob = _maybe_gunzip(blob)
    if len(blob) < 8:
        raise IdxFormatError(f"label header needs 8 bytes, got {len(blob)}")
    magic = int.from_bytes(blob[0:4], "big")
    if magic != LABEL_MAGIC:
        raise IdxFormatError(
            f"bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    count = int.from_bytes(blob[4:8], "big")
    payload = blob[8:]
    if len(payload) != count:
        raise IdxFormatError(
            f"label payload holds {len(payload)} bytes, expected {count}")
    return np.frombuffer(payload, dtype=np.uint8).copy()


def normalize(pixel):
    """Affine map pixel/127.5 - 1 taking [0, 255] onto [-1, 1]."""
    return np.asarray(pixel, dtype=np.float64) / 127.5 - 1.0


def denormalize(value) -> np.ndarray:
    """Inverse of normalize, rounded back to uint8."""
    v = np.rint((np.asarray(value, dtype=np.float64) + 1.0) * 127.5)
    return np.clip(v, 0, 255).astype(np.uint8)


def _read_first(directory: str, stem: str) -> bytes:
    candidates = [os.path.join(directory, stem + ext) for ext in ("", ".gz")]
    for path in candidates:
        if os.path.exists(path):
            with open(path, "rb") as fh:
                return fh.read()
    raise DatasetMissingError(
        "missing dataset file; expected one of: " + ", ".join(candidates))


def load_mnist(directory: str, split: str = "train") -> Dataset:
    """Load an MNIST split from `directory` (raw or gzipped IDX files)."""
    if split not in IMAGE_FILES:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    images = parse_idx_images(_read_first(directory, IMAGE_FILES[split]))
    if images.shape[1:] != (28, 28):
        raise IdxFormatError(f"expected 28x28 images, got {images.shape[1:]}")
    try:
        labels = parse_idx_labels(_read_first(directory, LABEL_FILES[split]))
        if len(labels) != images.shape[0]:
            raise IdxFormatError("label count does not match image count")
    except DatasetMissingError:
        labels = None
    points = normalize(images.reshape(images.shape[0], 784))
    return Dataset(points, labels, f"mnist-{split}")


SYNTHETIC_RANK = 10
SYNTHETIC_NOISE = 0.05


def synthetic_dataset(count: int, seed: int) -> Dataset:
    """Offline stand-in: points near a random 10-dim affine subspace.

    Coordinates are clipped into [-1, 1] after adding Gaussian noise with
    sigma 0.05, so the data has a dominant low-rank structure plus an
    isotropic floor, deterministic in (count, seed).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    s = Stream(derive(seed, 0xDA7A))
    center = s.uniform(784, -0.2, 0.2)
    basis = s.normal(784 * SYNTHETIC_RANK).reshape(784, SYNTHETIC_RANK)
    basis, _ = np.linalg.qr(basis)
    coeffs = s.uniform(count * SYNTHETIC_RANK, -4.0, 4.0).reshape(count, SYNTHETIC_RANK)
    noise = SYNTHETIC_NOISE * s.normal(count * 784).reshape(count, 784)
    points = np.clip(center + coeffs @ basis.T + noise, -1.0, 1.0)
    return Dataset(points, None, f"synthetic:{seed}")
