"""MNIST IDX ingestion, input spectra, and deterministic mini-batching."""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .spectral import dft

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
IMAGE_SIDE = 28
IMAGE_SIZE = IMAGE_SIDE * IMAGE_SIDE


class IdxError(ValueError):
    """Base class for malformed IDX files."""


class IdxMagicError(IdxError):
    pass


class IdxDimensionError(IdxError):
    pass


class IdxCountMismatchError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    def __init__(self, path, offset: int, needed: int):
        super().__init__(f"{path}: truncated at byte offset {offset}, {needed} more bytes expected")
        self.offset = offset


def _read_bytes(path) -> bytes:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def _header(buf: bytes, path, magic: int, ndims: int) -> tuple:
    size = 4 * (ndims + 1)
    if len(buf) < size:
        raise IdxTruncatedError(path, len(buf), size - len(buf))
    fields = struct.unpack(f">{ndims + 1}I", buf[:size])
    if fields[0] != magic:
        raise IdxMagicError(f"{path}: magic {fields[0]} != {magic}")
    return fields[1:], size


def load_idx(images_path, labels_path) -> tuple:
    """Read an IDX image/label pair.

    Returns ``(images, labels)``: ``images`` is ``(count, 784)`` float64 in
    ``[0, 1]``, each image flattened row-major; ``labels`` is ``(count,)`` int64.
    """
    img = _read_bytes(images_path)
    (count, rows, cols), offset = _header(img, images_path, IMAGE_MAGIC, 3)
    if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
        raise IdxDimensionError(f"{images_path}: images are {rows}x{cols}, expected 28x28")
    needed = count * rows * cols
    if len(img) - offset < needed:
        raise IdxTruncatedError(images_path, len(img), offset + needed - len(img))
    if len(img) - offset > needed:
        raise IdxDimensionError(f"{images_path}: {len(img) - offset - needed} bytes beyond the declared images")
    pixels = np.frombuffer(img, dtype=np.uint8, count=needed, offset=offset)

    lab = _read_bytes(labels_path)
    (n_labels,), loff = _header(lab, labels_path, LABEL_MAGIC, 1)
    if n_labels != count:
        raise IdxCountMismatchError(f"{count} images but {n_labels} labels")
    if len(lab) - loff < n_labels:
        raise IdxTruncatedError(labels_path, len(lab), loff + n_labels - len(lab))
    labels = np.frombuffer(lab, dtype=np.uint8, count=n_labels, offset=loff).astype(np.int64)
    if labels.size and labels.max() > 9:
        raise IdxError(f"{labels_path}: label {labels.max()} outside 0..9")

    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return images, labels


def find_mnist(data_dir, split: str = "train") -> tuple:
    """Locate the IDX image and label files of a split, gzipped or not."""
    prefix = {"train": "train", "test": "t10k"}[split]
    paths = []
    for kind in ("images-idx3-ubyte", "labels-idx1-ubyte"):
        candidates = [os.path.join(data_dir, f"{prefix}{sep}{kind}{suffix}")
                      for suffix in ("", ".gz") for sep in ("-", ".")]
        found = next((c for c in candidates if os.path.exists(c)), None)
        if found is None:
            raise FileNotFoundError(f"no {prefix}-{kind} file in {data_dir}")
        paths.append(found)
    return tuple(paths)


@dataclass(frozen=True)
class LabeledExample:
    spectrum: np.ndarray
    label: int
    spatial: np.ndarray | None = None


@dataclass
class SpectralDataset:
    """Input spectra ``(count, channels, N)`` with integer labels."""

    spectra: np.ndarray
    labels: np.ndarray
    spatial: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> LabeledExample:
        spatial = None if self.spatial is None else self.spatial[i]
        return LabeledExample(self.spectra[i], int(self.labels[i]), spatial)

    def subset(self, idx) -> SpectralDataset:
        spatial = None if self.spatial is None else self.spatial[idx]
        return SpectralDataset(self.spectra[idx], self.labels[idx], spatial)


def precompute_spectra(images, labels=None, keep_spatial: bool = False,
                       chunk: int = 2000) -> SpectralDataset:
    """DFT every example once up front; datasets pass through unchanged."""
    if isinstance(images, SpectralDataset):
        return images
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[:, None, :]
    spectra = np.empty(images.shape, np.complex128)
    for start in range(0, len(images), chunk):
        spectra[start:start + chunk] = dft(images[start:start + chunk])
    labels = np.zeros(len(images), np.int64) if labels is None else np.asarray(labels)
    return SpectralDataset(spectra, labels, images.astype(np.float64) if keep_spatial else None)


def load_mnist(data_dir, split: str = "train", limit: int | None = None,
               keep_spatial: bool = False) -> SpectralDataset:
    images, labels = load_idx(*find_mnist(data_dir, split))
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    return precompute_spectra(images, labels, keep_spatial=keep_spatial)


def epoch_permutation(count: int, seed: int, epoch: int) -> np.ndarray:
    """Order of examples in an epoch, a pure function of ``(seed, epoch)``."""
    bitgen = np.random.Philox(np.random.SeedSequence([seed, epoch]))
    return np.random.Generator(bitgen).permutation(count)


def batch_iter(count: int, batch_size: int, seed: int, epoch: int):
    """Yield index arrays covering a shuffled epoch; the last batch may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    order = epoch_permutation(count, seed, epoch)
    for start in range(0, count, batch_size):
        yield order[start:start + batch_size]
