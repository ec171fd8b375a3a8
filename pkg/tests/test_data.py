import gzip
import struct

import numpy as np
import pytest

from hadamard_net.data import (
    IdxCountMismatchError,
    IdxDimensionError,
    IdxError,
    IdxMagicError,
    IdxTruncatedError,
    SpectralDataset,
    batch_iter,
    epoch_permutation,
    find_mnist,
    load_idx,
    load_mnist,
    precompute_spectra,
)
from hadamard_net.oracle import naive_dft
from hadamard_net.spectral import idft


def write_idx(tmp_path, images, labels, *, img_magic=2051, lab_magic=2049, rows=28, cols=28,
              img_count=None, lab_count=None, cut=0, extra=b"", gz=False, name="train"):
    images = np.asarray(images, np.uint8)
    labels = np.asarray(labels, np.uint8)
    img = struct.pack(">4I", img_magic, len(images) if img_count is None else img_count, rows, cols)
    img += images.tobytes() + extra
    if cut:
        img = img[:-cut]
    lab = struct.pack(">2I", lab_magic, len(labels) if lab_count is None else lab_count) + labels.tobytes()
    suffix = ".gz" if gz else ""
    ip = tmp_path / f"{name}-images-idx3-ubyte{suffix}"
    lp = tmp_path / f"{name}-labels-idx1-ubyte{suffix}"
    opener = gzip.open if gz else open
    with opener(ip, "wb") as fh:
        fh.write(img)
    with opener(lp, "wb") as fh:
        fh.write(lab)
    return ip, lp


def small_images(count=3):
    rng = np.random.default_rng(0)
    return rng.integers(0, 256, size=(count, 28, 28), dtype=np.uint8)


def test_load_idx_scales_and_flattens_row_major(tmp_path):
    images = small_images()
    images[0] = 0
    x, y = load_idx(*write_idx(tmp_path, images, [0, 7, 9]))
    assert x.shape == (3, 784) and y.tolist() == [0, 7, 9]
    np.testing.assert_array_equal(x[0], 0)
    np.testing.assert_allclose(x[1], images[1].reshape(-1) / 255.0)
    assert x[2, 28 * 5 + 3] == images[2, 5, 3] / 255.0


def test_load_idx_reads_gzip(tmp_path):
    images = small_images()
    plain = load_idx(*write_idx(tmp_path, images, [1, 2, 3]))
    zipped = load_idx(*write_idx(tmp_path, images, [1, 2, 3], gz=True, name="t10k"))
    np.testing.assert_array_equal(plain[0], zipped[0])


def test_load_idx_errors_are_distinct(tmp_path):
    images = small_images()
    with pytest.raises(IdxMagicError):
        load_idx(*write_idx(tmp_path, images, [1, 2, 3], img_magic=2049))
    with pytest.raises(IdxMagicError):
        load_idx(*write_idx(tmp_path, images, [1, 2, 3], lab_magic=2051))
    with pytest.raises(IdxDimensionError):
        load_idx(*write_idx(tmp_path, images, [1, 2, 3], rows=27, cols=29))
    with pytest.raises(IdxDimensionError):
        load_idx(*write_idx(tmp_path, images, [1, 2, 3], extra=b"\x00"))
    with pytest.raises(IdxCountMismatchError):
        load_idx(*write_idx(tmp_path, images, [1, 2]))
    with pytest.raises(IdxError):
        load_idx(*write_idx(tmp_path, images, [1, 2, 12]))
    assert len({IdxMagicError, IdxDimensionError, IdxCountMismatchError, IdxTruncatedError}) == 4


def test_truncated_image_file_names_the_offset(tmp_path):
    with pytest.raises(IdxTruncatedError) as info:
        load_idx(*write_idx(tmp_path, small_images(), [1, 2, 3], cut=10))
    assert info.value.offset == 16 + 3 * 784 - 10
    assert str(16 + 3 * 784 - 10) in str(info.value)


def test_find_mnist_and_missing_files(tmp_path):
    write_idx(tmp_path, small_images(), [1, 2, 3])
    assert find_mnist(tmp_path, "train")[0].endswith("train-images-idx3-ubyte")
    with pytest.raises(FileNotFoundError):
        find_mnist(tmp_path, "test")


def test_precompute_constant_image():
    c = 0.25
    ds = precompute_spectra(np.full((1, 784), c), [3])
    expected = np.zeros(784, complex)
    expected[0] = 784 * c
    np.testing.assert_allclose(ds.spectra[0, 0], expected, atol=1e-12)


def test_precompute_real_input_is_conjugate_symmetric_and_invertible(tmp_path):
    images, labels = load_idx(*write_idx(tmp_path, small_images(), [1, 2, 3]))
    ds = precompute_spectra(images, labels, keep_spatial=True)
    X = ds.spectra[:, 0]
    k = np.arange(1, 784)
    np.testing.assert_allclose(X[:, k], np.conj(X[:, 784 - k]), atol=1e-10)
    np.testing.assert_allclose(idft(X), images, atol=1e-10)
    assert ds.spectra.shape == (3, 1, 784)
    np.testing.assert_allclose(X[1], naive_dft(images[1]), atol=1e-10)
    example = ds[1]
    assert example.label == 2
    np.testing.assert_allclose(example.spatial[0], images[1])


def test_precompute_is_idempotent():
    ds = precompute_spectra(np.eye(4, 784), [0, 1, 2, 3])
    assert precompute_spectra(ds) is ds
    sub = ds.subset([1, 3])
    assert isinstance(sub, SpectralDataset) and sub.labels.tolist() == [1, 3]


def test_batch_iter_sizes_and_determinism():
    batches = list(batch_iter(10, 3, seed=5, epoch=0))
    assert [len(b) for b in batches] == [3, 3, 3, 1]
    assert sorted(np.concatenate(batches).tolist()) == list(range(10))
    again = list(batch_iter(10, 3, seed=5, epoch=0))
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))
    with pytest.raises(ValueError):
        list(batch_iter(10, 0, 0, 0))


def test_epochs_get_distinct_permutations():
    perms = {tuple(epoch_permutation(60, seed=1, epoch=e)) for e in range(100)}
    assert len(perms) == 100
    assert not np.array_equal(epoch_permutation(60, 1, 0), epoch_permutation(60, 2, 0))


@pytest.mark.mnist
def test_official_files(mnist_dir):
    train = load_idx(*find_mnist(mnist_dir, "train"))
    test = load_idx(*find_mnist(mnist_dir, "test"))
    assert train[0].shape == (60000, 784) and test[0].shape == (10000, 784)
    assert 0 <= train[0].min() and train[0].max() <= 1
    ds = load_mnist(mnist_dir, "test", limit=50)
    X = ds.spectra[:, 0]
    k = np.arange(1, 784)
    np.testing.assert_allclose(X[:, k], np.conj(X[:, 784 - k]), atol=1e-10)
