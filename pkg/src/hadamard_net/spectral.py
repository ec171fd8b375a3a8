"""Complex vector arithmetic on length-N channels: DFT, circular convolution, padding.

Conventions used across the package:

* the forward DFT is unnormalized, ``X_k = sum_j x_j * exp(-2*pi*i*j*k/N)``;
  the inverse carries the ``1/N`` factor;
* multi-channel tensors are stored channel-first, ``(..., channels, N)``, and
  every transform acts on the last axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SMALL_RADICES = (2, 3, 5, 7)


class NonFiniteError(ValueError):
    """Raised when NaN or Inf values enter a numerical routine."""


class DomainError(ValueError):
    """Raised when a tensor is used in the wrong (spatial/frequency) domain."""


class Domain(enum.Enum):
    SPATIAL = "spatial"
    FREQUENCY = "frequency"


def _as_complex(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("input contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SpectralTensor:
    """A ``p``-channel complex tensor of channel length ``N`` tagged with its domain."""

    data: np.ndarray
    domain: Domain

    def __post_init__(self):
        arr = _as_complex(self.data)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a (channels, length) array, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def spatial(cls, data) -> SpectralTensor:
        return cls(data, Domain.SPATIAL)

    @classmethod
    def frequency(cls, data) -> SpectralTensor:
        return cls(data, Domain.FREQUENCY)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]

    def with_data(self, data) -> SpectralTensor:
        """Same domain tag, new values."""
        return SpectralTensor(data, self.domain)

    def require(self, domain: Domain) -> None:
        if self.domain is not domain:
            raise DomainError(f"expected a {domain.value} tensor, got {self.domain.value}")


@dataclass(frozen=True)
class KernelPattern:
    """Ordered tap positions of a small kernel inside a length-N circular filter."""

    indices: tuple
    length: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if self.length < 1:
            raise ValueError("pattern length must be positive")
        if not idx:
            raise ValueError("kernel pattern must contain at least one index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"kernel indices must be strictly increasing: {idx}")
        if idx[0] < 0 or idx[-1] >= self.length:
            raise IndexError(f"kernel indices must lie in [0, {self.length - 1}]")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def rectangle(cls, rows: int, cols: int, row_stride: int, length: int) -> KernelPattern:
        """Taps of a ``rows x cols`` kernel laid over an image flattened with ``row_stride``."""
        return cls(tuple(r * row_stride + c for r in range(rows) for c in range(cols)), length)

    @property
    def size(self) -> int:
        return len(self.indices)

    def basis(self) -> np.ndarray:
        """``(|K|, N)`` matrix whose row ``t`` is the spectrum of a unit tap at ``K[t]``."""
        return _pattern_basis(self.indices, self.length)


@lru_cache(maxsize=64)
def _pattern_basis(indices: tuple, n: int) -> np.ndarray:
    k = np.arange(n)
    phase = (np.asarray(indices)[:, None] * k[None, :]) % n
    out = np.exp(-2j * np.pi * phase / n)
    out.flags.writeable = False
    return out


# -- fast transform ---------------------------------------------------------


@lru_cache(maxsize=128)
def _twiddles(n: int, radix: int) -> tuple:
    m = n // radix
    s = np.arange(radix)
    inner = np.exp(-2j * np.pi * ((s[:, None] * np.arange(m)[None, :]) % n) / n)
    outer = np.exp(-2j * np.pi * ((s[:, None] * s[None, :]) % radix) / radix)
    inner.flags.writeable = False
    outer.flags.writeable = False
    return inner, outer


@lru_cache(maxsize=128)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    mat = np.exp(-2j * np.pi * ((k[:, None] * k[None, :]) % n) / n)
    mat.flags.writeable = False
    return mat


def _smallest_radix(n: int):
    for r in SMALL_RADICES:
        if n % r == 0:
            return r
    return None


def _fft(x: np.ndarray) -> np.ndarray:
    # decimation in time: X[k1 + m*k2] = sum_s w_r^{s*k2} * w_n^{s*k1} * Y_s[k1]
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    radix = _smallest_radix(n)
    if radix is None:
        return x @ _dft_matrix(n).T
    m = n // radix
    lead = x.shape[:-1]
    sub = np.swapaxes(x.reshape(*lead, m, radix), -1, -2)  # (..., radix, m)
    y = _fft(np.ascontiguousarray(sub))
    inner, outer = _twiddles(n, radix)
    t = y * inner
    out = np.einsum("ks,...sm->...km", outer, t)
    return out.reshape(*lead, n)


def dft(x) -> np.ndarray:
    """Unnormalized forward DFT along the last axis.

    Uses a mixed-radix Cooley-Tukey recursion over the factors 2, 3, 5 and 7;
    any remaining factor is handled by a direct O(n^2) product.
    """
    arr = _as_complex(x)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise ValueError("dft needs at least one sample")
    return _fft(arr)


def idft(X) -> np.ndarray:
    """Inverse of :func:`dft`, scaled by ``1/N``."""
    arr = _as_complex(X)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise ValueError("idft needs at least one sample")
    return np.conj(_fft(np.conj(arr))) / arr.shape[-1]


# -- products ---------------------------------------------------------------


def _check_same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"length mismatch: {x.shape[-1]} != {y.shape[-1]}")


def hadamard_product(x, y) -> np.ndarray:
    x, y = _as_complex(x), _as_complex(y)
    _check_same_length(x, y)
    return x * y


def circular_convolve(x, y) -> np.ndarray:
    """``(x * y)_k = sum_j x_j y_{(k-j) mod N}``, computed through the DFT."""
    x, y = _as_complex(x), _as_complex(y)
    _check_same_length(x, y)
    return idft(dft(x) * dft(y))


def pad_kernel(w, pattern: KernelPattern, n: int | None = None) -> np.ndarray:
    """Scatter kernel taps (last axis, size ``|K|``) into length-``n`` filters."""
    w = _as_complex(w)
    n = pattern.length if n is None else n
    if pattern.indices[-1] >= n:
        raise IndexError(f"kernel index {pattern.indices[-1]} out of range for N={n}")
    if w.shape[-1] != pattern.size:
        raise ValueError(f"expected {pattern.size} kernel taps, got {w.shape[-1]}")
    out = np.zeros(w.shape[:-1] + (n,), dtype=np.complex128)
    out[..., list(pattern.indices)] = w
    return out


def inner_product(x, w) -> complex:
    """``sum_j x_j * conj(w_j)`` over all entries."""
    x, w = _as_complex(x), _as_complex(w)
    if x.shape != w.shape:
        raise ValueError(f"shape mismatch: {x.shape} != {w.shape}")
    return complex(np.vdot(w, x))


def norm(x) -> float:
    arr = np.asarray(x, dtype=np.complex128)
    return float(np.sqrt(np.sum(arr.real**2 + arr.imag**2)))
