"""Forward evaluation of the network layers in spatial and frequency form.

Array kernels (``hadamard``, ``activation``, ``fc``, ...) accept any number of
leading batch axes and work on ``(..., channels, N)`` arrays.  The ``*_forward``
functions wrap them for single :class:`SpectralTensor` values and enforce the
domain tags.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Domain,
    KernelPattern,
    SpectralTensor,
    circular_convolve,
    dft,
    idft,
)

ZERO_THRESHOLD = 1e-12
PROBABILITY_FLOOR = 1e-30


class BiasMode(enum.Enum):
    NONE = "none"
    SCALAR = "scalar"  # one complex constant per output channel
    FULL = "full"  # one frequency-domain vector per output channel


class ActivationKind(enum.Enum):
    UNIT_NORM = "unit_norm"
    GEORGIOU = "georgiou"


@dataclass(frozen=True)
class ActivationConfig:
    kind: ActivationKind = ActivationKind.UNIT_NORM
    c: float = 1.0
    r: float = 1.0
    zero_threshold: float = ZERO_THRESHOLD

    def __post_init__(self):
        if self.kind is ActivationKind.GEORGIOU and (self.c <= 0 or self.r <= 0):
            raise ValueError("Georgiou activation needs c > 0 and r > 0")
        if self.zero_threshold < 0:
            raise ValueError("zero_threshold must be nonnegative")

    @classmethod
    def georgiou(cls, c: float, r: float, zero_threshold: float = ZERO_THRESHOLD):
        return cls(ActivationKind.GEORGIOU, c, r, zero_threshold)


@dataclass
class HadamardParams:
    """Kernel taps ``weights[j, i, t]`` (filter j, input channel i, tap t) plus biases."""

    pattern: KernelPattern
    weights: np.ndarray
    bias: np.ndarray | None = None
    bias_mode: BiasMode = BiasMode.SCALAR

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.complex128)
        if self.weights.ndim != 3 or self.weights.shape[2] != self.pattern.size:
            raise ValueError(
                f"weights must have shape (q, p, {self.pattern.size}), got {self.weights.shape}"
            )
        q, n = self.weights.shape[0], self.pattern.length
        expected = {BiasMode.NONE: None, BiasMode.SCALAR: (q,), BiasMode.FULL: (q, n)}[self.bias_mode]
        if expected is None:
            self.bias = None
        else:
            self.bias = (
                np.zeros(expected, np.complex128)
                if self.bias is None
                else np.asarray(self.bias, dtype=np.complex128)
            )
            if self.bias.shape != expected:
                raise ValueError(f"bias must have shape {expected}, got {self.bias.shape}")

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def length(self) -> int:
        return self.pattern.length

    def filter_spectra(self) -> np.ndarray:
        """``(q, p, N)`` spectra of the padded kernels."""
        return self.weights @ self.pattern.basis()

    def bias_spectrum(self) -> np.ndarray | None:
        if self.bias_mode is BiasMode.NONE:
            return None
        if self.bias_mode is BiasMode.FULL:
            return self.bias
        out = np.zeros((self.out_channels, self.length), np.complex128)
        out[:, 0] = self.length * self.bias
        return out

    def spatial_bias(self) -> np.ndarray | None:
        if self.bias_mode is BiasMode.NONE:
            return None
        if self.bias_mode is BiasMode.FULL:
            return idft(self.bias)
        return np.repeat(self.bias[:, None], self.length, axis=1)


@dataclass
class FcParams:
    """Filters ``weights[k, m, n]`` and an optional scalar bias per output."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.complex128)
        if self.weights.ndim != 3:
            raise ValueError(f"fc weights must have shape (k, m, N), got {self.weights.shape}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.complex128)
            if self.bias.shape != (self.weights.shape[0],):
                raise ValueError(f"fc bias must have shape ({self.weights.shape[0]},)")


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    epsilon: float = 1e-5

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.complex128)
        self.beta = np.asarray(self.beta, dtype=np.complex128)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.gamma.ndim != 1 or self.beta.shape[:1] != self.gamma.shape:
            raise ValueError("gamma must be (p,) and beta (p, N)")

    def to_frequency(self) -> BatchNormParams:
        """Parameters of the frequency-side twin of a spatial batch norm."""
        n = self.beta.shape[-1]
        return BatchNormParams(np.sqrt(n) * self.gamma, dft(self.beta), n * self.epsilon)


@dataclass(frozen=True)
class BatchStats:
    mean: np.ndarray
    variance: np.ndarray


# -- array kernels -----------------------------------------------------------


def _check_channels(z: np.ndarray, channels: int, length: int) -> None:
    if z.shape[-2:] != (channels, length):
        raise ValueError(f"expected (..., {channels}, {length}) input, got {z.shape}")


def hadamard(z: np.ndarray, params: HadamardParams) -> np.ndarray:
    _check_channels(z, params.in_channels, params.length)
    y = np.einsum("...in,jin->...jn", z, params.filter_spectra())
    bias = params.bias_spectrum()
    return y if bias is None else y + bias


def conv_space(x: np.ndarray, params: HadamardParams) -> np.ndarray:
    """Spatial convolution with padded kernels, by direct summation over the taps."""
    _check_channels(x, params.in_channels, params.length)
    y = np.zeros(x.shape[:-2] + (params.out_channels, params.length), np.complex128)
    for t, shift in enumerate(params.pattern.indices):
        shifted = np.roll(x, shift, axis=-1)
        y += np.einsum("...in,ji->...jn", shifted, params.weights[:, :, t])
    bias = params.spatial_bias()
    return y if bias is None else y + bias


def channel_norms(z: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(z, dtype=np.complex128).view(np.float64)
    return np.sqrt(np.einsum("...i,...i->...", flat, flat))


def activation_scale(rho: np.ndarray, cfg: ActivationConfig, domain: Domain, n: int):
    """Return ``phi(rho)`` and ``phi'(rho) / (2 rho)`` for the map ``z -> phi(|z|) z``.

    Channels at or below the zero threshold get zero for both.
    """
    live = rho > cfg.zero_threshold
    safe = np.where(live, rho, 1.0)
    if cfg.kind is ActivationKind.UNIT_NORM:
        a = 1.0 if domain is Domain.FREQUENCY else 1.0 / np.sqrt(n)
        phi = a / safe
        dphi = -a / safe**2
    else:
        s = 1.0 / cfg.r if domain is Domain.FREQUENCY else np.sqrt(n) / cfg.r
        denom = cfg.c + s * safe
        phi = 1.0 / denom
        dphi = -s / denom**2
    phi = np.where(live, phi, 0.0)
    alpha = np.where(live, dphi / (2.0 * safe), 0.0)
    return phi, alpha


def activation(z: np.ndarray, cfg: ActivationConfig, domain: Domain) -> np.ndarray:
    phi, _ = activation_scale(channel_norms(z), cfg, domain, z.shape[-1])
    return z * phi[..., None]


def fc(z: np.ndarray, params: FcParams, domain: Domain) -> np.ndarray:
    k, m, n = params.weights.shape
    _check_channels(z, m, n)
    lead = z.shape[:-2]
    out = z.reshape(-1, m * n) @ np.conj(params.weights.reshape(k, m * n)).T
    if domain is Domain.FREQUENCY:
        out = out / n
    if params.bias is not None:
        out = out + params.bias
    return out.reshape(lead + (k,))


def batchnorm(batch: np.ndarray, params: BatchNormParams):
    """Normalize a ``(m, p, N)`` batch per channel; returns ``(output, stats)``.

    The same formula serves both domains; use :meth:`BatchNormParams.to_frequency`
    to obtain the frequency-side parameters of a spatial layer.
    """
    batch = np.asarray(batch, dtype=np.complex128)
    if batch.ndim != 3 or batch.shape[0] < 1:
        raise ValueError("batch norm needs a non-empty (m, p, N) batch")
    m, p, n = batch.shape
    if params.gamma.shape != (p,) or params.beta.shape != (p, n):
        raise ValueError("batch norm parameters do not match the batch shape")
    mean = np.zeros((p, n), np.complex128)
    for example in batch:  # ascending order keeps the reduction reproducible
        mean += example
    mean /= m
    centred = batch - mean
    raw = np.einsum("jkn,jkn->k", centred, np.conj(centred)) / (m * n)
    if np.max(np.abs(raw.imag), initial=0.0) > 1e-10:
        raise ArithmeticError("batch variance has a non-negligible imaginary part")
    variance = raw.real
    scale = params.gamma / np.sqrt(variance + params.epsilon)
    out = scale[None, :, None] * centred + params.beta[None]
    return out, BatchStats(mean, variance)


def divider(x: np.ndarray):
    """Split spectra of length 2N into spectra of the even and odd samples."""
    two_n = x.shape[-1]
    if two_n % 2:
        raise ValueError(f"divider needs an even channel length, got {two_n}")
    n = two_n // 2
    lo, hi = x[..., :n], x[..., n:]
    twiddle = np.exp(2j * np.pi * np.arange(n) / two_n)
    return 0.5 * (lo + hi), 0.5 * twiddle * (lo - hi)


def residual(x: np.ndarray, w1: np.ndarray, w2: np.ndarray, domain: Domain,
             cfg: ActivationConfig = ActivationConfig()) -> np.ndarray:
    """``A(x * w1) * w2 + x`` with channelwise filters ``w1``, ``w2`` of shape ``(p, N)``."""
    _check_channels(x, *np.shape(w1))
    _check_channels(x, *np.shape(w2))
    if domain is Domain.FREQUENCY:
        return activation(x * w1, cfg, domain) * w2 + x
    inner = activation(circular_convolve(x, w1), cfg, domain)
    return circular_convolve(inner, w2) + x


def output_amplitudes(z: np.ndarray, zero_threshold: float = ZERO_THRESHOLD) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    rho = channel_norms(z)[..., None]
    uniform = np.full(z.shape, np.sqrt(1.0 / z.shape[-1]), dtype=np.complex128)
    return np.where(rho > zero_threshold, z / np.where(rho > 0, rho, 1.0), uniform)


def output_probabilities(z, zero_threshold: float = ZERO_THRESHOLD) -> np.ndarray:
    """Probability of each class: squared modulus over squared norm (uniform at zero)."""
    amp = output_amplitudes(z, zero_threshold)
    return amp.real**2 + amp.imag**2


def cross_entropy_loss(z, y) -> np.ndarray:
    """``-sum_k y_k log(|z_k|^2 / |z|^2)``, natural log, floored at 1e-30."""
    y = np.asarray(y, dtype=np.float64)
    p = output_probabilities(z)
    if p.shape[-1] != y.shape[-1]:
        raise ValueError("prediction and target lengths differ")
    return -np.sum(y * np.log(np.maximum(p, PROBABILITY_FLOOR)), axis=-1)


def entropic_uncertainty(z) -> tuple:
    """Shannon entropies of the output distribution and of its DFT twin."""
    amp = output_amplitudes(z)
    n = amp.shape[-1]
    p = np.abs(amp) ** 2
    q = np.abs(dft(amp)) ** 2 / n

    def entropy(v):
        safe = np.where(v > 0, v, 1.0)
        return -np.sum(v * np.log(safe), axis=-1)

    return entropy(p), entropy(q)


# -- tagged single-tensor forms ------------------------------------------------


def input_forward(x: SpectralTensor) -> SpectralTensor:
    x.require(Domain.SPATIAL)
    return SpectralTensor.frequency(dft(x.data))


def conv_space_forward(x: SpectralTensor, params: HadamardParams) -> SpectralTensor:
    x.require(Domain.SPATIAL)
    return x.with_data(conv_space(x.data, params))


def hadamard_forward(z: SpectralTensor, params: HadamardParams) -> SpectralTensor:
    z.require(Domain.FREQUENCY)
    return z.with_data(hadamard(z.data, params))


def activation_forward(z: SpectralTensor, cfg: ActivationConfig = ActivationConfig()) -> SpectralTensor:
    return z.with_data(activation(z.data, cfg, z.domain))


def fc_forward(z: SpectralTensor, params: FcParams) -> np.ndarray:
    return fc(z.data, params, z.domain)


def divider_forward(x: SpectralTensor) -> tuple:
    x.require(Domain.FREQUENCY)
    even, odd = divider(x.data)
    return SpectralTensor.frequency(even), SpectralTensor.frequency(odd)


def batchnorm_forward(batch, params: BatchNormParams) -> tuple:
    """Batch-normalize a sequence of same-domain tensors."""
    batch = list(batch)
    if not batch:
        raise ValueError("batch norm needs at least one tensor")
    domain = batch[0].domain
    if any(t.domain is not domain for t in batch):
        raise ValueError("batch mixes spatial and frequency tensors")
    out, stats = batchnorm(np.stack([t.data for t in batch]), params)
    return [SpectralTensor(o, domain) for o in out], stats


def residual_forward(x: SpectralTensor, w1, w2, cfg: ActivationConfig = ActivationConfig()) -> SpectralTensor:
    return x.with_data(residual(x.data, np.asarray(w1, np.complex128),
                                np.asarray(w2, np.complex128), x.domain, cfg))
