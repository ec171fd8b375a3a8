"""Slow reference implementations used by the tests and by ``verify``.

Nothing here calls into the fast transform, the layer kernels or the network
forward pass, so agreement between the two sides is evidence rather than a
tautology.  Everything is O(N^2) or worse on purpose.
"""
from __future__ import annotations

import numpy as np

SPATIAL_KINDS = ("input", "hadamard", "activation", "batchnorm", "residual", "fc", "output")


class NonCommutingLayerError(ValueError):
    """The network contains a layer with no spatial counterpart."""


def _omega(n: int, sign: float) -> np.ndarray:
    # every entry exp(sign * 2 pi i j k / N) evaluated on its own, reduced mod N first
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(sign * 2j * np.pi * jk / n)


def naive_dft(x) -> np.ndarray:
    """``X_k = sum_j x_j exp(-2 pi i j k / N)`` by the double sum, along the last axis."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-1] < 1:
        raise ValueError("need at least one sample")
    return x @ _omega(x.shape[-1], -1.0).T


def naive_idft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    if X.shape[-1] < 1:
        raise ValueError("need at least one sample")
    return X @ _omega(X.shape[-1], 1.0).T / X.shape[-1]


def naive_convolve(x, y) -> np.ndarray:
    """``(x * y)_k = sum_j x_j y_{(k - j) mod N}`` for 1-d signals."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"need two 1-d signals of equal length, got {x.shape} and {y.shape}")
    n = len(x)
    lag = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n  # lag[k, j] = k - j mod N
    return np.sum(x[None, :] * y[lag], axis=1)


def _roll_convolve(x, w):
    # channelwise circular convolution of (..., p, N) signals with (p, N) filters
    n = x.shape[-1]
    out = np.zeros(np.broadcast_shapes(x.shape, w.shape), np.complex128)
    for s in range(n):
        out += np.roll(x, s, axis=-1) * w[..., s:s + 1]
    return out


def _norms(x):
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=-1, keepdims=True))


def _activation(x, cfg):
    n = x.shape[-1]
    rho = _norms(x)
    if cfg.kind.value == "unit_norm":
        denom = np.sqrt(n) * rho
    else:
        denom = cfg.c + np.sqrt(n) / cfg.r * rho
    live = rho > cfg.zero_threshold
    return np.where(live, x / np.where(live, denom, 1.0), 0.0)


def _conv(x, layer, group):
    q, p, _ = group["weights"].shape
    n = layer.n
    out = np.zeros(x.shape[:-2] + (q, n), np.complex128)
    for t, shift in enumerate(layer.kernel):
        shifted = np.roll(x, shift, axis=-1)
        for j in range(q):
            for i in range(p):
                out[..., j, :] += group["weights"][j, i, t] * shifted[..., i, :]
    mode = layer.bias_mode.value
    if mode == "scalar":
        out += group["bias"][:, None]
    elif mode == "full":
        out += naive_idft(group["bias"])
    return out


def _fc(x, group):
    w_space = naive_idft(group["weights"])
    out = np.einsum("...in,kin->...k", x, np.conj(w_space))
    if "bias" in group:
        out = out + group["bias"]
    return out


def _batchnorm(x, layer, group):
    if x.ndim != 3:
        raise ValueError("batch norm needs a (m, p, N) batch")
    m, _, n = x.shape
    gamma = group["gamma"] / np.sqrt(n)
    beta = naive_idft(group["beta"])
    eps = layer.epsilon / n
    mean = x.mean(axis=0)
    var = np.sum(np.abs(x - mean) ** 2, axis=(0, 2)) / (m * n)
    return gamma[:, None] / np.sqrt(var[:, None] + eps) * (x - mean) + beta


def _residual(x, layer, group):
    w1 = naive_idft(group["w1"])
    w2 = naive_idft(group["w2"])
    return _roll_convolve(_activation(_roll_convolve(x, w1), layer.activation), w2) + x


def _probabilities(z):
    k = z.shape[-1]
    mass = np.sum(np.abs(z) ** 2, axis=-1, keepdims=True)
    live = np.sqrt(mass) > 1e-12
    return np.where(live, np.abs(z) ** 2 / np.where(live, mass, 1.0), 1.0 / k)


def space_domain_twin_forward(spec, params, x) -> np.ndarray:
    """Output probabilities of the spatial network equivalent to ``spec``.

    ``x`` holds spatial signals ``(m, channels, N)`` (or one ``(channels, N)``
    signal).  Hadamard layers become convolutions with the zero-padded taps,
    unit-norm and Georgiou activations take their spatial scaling, FC and
    residual filters are mapped back with the inverse DFT, and batch norm uses
    ``gamma / sqrt(N)``, ``eps / N`` and the inverse DFT of ``beta``.
    """
    for layer in spec.layers:
        if layer.kind not in SPATIAL_KINDS:
            raise NonCommutingLayerError(f"{layer.kind} layer has no spatial twin")
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 2
    if single:
        x = x[None]
    for layer, group in zip(spec.layers, params.tensors):
        kind = layer.kind
        if kind == "hadamard":
            x = _conv(x, layer, group)
        elif kind == "activation":
            x = _activation(x, layer.activation)
        elif kind == "batchnorm":
            x = _batchnorm(x, layer, group)
        elif kind == "residual":
            x = _residual(x, layer, group)
        elif kind == "fc":
            x = _fc(x, group)
        elif kind == "output":
            x = _probabilities(x)
    return x[0] if single else x


__all__ = [
    "NonCommutingLayerError", "naive_dft", "naive_idft", "naive_convolve",
    "space_domain_twin_forward",
]
