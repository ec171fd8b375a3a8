"""Wirtinger-calculus backward passes for every layer, plus a finite-difference oracle.

For an input ``z`` the backward pass carries both ``dL/dz`` and ``dL/dconj(z)``
(:class:`DualGradient`).  Parameters only carry ``dL/dconj(w)``, the steepest
ascent direction of a real loss; the gradients come back as plain dicts keyed
by parameter name.  Parameter gradients are summed over any leading batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import (
    ActivationConfig,
    ActivationKind,
    BatchNormParams,
    FcParams,
    HadamardParams,
    BiasMode,
    activation,
    activation_scale,
    channel_norms,
)
from .spectral import Domain


class NumericalError(ArithmeticError):
    """A gradient or loss became undefined or non-finite."""


class ZeroOutputError(NumericalError):
    """The output layer received the zero vector, where the loss gradient is undefined."""


@dataclass
class DualGradient:
    d_z: np.ndarray
    d_zbar: np.ndarray

    @classmethod
    def from_conjugate(cls, d_zbar) -> DualGradient:
        """Pair for a real-valued loss, where ``dL/dz = conj(dL/dconj(z))``."""
        d_zbar = np.asarray(d_zbar, dtype=np.complex128)
        return cls(np.conj(d_zbar), d_zbar)

    @classmethod
    def zeros(cls, shape) -> DualGradient:
        return cls(np.zeros(shape, np.complex128), np.zeros(shape, np.complex128))

    def __add__(self, other: DualGradient) -> DualGradient:
        return DualGradient(self.d_z + other.d_z, self.d_zbar + other.d_zbar)

    def scaled(self, factor: float) -> DualGradient:
        return DualGradient(self.d_z * factor, self.d_zbar * factor)

    def conjugate_gap(self) -> float:
        """Largest deviation from ``d_zbar == conj(d_z)``."""
        return float(np.max(np.abs(self.d_zbar - np.conj(self.d_z)), initial=0.0))


def relative_error(a, b, floor: float = 1e-8) -> float:
    """``|a - b| / max(|a|, |b|, floor)`` with Euclidean norms over all entries."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    diff = np.linalg.norm((a - b).ravel())
    return float(diff / max(np.linalg.norm(a.ravel()), np.linalg.norm(b.ravel()), floor))


def _sum_batch(arr: np.ndarray, ndim: int) -> np.ndarray:
    return arr.reshape((-1,) + arr.shape[arr.ndim - ndim:]).sum(axis=0)


# -- output layer and loss ---------------------------------------------------


def loss_backward(z, y) -> DualGradient:
    """Gradient of the cross-entropy loss with respect to the output-layer input."""
    z = np.asarray(z, dtype=np.complex128)
    y = np.asarray(y, dtype=np.float64)
    sq = z.real**2 + z.imag**2
    total = sq.sum(axis=-1, keepdims=True)
    if np.any(total == 0.0):
        raise ZeroOutputError("loss gradient is undefined at the zero output vector")
    hot = y > 0
    if np.any(hot & (sq == 0.0)):
        raise NumericalError("target class has an exactly zero output coordinate")
    inv_sq = np.divide(1.0, sq, out=np.zeros_like(sq), where=hot)
    mass = y.sum(axis=-1, keepdims=True)
    coef = -y * inv_sq + mass / total
    return DualGradient(coef * np.conj(z), coef * z)


# -- activation --------------------------------------------------------------


def activation_backward(z, upstream: DualGradient, cfg: ActivationConfig = ActivationConfig(),
                        domain: Domain = Domain.FREQUENCY) -> DualGradient:
    """Contract the activation Jacobian (diagonal plus rank-one terms) with ``upstream``."""
    z = np.asarray(z, dtype=np.complex128)
    phi, alpha = activation_scale(channel_norms(z), cfg, domain, z.shape[-1])
    g, gb = upstream.d_z, upstream.d_zbar
    zc = np.conj(z)
    s = np.einsum("...n,...n->...", g, z) + np.einsum("...n,...n->...", gb, zc)
    k = (alpha * s)[..., None]
    phi = phi[..., None]
    d_z = phi * g
    d_z += k * zc
    d_zbar = phi * gb
    d_zbar += k * z
    return DualGradient(d_z, d_zbar)


def activation_jacobians(z, cfg: ActivationConfig = ActivationConfig(),
                         domain: Domain = Domain.FREQUENCY) -> tuple:
    """Dense ``(df_j/dz_k, df_j/dconj(z_k))`` for one channel.

    The frequency-domain unit-norm case is written out term by term; the other
    variants use the generic radial form.
    """
    z = np.asarray(z, dtype=np.complex128)
    n = z.shape[-1]
    rho = float(np.sqrt(np.sum(np.abs(z) ** 2)))
    if rho <= cfg.zero_threshold:
        zero = np.zeros((n, n), np.complex128)
        return zero, zero.copy()
    if cfg.kind is ActivationKind.UNIT_NORM and domain is Domain.FREQUENCY:
        jac = np.empty((n, n), np.complex128)
        jac_bar = np.empty((n, n), np.complex128)
        for j in range(n):
            for k in range(n):
                if j == k:
                    jac[j, k] = 1 / rho - 0.5 * abs(z[k]) ** 2 / rho**3
                    jac_bar[j, k] = -0.5 * z[k] ** 2 / rho**3
                else:
                    jac[j, k] = -0.5 * z[j] * np.conj(z[k]) / rho**3
                    jac_bar[j, k] = -0.5 * z[j] * z[k] / rho**3
        return jac, jac_bar
    phi, alpha = activation_scale(np.array(rho), cfg, domain, n)
    jac = float(phi) * np.eye(n) + float(alpha) * np.outer(z, np.conj(z))
    jac_bar = float(alpha) * np.outer(z, z)
    return jac, jac_bar


def dense_backward(jac, jac_bar, upstream: DualGradient) -> DualGradient:
    """Chain rule through explicit Jacobians of a map ``f: C^n -> C^m``."""
    g, gb = upstream.d_z, upstream.d_zbar
    d_z = g @ jac + gb @ np.conj(jac_bar)
    d_zbar = g @ jac_bar + gb @ np.conj(jac)
    return DualGradient(d_z, d_zbar)


# -- linear layers ------------------------------------------------------------


def hadamard_backward(z, params: HadamardParams, upstream: DualGradient,
                      input_grad: bool = True) -> tuple:
    """Input and parameter gradients; ``input_grad=False`` skips the former (returns None)."""
    z = np.asarray(z, dtype=np.complex128)
    down = None
    if input_grad:
        spectra = params.filter_spectra()
        down = DualGradient(np.einsum("...jn,jin->...in", upstream.d_z, spectra),
                            np.einsum("...jn,jin->...in", upstream.d_zbar, np.conj(spectra)))
    gb = upstream.d_zbar.reshape((-1,) + upstream.d_zbar.shape[-2:])
    zc = np.conj(z).reshape((-1,) + z.shape[-2:])
    per_channel = np.einsum("bjn,bin->jin", gb, zc)
    grads = {"weights": per_channel @ np.conj(params.pattern.basis()).T}
    if params.bias_mode is BiasMode.SCALAR:
        grads["bias"] = params.length * gb[:, :, 0].sum(axis=0)
    elif params.bias_mode is BiasMode.FULL:
        grads["bias"] = gb.sum(axis=0)
    return down, grads


def fc_backward(z, params: FcParams, upstream: DualGradient,
                domain: Domain = Domain.FREQUENCY) -> tuple:
    z = np.asarray(z, dtype=np.complex128)
    k, m, n = params.weights.shape
    scale = 1.0 / n if domain is Domain.FREQUENCY else 1.0
    w = params.weights.reshape(k, m * n)
    g = upstream.d_z.reshape(-1, k)
    gb = upstream.d_zbar.reshape(-1, k)
    lead = z.shape[:-2]
    d_z = (scale * (g @ np.conj(w))).reshape(lead + (m, n))
    d_zbar = (scale * (gb @ w)).reshape(lead + (m, n))
    # the layer is antiholomorphic in w, so dL/dconj(w) pairs with dL/d(out)
    grads = {"weights": (scale * (g.T @ z.reshape(-1, m * n))).reshape(k, m, n)}
    if params.bias is not None:
        grads["bias"] = gb.sum(axis=0)
    return DualGradient(d_z, d_zbar), grads


def divider_backward(up_even: DualGradient, up_odd: DualGradient) -> DualGradient:
    n = up_even.d_z.shape[-1]
    twiddle = np.exp(2j * np.pi * np.arange(n) / (2 * n))

    def combine(e, o, t):
        return np.concatenate([0.5 * e + 0.5 * t * o, 0.5 * e - 0.5 * t * o], axis=-1)

    return DualGradient(combine(up_even.d_z, up_odd.d_z, twiddle),
                        combine(up_even.d_zbar, up_odd.d_zbar, np.conj(twiddle)))


def batchnorm_backward(batch, params: BatchNormParams, upstream: DualGradient) -> tuple:
    """Backward pass through batch statistics, mean and variance included."""
    batch = np.asarray(batch, dtype=np.complex128)
    m, p, n = batch.shape
    centred = batch - batch.mean(axis=0)
    var = np.einsum("jkn,jkn->k", centred, np.conj(centred)).real / (m * n)
    s = var + params.epsilon
    gamma = params.gamma[None, :, None]
    inv_sqrt = (1.0 / np.sqrt(s))[None, :, None]
    inv_cube = (s**-1.5)[None, :, None] / (2 * m * n)
    g, gb = upstream.d_z, upstream.d_zbar
    a = np.einsum("jkn,jkn->k", g, centred)[None, :, None]
    b = np.einsum("jkn,jkn->k", gb, np.conj(centred))[None, :, None]
    coupling = inv_cube * (gamma * a + np.conj(gamma) * b)
    d_z = gamma * inv_sqrt * (g - g.mean(axis=0)) - coupling * np.conj(centred)
    d_zbar = np.conj(gamma) * inv_sqrt * (gb - gb.mean(axis=0)) - coupling * centred
    normalized = centred * inv_sqrt
    grads = {
        "gamma": np.einsum("jkn,jkn->k", gb, np.conj(normalized)),
        "beta": gb.sum(axis=0),
    }
    return DualGradient(d_z, d_zbar), grads


def residual_backward(x, w1, w2, upstream: DualGradient,
                      cfg: ActivationConfig = ActivationConfig()) -> tuple:
    """Backward pass of the frequency-domain residual block ``A(x w1) w2 + x``."""
    x = np.asarray(x, dtype=np.complex128)
    u = x * w1
    a = activation(u, cfg, Domain.FREQUENCY)
    up_a = DualGradient(upstream.d_z * w2, upstream.d_zbar * np.conj(w2))
    up_u = activation_backward(u, up_a, cfg, Domain.FREQUENCY)
    d_x = DualGradient(up_u.d_z * w1 + upstream.d_z, up_u.d_zbar * np.conj(w1) + upstream.d_zbar)
    grads = {
        "w1": _sum_batch(up_u.d_zbar * np.conj(x), 2),
        "w2": _sum_batch(upstream.d_zbar * np.conj(a), 2),
    }
    return d_x, grads


# -- finite differences ---------------------------------------------------------


def fd_wirtinger_oracle(f, at, h: float = 1e-6) -> DualGradient:
    """Central-difference Wirtinger derivatives of a scalar function of a complex array."""
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("step h must lie in [1e-7, 1e-4]")
    at = np.array(at, dtype=np.complex128)
    d_z = np.zeros_like(at)
    d_zbar = np.zeros_like(at)
    flat = at.reshape(-1)
    for idx in range(flat.size):
        derivs = []
        for step in (h, 1j * h):
            orig = flat[idx]
            flat[idx] = orig + step
            plus = complex(f(at))
            flat[idx] = orig - step
            minus = complex(f(at))
            flat[idx] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericalError(f"non-finite function value near coordinate {idx}")
            derivs.append((plus - minus) / (2 * h))
        dx, dy = derivs
        d_z.reshape(-1)[idx] = 0.5 * (dx - 1j * dy)
        d_zbar.reshape(-1)[idx] = 0.5 * (dx + 1j * dy)
    return DualGradient(d_z, d_zbar)
