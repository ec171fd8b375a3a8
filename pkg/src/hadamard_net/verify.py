"""Invariant suites run by ``hadamard-net verify``.

Each property draws random instances, measures an error, and passes when the
largest error stays at or below its tolerance.  Gradient properties compare the
analytic backward passes with the finite-difference oracle and only run at the
small sizes (N <= 16) to keep the oracle affordable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers as L
from . import oracle
from . import spectral as S
from . import wirtinger as W
from .layers import ActivationConfig, BiasMode
from .network import LayerSpec, NetworkSpec, backprop_compose, forward, one_hot, predict_proba, with_params
from .spectral import Domain, KernelPattern
from .training import build_mnist_network, init_params

DEFAULT_SIZES = (2, 3, 4, 8, 16, 49, 784)
GRADIENT_MAX_N = 16


@dataclass(frozen=True)
class PropertyResult:
    name: str
    error: float
    tolerance: float
    instances: int

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name:<28} max_err={self.error:.3e} "
                f"tol={self.tolerance:.0e} n={self.instances}")


def crandn(rng, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rel(a, b) -> float:
    return W.relative_error(a, b)


def random_pattern(rng, n: int, size: int | None = None) -> KernelPattern:
    size = size or int(rng.integers(1, n + 1))
    return KernelPattern(tuple(sorted(rng.choice(n, size=min(size, n), replace=False))), n)


def random_hadamard(rng, n: int, p: int = 2, q: int = 3, mode=BiasMode.SCALAR) -> L.HadamardParams:
    pattern = random_pattern(rng, n)
    bias = {BiasMode.NONE: None, BiasMode.SCALAR: crandn(rng, q),
            BiasMode.FULL: crandn(rng, q, n)}[mode]
    return L.HadamardParams(pattern, crandn(rng, q, p, pattern.size), bias, mode)


# -- transform properties ------------------------------------------------------


def dft_roundtrip(rng, n):
    x = crandn(rng, n)
    return rel(S.idft(S.dft(x)), x)


def dft_linearity(rng, n):
    x, y = crandn(rng, n), crandn(rng, n)
    a, b = crandn(rng, 2)
    return rel(S.dft(a * x + b * y), a * S.dft(x) + b * S.dft(y))


def parseval(rng, n):
    x, y = crandn(rng, n), crandn(rng, n)
    lhs = np.vdot(y, x)
    rhs = np.vdot(S.dft(y), S.dft(x)) / n
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), np.linalg.norm(x) * np.linalg.norm(y) * 1e-8)


def plancherel(rng, n):
    x = crandn(rng, n)
    a, b = np.linalg.norm(x), np.linalg.norm(S.dft(x)) / np.sqrt(n)
    return abs(a - b) / a


def fast_vs_naive(rng, n):
    x = crandn(rng, n)
    return rel(S.dft(x), oracle.naive_dft(x))


def convolution_theorem(rng, n):
    x, y = crandn(rng, n), crandn(rng, n)
    return rel(S.circular_convolve(x, y), oracle.naive_convolve(x, y))


# -- commutation -----------------------------------------------------------------


def commute_hadamard(rng, n):
    mode = (BiasMode.NONE, BiasMode.SCALAR, BiasMode.FULL)[int(rng.integers(3))]
    params = random_hadamard(rng, n, mode=mode)
    x = crandn(rng, 2, n)
    return rel(S.dft(L.conv_space(x, params)), L.hadamard(S.dft(x), params))


def _commute_activation(rng, n, cfg):
    x = crandn(rng, 3, n) * 10.0 ** rng.uniform(-3, 3)
    return rel(S.dft(L.activation(x, cfg, Domain.SPATIAL)),
               L.activation(S.dft(x), cfg, Domain.FREQUENCY))


def commute_unit_norm(rng, n):
    return _commute_activation(rng, n, ActivationConfig())


def commute_georgiou(rng, n):
    c, r = rng.uniform(0.1, 3.0, size=2)
    return _commute_activation(rng, n, ActivationConfig.georgiou(c, r))


def commute_fc(rng, n):
    w = crandn(rng, 4, 2, n)
    b = crandn(rng, 4)
    x = crandn(rng, 2, n)
    spatial = L.fc(x, L.FcParams(S.idft(w), b), Domain.SPATIAL)
    return rel(spatial, L.fc(S.dft(x), L.FcParams(w, b), Domain.FREQUENCY))


def commute_residual(rng, n):
    w1, w2 = crandn(rng, 2, n), crandn(rng, 2, n)
    x = crandn(rng, 2, n)
    spatial = L.residual(x, w1, w2, Domain.SPATIAL)
    return rel(S.dft(spatial), L.residual(S.dft(x), S.dft(w1), S.dft(w2), Domain.FREQUENCY))


def commute_batchnorm(rng, n):
    m, p = 4, 2
    x = crandn(rng, m, p, n)
    params = L.BatchNormParams(crandn(rng, p), crandn(rng, p, n), float(rng.uniform(1e-3, 1e-1)))
    spatial, _ = L.batchnorm(x, params)
    freq, _ = L.batchnorm(S.dft(x), params.to_frequency())
    return rel(S.dft(spatial), freq)


def divider_property(rng, n):
    x = crandn(rng, 2 * n)
    even, odd = L.divider(S.dft(x))
    return max(rel(even, S.dft(x[0::2])), rel(odd, S.dft(x[1::2])))


def network_twin(rng, n):
    k = int(rng.integers(1, n + 1))
    kernel = tuple(sorted(rng.choice(n, size=k, replace=False)))
    spec = NetworkSpec((
        LayerSpec("input", n, 1),
        LayerSpec("hadamard", n, 1, 3, kernel=kernel, bias_mode=BiasMode.SCALAR),
        LayerSpec("activation", n, 3),
        LayerSpec("batchnorm", n, 3),
        LayerSpec("residual", n, 3),
        LayerSpec("fc", n, 3, 5),
        LayerSpec("output", 5, 1),
    ), seed=int(rng.integers(2**32)))
    params = init_params(spec, sigma=1.0)
    for group in params.tensors:
        for name in group:
            group[name] = group[name] + 0.3 * crandn(rng, *group[name].shape)
    x = rng.standard_normal((3, 1, n))
    return float(np.max(np.abs(predict_proba(spec, params, S.dft(x))
                               - oracle.space_domain_twin_forward(spec, params, x))))


# -- gradients ---------------------------------------------------------------------


def probe(rng, shape):
    """A random complex-valued function of ``y`` and its exact Wirtinger pair."""
    a, b, c = crandn(rng, *shape), crandn(rng, *shape), crandn(rng, *shape)

    def f(y):
        return np.sum(a * y + b * np.conj(y) + c * y * np.conj(y))

    def upstream(y):
        return W.DualGradient(a + c * np.conj(y), b + c * y)

    return f, upstream


def _dual_error(analytic: W.DualGradient, numeric: W.DualGradient) -> float:
    return max(rel(analytic.d_z, numeric.d_z), rel(analytic.d_zbar, numeric.d_zbar))


def grad_loss(rng, n):
    n = max(n, 2)  # with one class the loss is identically zero
    z = crandn(rng, 2, n)
    y = rng.dirichlet(np.ones(n), size=2)
    analytic = W.loss_backward(z, y)
    numeric = W.fd_wirtinger_oracle(lambda v: np.sum(L.cross_entropy_loss(v, y)), z)
    return _dual_error(analytic, numeric)


def grad_activation(rng, n):
    cfg = ActivationConfig() if rng.random() < 0.5 else ActivationConfig.georgiou(*rng.uniform(0.2, 2, 2))
    domain = Domain.FREQUENCY if rng.random() < 0.5 else Domain.SPATIAL
    z = crandn(rng, 2, n)
    f, up = probe(rng, z.shape)
    out = L.activation(z, cfg, domain)
    analytic = W.activation_backward(z, up(out), cfg, domain)
    numeric = W.fd_wirtinger_oracle(lambda v: f(L.activation(v, cfg, domain)), z)
    upstream = up(out)
    dense = [W.dense_backward(*W.activation_jacobians(z[c], cfg, domain),
                              W.DualGradient(upstream.d_z[c], upstream.d_zbar[c]))
             for c in range(len(z))]
    dense = W.DualGradient(np.stack([d.d_z for d in dense]), np.stack([d.d_zbar for d in dense]))
    return max(_dual_error(analytic, numeric), _dual_error(dense, analytic))


def grad_hadamard(rng, n):
    mode = (BiasMode.NONE, BiasMode.SCALAR, BiasMode.FULL)[int(rng.integers(3))]
    params = random_hadamard(rng, n, p=2, q=2, mode=mode)
    z = crandn(rng, 2, n)
    f, up = probe(rng, (2, n))
    down, grads = W.hadamard_backward(z, params, up(L.hadamard(z, params)))
    err = _dual_error(down, W.fd_wirtinger_oracle(lambda v: f(L.hadamard(v, params)), z))

    def with_weights(w):
        return L.HadamardParams(params.pattern, w, params.bias, mode)

    fd_w = W.fd_wirtinger_oracle(lambda w: f(L.hadamard(z, with_weights(w))), params.weights)
    err = max(err, rel(grads["weights"], fd_w.d_zbar))
    if mode is not BiasMode.NONE:
        fd_b = W.fd_wirtinger_oracle(
            lambda b: f(L.hadamard(z, L.HadamardParams(params.pattern, params.weights, b, mode))),
            params.bias)
        err = max(err, rel(grads["bias"], fd_b.d_zbar))
    return err


def grad_fc(rng, n):
    domain = Domain.FREQUENCY if rng.random() < 0.5 else Domain.SPATIAL
    params = L.FcParams(crandn(rng, 3, 2, n), crandn(rng, 3))
    z = crandn(rng, 2, n)
    f, up = probe(rng, (3,))
    down, grads = W.fc_backward(z, params, up(L.fc(z, params, domain)), domain)
    err = _dual_error(down, W.fd_wirtinger_oracle(lambda v: f(L.fc(v, params, domain)), z))
    fd_w = W.fd_wirtinger_oracle(lambda w: f(L.fc(z, L.FcParams(w, params.bias), domain)),
                                 params.weights)
    fd_b = W.fd_wirtinger_oracle(lambda b: f(L.fc(z, L.FcParams(params.weights, b), domain)),
                                 params.bias)
    return max(err, rel(grads["weights"], fd_w.d_zbar), rel(grads["bias"], fd_b.d_zbar))


def grad_batchnorm(rng, n):
    m, p = 3, 2
    x = crandn(rng, m, p, n)
    params = L.BatchNormParams(crandn(rng, p), crandn(rng, p, n), 0.1)
    f, up = probe(rng, x.shape)
    down, grads = W.batchnorm_backward(x, params, up(L.batchnorm(x, params)[0]))
    err = _dual_error(down, W.fd_wirtinger_oracle(lambda v: f(L.batchnorm(v, params)[0]), x))
    fd_g = W.fd_wirtinger_oracle(
        lambda g: f(L.batchnorm(x, L.BatchNormParams(g, params.beta, params.epsilon))[0]), params.gamma)
    fd_b = W.fd_wirtinger_oracle(
        lambda b: f(L.batchnorm(x, L.BatchNormParams(params.gamma, b, params.epsilon))[0]), params.beta)
    return max(err, rel(grads["gamma"], fd_g.d_zbar), rel(grads["beta"], fd_b.d_zbar))


def grad_residual(rng, n):
    x, w1, w2 = crandn(rng, 2, n), crandn(rng, 2, n), crandn(rng, 2, n)
    f, up = probe(rng, x.shape)

    def run(x_, w1_, w2_):
        return L.residual(x_, w1_, w2_, Domain.FREQUENCY)

    down, grads = W.residual_backward(x, w1, w2, up(run(x, w1, w2)))
    err = _dual_error(down, W.fd_wirtinger_oracle(lambda v: f(run(v, w1, w2)), x))
    fd1 = W.fd_wirtinger_oracle(lambda v: f(run(x, v, w2)), w1)
    fd2 = W.fd_wirtinger_oracle(lambda v: f(run(x, w1, v)), w2)
    return max(err, rel(grads["w1"], fd1.d_zbar), rel(grads["w2"], fd2.d_zbar))


def grad_divider(rng, n):
    x = crandn(rng, 2, 2 * n)
    fe, up_e = probe(rng, (2, n))
    fo, up_o = probe(rng, (2, n))
    even, odd = L.divider(x)
    analytic = W.divider_backward(up_e(even), up_o(odd))

    def f(v):
        e, o = L.divider(v)
        return fe(e) + fo(o)

    return _dual_error(analytic, W.fd_wirtinger_oracle(f, x))


def mnist_spot_check(rng, per_tensor: int = 5) -> float:
    """Backprop through the full MNIST network against the oracle at a few coordinates.

    Returns the worst relative error over the tensors, each judged on its own so
    that large weight gradients cannot hide an error in a small bias gradient.
    """
    spec, params = build_mnist_network(50, seed=int(rng.integers(2**32)))
    z = S.dft(rng.random((1, 1, 784)))
    y = one_hot([int(rng.integers(10))], 10)
    grads = backprop_compose(spec, params, z, y).grads
    worst = 0.0
    for i, name, base in params.items():
        analytic, numeric = [], []
        for _ in range(per_tensor):
            c = tuple(int(rng.integers(s)) for s in base.shape)

            def loss(v, c=c, i=i, name=name, base=base):
                w = base.copy()
                w[c] = v[0]
                return float(L.cross_entropy_loss(forward(spec, with_params(params, i, name, w), z), y)[0])

            analytic.append(grads.tensors[i][name][c])
            # the FC output is ~1e-4 at this init, so the step must sit well below it
            numeric.append(W.fd_wirtinger_oracle(loss, np.array([base[c]]), h=1e-7).d_zbar[0])
        worst = max(worst, rel(np.array(analytic), np.array(numeric)))
    return worst


# -- statistics ----------------------------------------------------------------------


def hirschman(rng, n):
    """Shortfall of the entropy sum below ``log N`` (zero when the bound holds)."""
    z = crandn(rng, n) * rng.uniform(0.0, 2.0, n) ** 4
    hp, hq = L.entropic_uncertainty(z)
    return max(0.0, np.log(n) - (hp + hq))


def _init_draws(rng, n, draws=100_000):
    spec = NetworkSpec((LayerSpec("input", n, 1), LayerSpec("fc", n, 1, draws // n + 1),
                        LayerSpec("output", draws // n + 1, 1)), seed=int(rng.integers(2**63)))
    sigma = float(rng.uniform(0.05, 2.0))
    w = init_params(spec, sigma).tensors[1]["weights"].ravel()[:draws]
    return w, 2 * sigma**2 / n


def init_variance(rng, n):
    """Worst relative deviation of the per-part sample variance from ``2 sigma^2 / N``."""
    w, expected = _init_draws(rng, n)
    return max(abs(np.var(w.real) / expected - 1), abs(np.var(w.imag) / expected - 1))


def init_mean(rng, n):
    """Sample mean modulus as a fraction of its CLT bound ``3 sqrt(2 sigma^2 / N * 2 / draws)``."""
    w, expected = _init_draws(rng, n)
    return abs(w.mean()) / (3 * np.sqrt(expected * 2 / w.size))


# (name, function, tolerance, size filter)
PROPERTIES = [
    ("dft_roundtrip", dft_roundtrip, 1e-10, None),
    ("dft_linearity", dft_linearity, 1e-10, None),
    ("parseval", parseval, 1e-10, None),
    ("plancherel", plancherel, 1e-10, None),
    ("dft_fast_vs_naive", fast_vs_naive, 1e-10, None),
    ("convolution_theorem", convolution_theorem, 1e-9, None),
    ("commute_hadamard", commute_hadamard, 1e-9, None),
    ("commute_unit_norm", commute_unit_norm, 1e-9, None),
    ("commute_georgiou", commute_georgiou, 1e-9, None),
    ("commute_fc", commute_fc, 1e-9, None),
    ("commute_residual", commute_residual, 1e-9, None),
    ("commute_batchnorm", commute_batchnorm, 1e-9, None),
    ("divider_property", divider_property, 1e-10, None),
    ("network_twin", network_twin, 1e-8, None),
    ("grad_loss", grad_loss, 1e-5, GRADIENT_MAX_N),
    ("grad_activation", grad_activation, 1e-5, GRADIENT_MAX_N),
    ("grad_hadamard", grad_hadamard, 1e-5, GRADIENT_MAX_N),
    ("grad_fc", grad_fc, 1e-5, GRADIENT_MAX_N),
    ("grad_batchnorm", grad_batchnorm, 1e-5, GRADIENT_MAX_N),
    ("grad_residual", grad_residual, 1e-5, GRADIENT_MAX_N),
    ("grad_divider", grad_divider, 1e-5, GRADIENT_MAX_N),
    ("hirschman", hirschman, 1e-9, None),
]

# properties that are statistical rather than per-size; run once at N=784
STATISTICS = [
    ("init_variance", init_variance, 0.05),
    ("init_mean_modulus", init_mean, 1.0),
]


def run_property(name, fn, tol, sizes, trials, rng) -> PropertyResult:
    worst, count = 0.0, 0
    for n in sizes:
        for _ in range(trials):
            err = float(fn(rng, n))
            worst = max(worst, err) if np.isfinite(err) else np.inf
            count += 1
    return PropertyResult(name, worst, tol, count)


def run_all(sizes=DEFAULT_SIZES, trials: int = 100, seed: int = 0, only=None, report=None):
    """Run every property (or those named in ``only``); returns the results in order.

    ``report`` is called with each result as soon as it is available.
    """
    rng = np.random.default_rng(seed)
    results = []
    for name, fn, tol, max_n in PROPERTIES:
        if only and name not in only:
            continue
        use = [n for n in sizes if max_n is None or n <= max_n] or [min(sizes)]
        result = run_property(name, fn, tol, use, trials, rng)
        results.append(result)
        if report:
            report(result)
    for name, fn, tol in STATISTICS:
        if only and name not in only:
            continue
        result = run_property(name, fn, tol, [784], 1, rng)
        results.append(result)
        if report:
            report(result)
    return results
