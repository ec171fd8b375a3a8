"""Network assembly, complex Gaussian initialization, mini-batch Wirtinger descent."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import SpectralDataset, batch_iter
from .layers import ActivationConfig, BiasMode, cross_entropy_loss
from .network import LayerSpec, NetworkSpec, ParameterSet, backprop_compose, forward, one_hot
from .spectral import KernelPattern
from .wirtinger import NumericalError

MNIST_N = 784
MNIST_CLASSES = 10
WEIGHT_NAMES = ("weights", "w1", "w2")


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.002
    batch_size: int = 100
    epochs: int = 70
    sigma: float = 0.1
    precondition_fc_bias: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0 or self.sigma <= 0:
            raise ValueError("learning_rate and sigma must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be positive and epochs nonnegative")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float
    seconds: float

    HEADER = "epoch,train_loss,train_acc,test_acc,seconds"

    def csv_row(self) -> str:
        return (f"{self.epoch},{self.train_loss:.6f},{self.train_acc:.4f},"
                f"{self.test_acc:.4f},{self.seconds:.2f}")


def init_params(spec: NetworkSpec, sigma: float = 0.1, seed: int | None = None) -> ParameterSet:
    """Draw weights as circularly symmetric complex Gaussians.

    Real and imaginary parts are independent ``N(0, 2 sigma^2 / N)`` with ``N``
    the channel length of the layer; biases and shifts start at zero and batch
    norm scales at one.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    groups = []
    for layer in spec.layers:
        group = {}
        for name, shape in layer.param_shapes().items():
            if name in WEIGHT_NAMES:
                std = np.sqrt(2.0 * sigma**2 / layer.n)
                group[name] = std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
            elif name == "gamma":
                group[name] = np.ones(shape, np.complex128)
            else:
                group[name] = np.zeros(shape, np.complex128)
        groups.append(group)
    return ParameterSet(groups)


def mnist_kernel(n: int = MNIST_N, side: int = 7, stride: int = 28) -> KernelPattern:
    return KernelPattern.rectangle(side, side, stride, n)


def mnist_spec(filters: int = 50, seed: int = 0,
               activation: ActivationConfig = ActivationConfig()) -> NetworkSpec:
    """In -> Hadamard(7x7, ``filters``) -> A -> FC(10) -> Out over 784-point spectra."""
    if filters < 1:
        raise ValueError("need at least one filter")
    n = MNIST_N
    return NetworkSpec((
        LayerSpec("input", n, 1),
        LayerSpec("hadamard", n, 1, filters, kernel=mnist_kernel().indices,
                  bias_mode=BiasMode.SCALAR),
        LayerSpec("activation", n, filters, activation=activation),
        LayerSpec("fc", n, filters, MNIST_CLASSES, bias_mode=BiasMode.SCALAR),
        LayerSpec("output", MNIST_CLASSES, 1),
    ), seed=seed)


def build_mnist_network(filters: int = 50, seed: int = 0, sigma: float = 0.1) -> tuple:
    spec = mnist_spec(filters, seed)
    return spec, init_params(spec, sigma, seed)


def step_scales(spec: NetworkSpec, cfg: OptimizerConfig) -> dict:
    """Per-tensor multipliers on the learning rate, keyed by ``(layer, name)``.

    An FC output is ``(1/N) <z, w> + b``: every weight enters through the 1/N
    factor while the bias does not, so under a shared step the bias moves
    about ``N^2 / ||z||^2`` times faster than the weights and swamps them
    within one batch.  Scaling its step by ``1/N^2`` is plain descent on
    ``beta = N b``, i.e. on a bias that sits inside the 1/N factor.
    """
    scales = {}
    if cfg.precondition_fc_bias:
        for i, layer in enumerate(spec.layers):
            if layer.kind == "fc" and layer.bias_mode is not BiasMode.NONE:
                scales[(i, "bias")] = 1.0 / layer.n**2
    return scales


def sgd_step(params: ParameterSet, grads: ParameterSet, learning_rate: float,
             scales: dict | None = None) -> ParameterSet:
    """``w <- w - lr * s * dL/dconj(w)`` for every tensor that has a gradient.

    ``s`` comes from ``scales`` keyed by ``(layer, name)`` and defaults to 1.
    """
    scales = scales or {}
    out = params.copy()
    for i, name, g in grads.items():
        bad = ~np.isfinite(g)
        if np.any(bad):
            coord = tuple(int(c) for c in np.argwhere(bad)[0])
            raise NumericalError(f"non-finite gradient in layer {i} '{name}' at {coord}")
        if g.shape != out.tensors[i][name].shape:
            raise ValueError(f"gradient shape {g.shape} does not match layer {i} '{name}'")
        out.tensors[i][name] -= learning_rate * scales.get((i, name), 1.0) * g
    return out


def evaluate(spec: NetworkSpec, params: ParameterSet, dataset: SpectralDataset,
             batch_size: int = 1000) -> tuple:
    """Return ``(accuracy, mean cross-entropy)`` of argmax predictions."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    classes = spec.layers[-1].n
    correct = 0
    loss_sum = 0.0
    for start in range(0, len(dataset), batch_size):
        z = forward(spec, params, dataset.spectra[start:start + batch_size])
        labels = dataset.labels[start:start + batch_size]
        correct += int(np.sum(np.argmax(np.abs(z), axis=-1) == labels))
        loss_sum += float(np.sum(cross_entropy_loss(z, one_hot(labels, classes))))
    return correct / len(dataset), loss_sum / len(dataset)


def train(spec: NetworkSpec, params: ParameterSet, dataset: SpectralDataset,
          cfg: OptimizerConfig, metrics_sink=None, test_set: SpectralDataset | None = None,
          seed: int | None = None) -> ParameterSet:
    """Run ``cfg.epochs`` shuffled passes of mini-batch Wirtinger gradient descent.

    Gradients are averaged over each batch.  ``metrics_sink`` (any callable)
    receives one :class:`EpochMetrics` per epoch; training accuracy and loss
    are measured on the fly, before each batch's update.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    seed = spec.seed if seed is None else seed
    classes = spec.layers[-1].n
    scales = step_scales(spec, cfg)
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        loss_sum, correct = 0.0, 0
        for idx in batch_iter(len(dataset), cfg.batch_size, seed, epoch):
            labels = dataset.labels[idx]
            result = backprop_compose(spec, params, dataset.spectra[idx], one_hot(labels, classes))
            params = sgd_step(params, result.grads, cfg.learning_rate, scales)
            loss_sum += result.loss * len(idx)
            correct += int(np.sum(np.argmax(np.abs(result.outputs), axis=-1) == labels))
        test_acc = evaluate(spec, params, test_set)[0] if test_set is not None else float("nan")
        record = EpochMetrics(epoch + 1, loss_sum / len(dataset), correct / len(dataset),
                              test_acc, time.perf_counter() - started)
        if metrics_sink is not None:
            metrics_sink(record)
    return params
