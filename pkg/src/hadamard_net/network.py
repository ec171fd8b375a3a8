"""Declarative frequency-domain networks: layer specs, parameters, forward and backward.

A network runs on batches of spectra shaped ``(m, channels, N)``.  The input
layer (a per-channel DFT) is usually applied ahead of time when the dataset is
loaded, so :func:`forward` expects its output; use :func:`forward_spatial` to
start from raw signals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L
from .layers import ActivationConfig, ActivationKind, BiasMode
from .spectral import Domain, KernelPattern, dft
from .wirtinger import (
    DualGradient,
    activation_backward,
    batchnorm_backward,
    divider_backward,
    fc_backward,
    hadamard_backward,
    loss_backward,
    residual_backward,
)

LAYER_KINDS = ("input", "hadamard", "activation", "batchnorm", "residual", "divider", "fc", "output")


@dataclass(frozen=True)
class LayerSpec:
    """One layer: its kind and the ``(channels, N)`` shape it consumes.

    ``out_channels`` is the filter count for ``hadamard`` and the output
    length for ``fc``; other kinds derive it.
    """

    kind: str
    n: int
    in_channels: int = 1
    out_channels: int | None = None
    kernel: tuple | None = None
    activation: ActivationConfig | None = None
    bias_mode: BiasMode = BiasMode.SCALAR
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kernel is not None:
            object.__setattr__(self, "kernel", tuple(int(i) for i in self.kernel))
        if self.kind in ("activation", "residual") and self.activation is None:
            object.__setattr__(self, "activation", ActivationConfig())

    def output_shape(self) -> tuple:
        if self.kind == "hadamard":
            return (self.out_channels, self.n)
        if self.kind == "divider":
            return (2 * self.in_channels, self.n // 2)
        if self.kind == "fc":
            return (self.out_channels,)
        if self.kind == "output":
            return (self.n,)
        return (self.in_channels, self.n)

    def input_shape(self) -> tuple:
        return (self.n,) if self.kind == "output" else (self.in_channels, self.n)

    def pattern(self) -> KernelPattern:
        return KernelPattern(self.kernel, self.n)

    def param_shapes(self) -> dict:
        p, n = self.in_channels, self.n
        if self.kind == "hadamard":
            shapes = {"weights": (self.out_channels, p, len(self.kernel))}
            if self.bias_mode is BiasMode.SCALAR:
                shapes["bias"] = (self.out_channels,)
            elif self.bias_mode is BiasMode.FULL:
                shapes["bias"] = (self.out_channels, n)
            return shapes
        if self.kind == "fc":
            shapes = {"weights": (self.out_channels, p, n)}
            if self.bias_mode is not BiasMode.NONE:
                shapes["bias"] = (self.out_channels,)
            return shapes
        if self.kind == "batchnorm":
            return {"gamma": (p,), "beta": (p, n)}
        if self.kind == "residual":
            return {"w1": (p, n), "w2": (p, n)}
        return {}

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "in_channels": self.in_channels,
               "out_channels": self.out_channels, "bias_mode": self.bias_mode.value,
               "epsilon": self.epsilon,
               "kernel": list(self.kernel) if self.kernel is not None else None}
        if self.activation is not None:
            a = self.activation
            out["activation"] = {"kind": a.kind.value, "c": a.c, "r": a.r,
                                 "zero_threshold": a.zero_threshold}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> LayerSpec:
        act = d.get("activation")
        if act is not None:
            act = ActivationConfig(ActivationKind(act["kind"]), act["c"], act["r"],
                                   act["zero_threshold"])
        return cls(kind=d["kind"], n=d["n"], in_channels=d["in_channels"],
                   out_channels=d["out_channels"], kernel=d["kernel"], activation=act,
                   bias_mode=BiasMode(d["bias_mode"]), epsilon=d["epsilon"])


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    loss: str = "cross_entropy"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers or self.layers[-1].kind != "output":
            raise ValueError("a network must end with exactly one output layer")
        if sum(layer.kind == "output" for layer in self.layers) != 1:
            raise ValueError("a network must end with exactly one output layer")
        if self.loss != "cross_entropy":
            raise ValueError(f"unsupported loss {self.loss!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.output_shape() != nxt.input_shape():
                raise ValueError(
                    f"{prev.kind} produces {prev.output_shape()} but {nxt.kind} expects {nxt.input_shape()}"
                )

    def to_dict(self) -> dict:
        return {"layers": [layer.to_dict() for layer in self.layers], "loss": self.loss,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> NetworkSpec:
        return cls(tuple(LayerSpec.from_dict(x) for x in d["layers"]), d["loss"], d["seed"])


@dataclass
class ParameterSet:
    """Per-layer dicts of complex parameter arrays, aligned with ``NetworkSpec.layers``."""

    tensors: list = field(default_factory=list)

    def items(self):
        for i, group in enumerate(self.tensors):
            for name, arr in group.items():
                yield i, name, arr

    def count(self) -> int:
        return sum(arr.size for _, _, arr in self.items())

    def copy(self) -> ParameterSet:
        return ParameterSet([{k: v.copy() for k, v in g.items()} for g in self.tensors])

    def check_congruent(self, spec: NetworkSpec) -> None:
        if len(self.tensors) != len(spec.layers):
            raise ValueError("parameter set does not match the network layer count")
        for layer, group in zip(spec.layers, self.tensors):
            shapes = {k: v.shape for k, v in group.items()}
            if shapes != layer.param_shapes():
                raise ValueError(f"{layer.kind} parameters {shapes} != {layer.param_shapes()}")

    def equals(self, other: ParameterSet) -> bool:
        """Bit-for-bit equality."""
        if len(self.tensors) != len(other.tensors):
            return False
        for a, b in zip(self.tensors, other.tensors):
            if a.keys() != b.keys():
                return False
            if any(a[k].shape != b[k].shape or a[k].tobytes() != b[k].tobytes() for k in a):
                return False
        return True


def _hadamard_params(layer: LayerSpec, group: dict) -> L.HadamardParams:
    return L.HadamardParams(layer.pattern(), group["weights"], group.get("bias"), layer.bias_mode)


def _fc_params(group: dict) -> L.FcParams:
    return L.FcParams(group["weights"], group.get("bias"))


def _batchnorm_params(layer: LayerSpec, group: dict) -> L.BatchNormParams:
    return L.BatchNormParams(group["gamma"], group["beta"], layer.epsilon)


def _layer_forward(layer: LayerSpec, group: dict, x: np.ndarray) -> np.ndarray:
    kind = layer.kind
    if kind == "input":
        return dft(x)
    if kind == "hadamard":
        return L.hadamard(x, _hadamard_params(layer, group))
    if kind == "activation":
        return L.activation(x, layer.activation, Domain.FREQUENCY)
    if kind == "batchnorm":
        return L.batchnorm(x, _batchnorm_params(layer, group))[0]
    if kind == "residual":
        return L.residual(x, group["w1"], group["w2"], Domain.FREQUENCY, layer.activation)
    if kind == "divider":
        return np.concatenate(L.divider(x), axis=-2)
    if kind == "fc":
        return L.fc(x, _fc_params(group), Domain.FREQUENCY)
    return x  # output: the loss consumes the raw amplitudes


def _layer_backward(layer: LayerSpec, group: dict, x: np.ndarray, up: DualGradient,
                    input_grad: bool = True):
    kind = layer.kind
    if kind == "hadamard":
        return hadamard_backward(x, _hadamard_params(layer, group), up, input_grad)
    if kind == "activation":
        return activation_backward(x, up, layer.activation, Domain.FREQUENCY), {}
    if kind == "batchnorm":
        return batchnorm_backward(x, _batchnorm_params(layer, group), up)
    if kind == "residual":
        return residual_backward(x, group["w1"], group["w2"], up, layer.activation)
    if kind == "divider":
        p = layer.in_channels
        even = DualGradient(up.d_z[..., :p, :], up.d_zbar[..., :p, :])
        odd = DualGradient(up.d_z[..., p:, :], up.d_zbar[..., p:, :])
        return divider_backward(even, odd), {}
    if kind == "fc":
        return fc_backward(x, _fc_params(group), up, Domain.FREQUENCY)
    if kind == "input":
        raise ValueError("gradients stop at the input layer")
    return up, {}


def _body(spec: NetworkSpec) -> range:
    start = 1 if spec.layers[0].kind == "input" else 0
    return range(start, len(spec.layers))


def forward(spec: NetworkSpec, params: ParameterSet, z: np.ndarray, keep: bool = False):
    """Run a batch of input spectra through every layer after the input layer.

    Returns the output-layer amplitudes ``(m, k)`` (before normalization); with
    ``keep=True`` also the list of per-layer inputs needed for backpropagation.
    """
    x = np.asarray(z, dtype=np.complex128)
    tape = []
    for i in _body(spec):
        if keep:
            tape.append(x)
        x = _layer_forward(spec.layers[i], params.tensors[i], x)
    return (x, tape) if keep else x


def forward_spatial(spec: NetworkSpec, params: ParameterSet, x: np.ndarray) -> np.ndarray:
    """Like :func:`forward` but starting from spatial signals."""
    return forward(spec, params, dft(x))


def predict_proba(spec: NetworkSpec, params: ParameterSet, z: np.ndarray) -> np.ndarray:
    return L.output_probabilities(forward(spec, params, z))


@dataclass
class BackpropResult:
    loss: float
    grads: ParameterSet
    outputs: np.ndarray
    conjugate_gaps: list
    input_grad: DualGradient | None = None


def backprop_compose(spec: NetworkSpec, params: ParameterSet, z: np.ndarray, targets: np.ndarray,
                     check_conjugate: bool = False, track_gaps: bool = False) -> BackpropResult:
    """Mean cross-entropy over the batch and its conjugate gradients for every parameter.

    Layer-local backward passes are chained in reverse order.  With
    ``track_gaps`` (implied by ``check_conjugate``) ``conjugate_gaps`` records,
    at every layer boundary, how far ``d_zbar`` strays from ``conj(d_z)``
    relative to the gradient scale; ``check_conjugate`` raises on a gap above
    1e-12.  ``input_grad`` is the gradient with respect to ``z``, except that a
    Hadamard layer directly after the input skips it (leaving ``None``) unless
    gaps are tracked.
    """
    track_gaps = track_gaps or check_conjugate
    out, tape = forward(spec, params, z, keep=True)
    targets = np.asarray(targets, dtype=np.float64)
    m = out.shape[0]
    loss = float(np.mean(L.cross_entropy_loss(out, targets)))
    up = loss_backward(out, targets).scaled(1.0 / m)
    grads = ParameterSet([{} for _ in spec.layers])
    gaps = []

    def record(where):
        scale = max(1.0, float(np.max(np.abs(up.d_z), initial=0.0)))
        gap = up.conjugate_gap() / scale
        gaps.append(gap)
        if check_conjugate and gap > 1e-12:
            raise AssertionError(f"conjugate symmetry broken at {where} ({gap:.3g})")

    first = _body(spec)[0]
    for i, x in zip(reversed(_body(spec)), reversed(tape)):
        if track_gaps:
            record(f"output of layer {i}")
        up, grads.tensors[i] = _layer_backward(spec.layers[i], params.tensors[i], x, up,
                                               input_grad=track_gaps or i != first)
    if track_gaps:
        record("network input")
    gaps.reverse()
    return BackpropResult(loss, grads, out, gaps, up)


def one_hot(labels, classes: int = 10) -> np.ndarray:
    labels = np.asarray(labels)
    out = np.zeros(labels.shape + (classes,))
    np.put_along_axis(out, labels[..., None], 1.0, axis=-1)
    return out


def with_params(params: ParameterSet, layer: int, name: str, value: np.ndarray) -> ParameterSet:
    """Shallow copy of ``params`` with one tensor replaced."""
    out = ParameterSet([dict(g) for g in params.tensors])
    out.tensors[layer][name] = value
    return out


__all__ = [
    "LAYER_KINDS", "LayerSpec", "NetworkSpec", "ParameterSet", "BackpropResult",
    "forward", "forward_spatial", "predict_proba", "backprop_compose", "one_hot", "with_params",
]
