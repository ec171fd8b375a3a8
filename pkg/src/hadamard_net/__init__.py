"""Convolutional networks computed entirely in the frequency domain.

Convolutions become Hadamard (elementwise) products of spectra, activations and
fully connected layers are chosen so that they commute with the DFT, and
training runs Wirtinger gradient descent on complex parameters.
"""
from .checkpoint import Checkpoint, CheckpointError
from .data import SpectralDataset, batch_iter, load_idx, load_mnist, precompute_spectra
from .layers import ActivationConfig, ActivationKind, BiasMode
from .network import LayerSpec, NetworkSpec, ParameterSet, backprop_compose, forward, predict_proba
from .oracle import naive_convolve, naive_dft, space_domain_twin_forward
from .spectral import (
    Domain,
    KernelPattern,
    SpectralTensor,
    circular_convolve,
    dft,
    hadamard_product,
    idft,
    inner_product,
    norm,
    pad_kernel,
)
from .training import (
    EpochMetrics,
    OptimizerConfig,
    build_mnist_network,
    evaluate,
    init_params,
    mnist_spec,
    sgd_step,
    train,
)
from .wirtinger import DualGradient, fd_wirtinger_oracle

__version__ = "0.1.0"
