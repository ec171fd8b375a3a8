"""Walk through the frequency-domain building blocks on small random inputs.

Prints the size of the disagreement between each fast path and its direct
counterpart.  Everything here is exact up to rounding, so expect errors near 1e-13 or smaller.
"""
import numpy as np

from hadamard_net import layers as L
from hadamard_net import oracle
from hadamard_net.layers import BiasMode
from hadamard_net.network import predict_proba
from hadamard_net.spectral import Domain, KernelPattern, circular_convolve, dft, idft
from hadamard_net.training import build_mnist_network


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def main():
    rng = np.random.default_rng(0)

    x = crandn(rng, 784)
    print(f"dft then idft, N=784:        {np.max(np.abs(idft(dft(x)) - x)):.2e}")
    print(f"fast dft vs double sum:       {np.max(np.abs(dft(x) - oracle.naive_dft(x))):.2e}")

    y = crandn(rng, 784)
    print(f"convolution via products:     {np.max(np.abs(circular_convolve(x, y) - oracle.naive_convolve(x, y))):.2e}")

    # a 3x3 kernel on a 28x28 image becomes nine taps of a length-784 filter
    pattern = KernelPattern.rectangle(3, 3, 28, 784)
    params = L.HadamardParams(pattern, crandn(rng, 4, 1, 9), crandn(rng, 4), BiasMode.SCALAR)
    img = rng.random((1, 784))
    spatial = L.conv_space(img, params)
    spectral = L.hadamard(dft(img), params)
    print(f"conv layer vs Hadamard layer: {np.max(np.abs(dft(spatial) - spectral)):.2e}")

    cfg = L.ActivationConfig()
    act = L.activation(dft(spatial), cfg, Domain.FREQUENCY)
    print(f"unit-norm activation commute: {np.max(np.abs(dft(L.activation(spatial, cfg, Domain.SPATIAL)) - act)):.2e}")

    spec, net = build_mnist_network(50, seed=1)
    images = rng.random((3, 1, 784))
    p_freq = predict_proba(spec, net, dft(images))
    p_space = oracle.space_domain_twin_forward(spec, net, images)
    print(f"whole network vs spatial twin: {np.max(np.abs(p_freq - p_space)):.2e}")
    print("class probabilities of the first image:", np.round(p_freq[0], 4))


if __name__ == "__main__":
    main()
