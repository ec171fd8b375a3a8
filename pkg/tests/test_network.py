import numpy as np
import pytest

from hadamard_net import layers as L
from hadamard_net import verify as V
from hadamard_net.layers import ActivationConfig, BiasMode
from hadamard_net.network import (
    LayerSpec,
    NetworkSpec,
    backprop_compose,
    forward,
    forward_spatial,
    one_hot,
    predict_proba,
    with_params,
)
from hadamard_net.spectral import dft
from hadamard_net.training import build_mnist_network, init_params
from hadamard_net.wirtinger import fd_wirtinger_oracle, loss_backward, relative_error
from conftest import crandn


def deep_spec(n=8, seed=3):
    return NetworkSpec((
        LayerSpec("input", n, 1),
        LayerSpec("hadamard", n, 1, 2, kernel=(0, 1, 3), bias_mode=BiasMode.FULL),
        LayerSpec("activation", n, 2, activation=ActivationConfig.georgiou(0.5, 2.0)),
        LayerSpec("batchnorm", n, 2),
        LayerSpec("residual", n, 2),
        LayerSpec("divider", n, 2),
        LayerSpec("hadamard", n // 2, 4, 3, kernel=(0, 2), bias_mode=BiasMode.SCALAR),
        LayerSpec("activation", n // 2, 3),
        LayerSpec("fc", n // 2, 3, 4, bias_mode=BiasMode.SCALAR),
        LayerSpec("output", 4, 1),
    ), seed=seed)


def perturbed(spec, rng, scale=0.5):
    params = init_params(spec, sigma=1.0)
    for group in params.tensors:
        for name in group:
            group[name] = group[name] + scale * crandn(rng, *group[name].shape)
    return params


def test_spec_validation():
    with pytest.raises(ValueError):
        NetworkSpec((LayerSpec("input", 4, 1),))
    with pytest.raises(ValueError):
        NetworkSpec((LayerSpec("output", 4, 1), LayerSpec("output", 4, 1)))
    with pytest.raises(ValueError):
        NetworkSpec((LayerSpec("input", 4, 1), LayerSpec("fc", 4, 1, 3), LayerSpec("output", 4, 1)))
    with pytest.raises(ValueError):
        NetworkSpec((LayerSpec("output", 4, 1),), seed=-1)
    with pytest.raises(ValueError):
        NetworkSpec((LayerSpec("output", 4, 1),), seed=2**64)
    with pytest.raises(ValueError):
        NetworkSpec((LayerSpec("output", 4, 1),), loss="mse")
    with pytest.raises(ValueError):
        LayerSpec("pool", 4, 1)


def test_spec_dict_roundtrip():
    spec = deep_spec()
    assert NetworkSpec.from_dict(spec.to_dict()) == spec
    mnist, _ = build_mnist_network(5)
    assert NetworkSpec.from_dict(mnist.to_dict()) == mnist


def test_parameter_set_congruence_and_equality(rng):
    spec = deep_spec()
    params = init_params(spec)
    params.check_congruent(spec)
    twin = params.copy()
    assert params.equals(twin)
    twin.tensors[1]["weights"][0, 0, 0] += 1e-3
    assert not params.equals(twin)
    broken = with_params(params, 1, "weights", np.zeros((9, 9, 9), complex))
    with pytest.raises(ValueError):
        broken.check_congruent(spec)


def test_forward_spatial_matches_forward(rng):
    spec = deep_spec()
    params = perturbed(spec, rng)
    x = rng.standard_normal((3, 1, 8))
    np.testing.assert_allclose(forward_spatial(spec, params, x), forward(spec, params, dft(x)))
    p = predict_proba(spec, params, dft(x))
    np.testing.assert_allclose(p.sum(axis=-1), 1, atol=1e-12)


def test_single_output_network_equals_loss_backward(rng):
    spec = NetworkSpec((LayerSpec("output", 5, 1),))
    z = crandn(rng, 1, 5)
    y = one_hot([2], 5)
    result = backprop_compose(spec, init_params(spec), z, y)
    expected = loss_backward(z, y)
    assert result.loss == pytest.approx(float(L.cross_entropy_loss(z, y)[0]))
    np.testing.assert_allclose(result.input_grad.d_z, expected.d_z)
    np.testing.assert_allclose(result.input_grad.d_zbar, expected.d_zbar)


def test_deep_network_gradients_match_finite_differences(rng):
    spec = deep_spec()
    params = perturbed(spec, rng)
    z = dft(rng.standard_normal((3, 1, 8)))
    y = one_hot([0, 3, 1], 4)
    result = backprop_compose(spec, params, z, y, check_conjugate=True)

    for i, name, grad in result.grads.items():
        def loss(w, i=i, name=name):
            changed = with_params(params, i, name, w)
            return np.mean(L.cross_entropy_loss(forward(spec, changed, z), y))

        fd = fd_wirtinger_oracle(loss, params.tensors[i][name])
        assert relative_error(grad, fd.d_zbar) <= 1e-5, (i, name)
    fd_in = fd_wirtinger_oracle(lambda v: np.mean(L.cross_entropy_loss(forward(spec, params, v), y)), z)
    assert relative_error(result.input_grad.d_zbar, fd_in.d_zbar) <= 1e-5


def test_conjugate_symmetry_at_every_boundary(rng):
    spec = deep_spec()
    result = backprop_compose(spec, perturbed(spec, rng), dft(rng.standard_normal((4, 1, 8))),
                              one_hot([0, 1, 2, 3], 4), track_gaps=True)
    assert len(result.conjugate_gaps) == len(spec.layers)
    assert max(result.conjugate_gaps) <= 1e-12


def test_mnist_network_spot_check_at_20_coordinates(rng):
    assert sum(1 for _ in build_mnist_network(50)[1].items()) * 5 == 20
    assert V.mnist_spot_check(rng) <= 1e-5


def test_one_hot():
    np.testing.assert_array_equal(one_hot([1, 0], 3), [[0, 1, 0], [1, 0, 0]])
