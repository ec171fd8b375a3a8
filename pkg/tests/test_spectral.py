import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hadamard_net.oracle import naive_convolve, naive_dft
from hadamard_net.spectral import (
    Domain,
    DomainError,
    KernelPattern,
    NonFiniteError,
    SpectralTensor,
    circular_convolve,
    dft,
    hadamard_product,
    idft,
    inner_product,
    norm,
    pad_kernel,
)
from conftest import crandn

SIZES = [1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 13, 16, 25, 49, 64, 97, 784]


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def complex_vectors(draw, min_n=1, max_n=64):
    n = draw(st.integers(min_n, max_n))
    re = draw(hnp.arrays(np.float64, n, elements=finite))
    im = draw(hnp.arrays(np.float64, n, elements=finite))
    return re + 1j * im


@st.composite
def vector_pairs(draw, max_n=64):
    x = draw(complex_vectors(max_n=max_n))
    re = draw(hnp.arrays(np.float64, len(x), elements=finite))
    im = draw(hnp.arrays(np.float64, len(x), elements=finite))
    return x, re + 1j * im


def test_dft_of_delta_is_all_ones():
    np.testing.assert_allclose(dft([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)


def test_dft_of_shifted_delta_pins_the_sign_convention():
    np.testing.assert_allclose(dft([0, 1, 0, 0]), [1, -1j, -1, 1j], atol=1e-15)


def test_idft_examples():
    np.testing.assert_allclose(idft([1, 1, 1, 1]), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(idft([3, -1]), [1, 2], atol=1e-15)


@pytest.mark.parametrize("n", SIZES)
def test_fast_dft_matches_naive_oracle(n, rng):
    x = crandn(rng, 3, n)
    assert rel(dft(x), naive_dft(x)) <= 1e-10


def test_fast_dft_on_prime_length_uses_the_fallback(rng):
    x = crandn(rng, 101)
    assert rel(dft(x), naive_dft(x)) <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 8, 49, 784])
def test_roundtrip_linearity_parseval_plancherel(n, rng):
    for _ in range(20):
        x, y = crandn(rng, n), crandn(rng, n)
        a, b = crandn(rng, 2)
        assert rel(idft(dft(x)), x) <= 1e-10
        assert rel(dft(a * x + b * y), a * dft(x) + b * dft(y)) <= 1e-10
        lhs, rhs = inner_product(x, y), inner_product(dft(x), dft(y)) / n
        assert abs(lhs - rhs) <= 1e-10 * norm(x) * norm(y)
        assert abs(norm(x) - norm(dft(x)) / np.sqrt(n)) <= 1e-10 * norm(x)


@settings(max_examples=60, deadline=None)
@given(complex_vectors())
def test_roundtrip_property(x):
    if norm(x) == 0:
        assert norm(idft(dft(x))) == 0
    else:
        assert rel(idft(dft(x)), x) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(complex_vectors())
def test_plancherel_property(x):
    assert abs(norm(x) - norm(dft(x)) / np.sqrt(len(x))) <= 1e-10 * max(norm(x), 1e-300)


@settings(max_examples=60, deadline=None)
@given(vector_pairs())
def test_convolution_theorem_property(pair):
    x, y = pair
    scale = max(norm(x) * norm(y), 1e-300)
    direct = naive_convolve(x, y)
    assert np.linalg.norm(circular_convolve(x, y) - direct) <= 1e-9 * scale * np.sqrt(len(x))
    assert np.linalg.norm(dft(direct) - dft(x) * dft(y)) <= 1e-9 * scale * len(x)


@pytest.mark.parametrize("x, y, expected", [
    ((1, 2, 3, 4), (1, 0, 0, 0), (1, 2, 3, 4)),
    ((1, 1, 0, 0), (1, 1, 0, 0), (1, 2, 1, 0)),
    ((0, 0, 0, 1), (0, 0, 0, 1), (0, 0, 1, 0)),
])
def test_circular_convolve_examples(x, y, expected):
    np.testing.assert_allclose(circular_convolve(x, y), expected, atol=1e-14)


def test_convolve_length_mismatch():
    with pytest.raises(ValueError):
        circular_convolve([1, 2, 3], [1, 2])
    with pytest.raises(ValueError):
        hadamard_product([1, 2, 3], [1, 2])


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf, complex(0, np.nan)])
def test_non_finite_input_is_rejected(bad):
    with pytest.raises(NonFiniteError):
        dft([1.0, bad, 0.0])
    with pytest.raises(NonFiniteError):
        idft([1.0, bad])


def test_empty_input_is_rejected():
    with pytest.raises(ValueError):
        dft([])


def test_pad_kernel_three_by_three_on_five_by_five():
    w = np.arange(1, 10) + 0j
    pattern = KernelPattern((0, 1, 2, 5, 6, 7, 10, 11, 12), 25)
    expected = np.zeros(25, complex)
    expected[[0, 1, 2, 5, 6, 7, 10, 11, 12]] = w
    np.testing.assert_array_equal(pad_kernel(w, pattern), expected)
    assert pattern == KernelPattern.rectangle(3, 3, 5, 25)


def test_pad_kernel_small_examples():
    np.testing.assert_array_equal(pad_kernel([7j], KernelPattern((0,), 4)), [7j, 0, 0, 0])
    np.testing.assert_array_equal(pad_kernel([1, 2], KernelPattern((0, 3), 4)), [1, 0, 0, 2])


def test_pad_kernel_index_out_of_range():
    with pytest.raises(IndexError):
        pad_kernel([1, 2], KernelPattern((0, 5), 6), n=4)
    with pytest.raises(IndexError):
        KernelPattern((0, 4), 4)


@pytest.mark.parametrize("indices", [(), (1, 1), (3, 2), (-1, 2)])
def test_kernel_pattern_validation(indices):
    with pytest.raises((ValueError, IndexError)):
        KernelPattern(indices, 8)


def test_pattern_basis_rows_are_spectra_of_unit_taps():
    pattern = KernelPattern((0, 2, 5), 8)
    for t, k in enumerate(pattern.indices):
        delta = np.zeros(8)
        delta[k] = 1
        np.testing.assert_allclose(pattern.basis()[t], naive_dft(delta), atol=1e-14)


def test_inner_product_examples():
    assert inner_product([1, 0, 0, 0], [1, 0, 0, 0]) == 1
    assert inner_product(dft([1, 0, 0, 0]), dft([1, 0, 0, 0])) / 4 == 1
    assert inner_product([1j, 0], [0, 1]) == 0
    # conjugate-linear in the second argument
    assert inner_product([1, 0], [1j, 0]) == -1j
    with pytest.raises(ValueError):
        inner_product([1, 2], [1, 2, 3])


def test_norm_examples():
    assert norm([3, 4j]) == 5
    assert norm(np.zeros(7)) == 0


def test_spectral_tensor_tags_and_immutability():
    t = SpectralTensor.spatial([[1, 2], [3, 4]])
    assert (t.channels, t.length, t.domain) == (2, 2, Domain.SPATIAL)
    assert t.with_data(t.data * 2).domain is Domain.SPATIAL
    with pytest.raises(ValueError):
        t.data[0, 0] = 5
    with pytest.raises(DomainError):
        t.require(Domain.FREQUENCY)
    with pytest.raises(NonFiniteError):
        SpectralTensor.frequency([np.nan])
    with pytest.raises(ValueError):
        SpectralTensor.frequency(np.zeros((2, 2, 2)))


def test_dft_is_applied_along_the_last_axis(rng):
    x = crandn(rng, 2, 3, 16)
    out = dft(x)
    for i in range(2):
        for j in range(3):
            np.testing.assert_allclose(out[i, j], naive_dft(x[i, j]), atol=1e-12)
