import numpy as np
import pytest

from filterts import spectral
from filterts.errors import ContractError

LENGTHS = list(range(2, 65)) + [96, 97, 100, 192, 1024]


def naive_dft(x):
    n = x.shape[-1]
    k = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return x @ basis.T


@pytest.mark.parametrize("n", LENGTHS)
def test_fft_matches_naive_dft(n, rng):
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert np.max(np.abs(spectral.fft(x) - naive_dft(x))) < 1e-9


@pytest.mark.parametrize("n", LENGTHS)
def test_inverse_round_trip(n, rng):
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert np.max(np.abs(spectral.ifft(spectral.fft(x)) - x)) < 1e-10


def test_fft_runs_along_last_axis(rng):
    x = rng.normal(size=(3, 2, 24))
    out = spectral.fft(x)
    for i in range(3):
        for j in range(2):
            np.testing.assert_allclose(out[i, j], naive_dft(x[i, j]), atol=1e-10)


def test_small_cases():
    np.testing.assert_allclose(spectral.fft([1.0, 0.0, 0.0, 0.0]), np.ones(4), atol=1e-12)
    np.testing.assert_allclose(spectral.fft([1.0, 1.0, 1.0, 1.0]), [4, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(spectral.fft([3.5]), [3.5])


def test_fft_rejects_empty_input():
    with pytest.raises(ContractError):
        spectral.fft(np.zeros(0))


@pytest.mark.parametrize("n", [97, 8640])
def test_real_input_is_conjugate_symmetric(rng, n):
    spec = spectral.Spectrum.of(rng.normal(size=n))
    assert spec.is_conjugate_symmetric(atol=1e-12)


def test_pure_tone_magnitude():
    n, k = 64, 5
    x = np.cos(2 * np.pi * k * np.arange(n) / n)
    mags = spectral.Spectrum.of(x).magnitude
    assert mags[k] == pytest.approx(n / 2)
    assert mags[n - k] == pytest.approx(n / 2)
    mags[[k, n - k]] = 0
    assert np.max(mags) < 1e-10


def test_parseval(rng):
    x = rng.normal(size=100)
    energy = np.sum(spectral.magnitude(spectral.fft(x)) ** 2) / x.size
    assert energy == pytest.approx(np.sum(x**2), rel=1e-12)


def test_linear_convolution_matches_direct(rng):
    for _ in range(200):
        x = rng.normal(size=rng.integers(1, 193))
        h = rng.normal(size=rng.integers(1, 193))
        got = spectral.linear_convolve_via_fft(x, h)
        assert got.shape == (x.size + h.size - 1,)
        assert np.max(np.abs(got - np.convolve(x, h))) < 1e-8


def test_linear_convolution_examples():
    np.testing.assert_allclose(spectral.linear_convolve_via_fft([1, 2], [1, 1]), [1, 3, 2], atol=1e-12)
    np.testing.assert_allclose(spectral.linear_convolve_via_fft([2.0], [3.0]), [6.0], atol=1e-12)
    with pytest.raises(ContractError):
        spectral.linear_convolve_via_fft([], [1.0])


def test_zero_padded_product_is_not_circular(rng):
    # the 2L padding used by the embedding makes spectral products linear convolutions
    x = rng.normal(size=16)
    h = rng.normal(size=16)
    product = spectral.ifft(spectral.fft(np.pad(x, (0, 16))) * spectral.fft(np.pad(h, (0, 16))))
    np.testing.assert_allclose(product.real[:31], np.convolve(x, h), atol=1e-10)
