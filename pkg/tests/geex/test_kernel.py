import numpy as np
import pytest

from geex.constants import KernelNorm
from geex.errors import EvenKernel, NotTwoDimensional
from geex.grid import Grid, frobenius_norm
from geex.kernel import Kernel, convolve_same, convolve_stack, gaussian_blur


def impulse(size=7):
    image = np.zeros((size, size))
    image[size // 2, size // 2] = 1.0
    return Grid(image)


@pytest.mark.parametrize("size, sigma", [(1, 0.5), (3, 0.7), (5, 0.7), (5, 1.0), (9, 2.5)])
def test_kernel_frobenius_normalized(size, sigma):
    kernel = Kernel(size, sigma)

    assert kernel.weights.shape == (size, size)
    assert abs(frobenius_norm(kernel.weights) - 1.0) <= 1e-12, "weights should have unit Frobenius norm"
    assert abs(kernel.norm - 1.0) <= 1e-12


def test_kernel_sum_normalized():
    kernel = Kernel(5, 1.0, KernelNorm.sum)
    assert abs(kernel.weights.data.sum() - 1.0) <= 1e-12


def test_kernel_invalid():
    with pytest.raises(EvenKernel, match="positive odd integer, got 4"):
        Kernel(4, 1.0)
    with pytest.raises(EvenKernel):
        Kernel(0, 1.0)
    with pytest.raises(ValueError, match="sigma must be positive"):
        Kernel(3, 0.0)


def test_kernel_parse():
    assert Kernel.parse("5:0.7") == Kernel(5, 0.7)
    assert str(Kernel(5, 0.7)) == "5:0.7"
    with pytest.raises(EvenKernel):
        Kernel.parse("4:1.0")
    with pytest.raises(ValueError, match="SIZE:SIGMA"):
        Kernel.parse("five")


def test_convolve_same_impulse_response():
    kernel = Kernel(3, 0.7)
    result = convolve_same(impulse(7), kernel)

    assert result.shape == (7, 7)
    np.testing.assert_allclose(result.array[2:5, 2:5], kernel.weights.array, atol=1e-15)
    assert result.data.sum() == pytest.approx(kernel.weights.data.sum())


def test_convolve_same_zeros_and_constant():
    kernel = Kernel(5, 1.0)
    assert convolve_same(Grid.zeros((8, 8)), kernel) == Grid.zeros((8, 8))

    result = convolve_same(Grid.full((8, 8), 2.5), kernel)
    np.testing.assert_allclose(result.array[2:6, 2:6], 2.5 * kernel.weights.data.sum(), atol=1e-12)
    assert result[0, 0] < result[4, 4], "zero padding should darken the corners"


def test_convolve_same_is_linear():
    rng = np.random.default_rng(3)
    a, b = Grid(rng.normal(size=(8, 8))), Grid(rng.normal(size=(8, 8)))
    kernel = Kernel(5, 0.7)
    np.testing.assert_allclose(
        convolve_same(a + b, kernel).array,
        (convolve_same(a, kernel) + convolve_same(b, kernel)).array,
        atol=1e-10,
    )


def test_convolve_stack_matches_single_images():
    rng = np.random.default_rng(4)
    stack = rng.normal(size=(3, 6, 6))
    kernel = Kernel(3, 1.0)
    result = convolve_stack(stack, kernel)

    for image, smoothed in zip(stack, result):
        np.testing.assert_allclose(smoothed, convolve_same(Grid(image), kernel).array, atol=1e-14)


def test_convolve_needs_two_dimensions():
    with pytest.raises(NotTwoDimensional):
        convolve_same(Grid([1.0, 2.0, 3.0]), Kernel(3, 1.0))
    with pytest.raises(NotTwoDimensional):
        gaussian_blur(Grid([1.0, 2.0, 3.0]), 3, 1.0)


def test_gaussian_blur():
    assert gaussian_blur(Grid.zeros((6, 6)), 5, 1.0) == Grid.zeros((6, 6))

    constant = gaussian_blur(Grid.full((8, 8), 0.4), 5, 1.0)
    np.testing.assert_allclose(constant.array[2:6, 2:6], 0.4, atol=1e-12)

    stamp = gaussian_blur(impulse(5), 3, 0.7).array[1:4, 1:4]
    i, j = np.mgrid[-1:2, -1:2]
    expected = np.exp(-(i * i + j * j) / (2 * 0.49))
    np.testing.assert_allclose(stamp, expected / expected.sum(), atol=1e-15)

    with pytest.raises(EvenKernel):
        gaussian_blur(impulse(5), 2, 1.0)
