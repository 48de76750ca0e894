import numpy as np
from scipy import ndimage

from geex.constants import KernelNorm
from geex.errors import EvenKernel, NotTwoDimensional
from geex.grid import Grid, frobenius_norm


class Kernel:
    """
    Square, sampled 2-D Gaussian filter.
    Attributes:
        size (int): Odd edge length of the filter.
        sigma (float): Standard deviation of the Gaussian, in pixels.
        normalization (str): KernelNorm.frobenius (mask smoothing, weights have unit
            Frobenius norm) or KernelNorm.sum (blurring, weights sum to one).
        weights (Grid): The filter taps, shape (size, size).
    """

    def __init__(self, size: int, sigma: float, normalization: str = KernelNorm.frobenius):
        if int(size) != size or size < 1 or size % 2 == 0:
            raise EvenKernel(f"kernel size must be a positive odd integer, got {size}")
        if not sigma > 0:
            raise ValueError(f"kernel sigma must be positive, got {sigma}")
        if normalization not in KernelNorm.all():
            raise ValueError(f"unknown kernel normalization {normalization!r}")
        self.size = int(size)
        self.sigma = float(sigma)
        self.normalization = normalization

        radius = self.size // 2
        y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
        taps = np.exp(-(x * x + y * y) / (2.0 * self.sigma * self.sigma))
        if normalization == KernelNorm.frobenius:
            taps = taps / np.sqrt(np.sum(taps * taps))
        else:
            taps = taps / np.sum(taps)
        self.weights = Grid(taps)

    @classmethod
    def parse(cls, text: str, normalization: str = KernelNorm.frobenius) -> "Kernel":
        """Builds a kernel from "SIZE:SIGMA", the command-line notation."""
        try:
            size, sigma = text.split(":")
            return cls(int(size), float(sigma), normalization)
        except ValueError as error:
            if isinstance(error, EvenKernel):
                raise
            raise ValueError(f"kernel must be written SIZE:SIGMA, got {text!r}") from error

    def __eq__(self, value) -> bool:
        if not isinstance(value, Kernel):
            return NotImplemented
        return (
            self.size == value.size
            and self.sigma == value.sigma
            and self.normalization == value.normalization
        )

    def __str__(self) -> str:
        return f"{self.size}:{self.sigma!r}"

    @property
    def norm(self) -> float:
        return frobenius_norm(self.weights)


def convolve_stack(stack: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Convolves every 2-D slice of an (n, rows, cols) stack with zero padding at the borders."""
    return ndimage.convolve(
        stack, kernel.weights.array[np.newaxis], mode="constant", cval=0.0
    )


def convolve_same(image: Grid, kernel: Kernel) -> Grid:
    """
    Same-size 2-D convolution of `image` with `kernel`; pixels outside the image count as zero.
    Raises:
        NotTwoDimensional: If the image is not 2-D.
    """
    if image.ndim != 2:
        raise NotTwoDimensional(f"convolution needs a 2-D image, got shape {image.shape}")
    return Grid(ndimage.convolve(image.array, kernel.weights.array, mode="constant", cval=0.0))


def gaussian_blur(image: Grid, size: int, sigma: float) -> Grid:
    """Blurs with a sum-normalized Gaussian; borders darken because of zero padding."""
    if image.ndim != 2:
        raise NotTwoDimensional(f"blurring needs a 2-D image, got shape {image.shape}")
    return convolve_same(image, Kernel(size, sigma, KernelNorm.sum))
