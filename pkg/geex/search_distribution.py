from dataclasses import dataclass

import numpy as np

from geex.errors import ShapeMismatch
from geex.grid import Grid


@dataclass(frozen=True)
class SearchDistribution:
    """
    Isotropic Gaussian location family N(x, sigma^2 I) the queries are drawn from.
    Attributes:
        sigma (float): Standard deviation shared by every coordinate.
        dim_shape (tuple[int, ...]): Shape of the masks drawn from the distribution.
    """

    sigma: float
    dim_shape: tuple

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "dim_shape", tuple(int(s) for s in self.dim_shape))
        if not self.dim_shape or any(s <= 0 for s in self.dim_shape):
            raise ShapeMismatch(f"dim_shape must hold positive extents, got {self.dim_shape}")

    @property
    def precision(self) -> float:
        """1 / sigma^2, the factor turning an offset into its score."""
        return 1.0 / (self.sigma * self.sigma)

    def scores(self, masks: np.ndarray) -> np.ndarray:
        """Scores of a whole (n, *dim_shape) stack of offsets."""
        return masks * self.precision


def score_gradient(dist: SearchDistribution, eps: Grid) -> Grid:
    """
    Gradient of log N(eps | 0, sigma^2 I) with respect to the location, eps / sigma^2.
    Raises:
        ShapeMismatch: If eps does not have the distribution's shape.
    """
    if eps.shape != dist.dim_shape:
        raise ShapeMismatch(
            f"mask shape {eps.shape} does not match distribution shape {dist.dim_shape}"
        )
    return eps.scale(dist.precision)
