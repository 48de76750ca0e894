from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from geex.constants import AlphaMode
from geex.errors import BadBudget, NotTwoDimensional, OddWithMirror
from geex.grid import Grid
from geex.kernel import Kernel, convolve_stack
from geex.search_distribution import SearchDistribution

logger = logging.getLogger(__name__)

# Draws are made in blocks of this many indices; block b always comes from the
# stream keyed by (seed, b), so index i's draw depends on (seed, i) only.
BLOCK_SIZE = 256

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class MaskSet:
    """
    Pre-generated noise masks with their scores and path positions, reusable across explicands.
    Attributes:
        distribution (SearchDistribution): Distribution the masks were drawn from.
        masks (np.ndarray): Stack of masks, shape (n_star, *dim_shape), read-only.
        scores (np.ndarray): Score of every mask, same shape as `masks`.
        alphas (np.ndarray): Path position paired with every mask, shape (n_star,).
        seed (int): Seed the set was generated from.
        mirrored (bool): Whether masks come in (eps, -eps) pairs sharing one alpha.
        smoothing (Kernel | None): Kernel applied to the raw masks, if any.
        alpha_mode (str): AlphaMode the alphas were drawn with.
    """

    distribution: SearchDistribution
    masks: np.ndarray
    scores: np.ndarray
    alphas: np.ndarray
    seed: int
    mirrored: bool
    smoothing: Optional[Kernel]
    alpha_mode: str

    def __len__(self) -> int:
        return self.masks.shape[0]

    @property
    def n_star(self) -> int:
        return len(self)

    @property
    def sigma(self) -> float:
        return self.distribution.sigma

    @property
    def shape(self) -> tuple:
        return self.distribution.dim_shape

    def mask(self, i: int) -> Grid:
        return Grid(self.masks[i])

    def score(self, i: int) -> Grid:
        return Grid(self.scores[i])

    def subset(self, start: int, stop: int) -> "MaskSet":
        """
        Contiguous slice of the set as a MaskSet of its own.
        Raises:
            OddWithMirror: If slicing a mirrored set would split a pair.
        """
        if self.mirrored and (start % 2 or stop % 2):
            raise OddWithMirror(f"slice [{start}, {stop}) would split a mirror pair")
        return MaskSet(
            distribution=self.distribution,
            masks=read_only(self.masks[start:stop]),
            scores=read_only(self.scores[start:stop]),
            alphas=read_only(self.alphas[start:stop]),
            seed=self.seed,
            mirrored=self.mirrored,
            smoothing=self.smoothing,
            alpha_mode=self.alpha_mode,
        )


class MaskStats(NamedTuple):
    mean: Grid
    std: Grid


def read_only(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.setflags(write=False)
    return array


def _draw(seed: int, count: int, shape: tuple) -> tuple[np.ndarray, np.ndarray]:
    """Standard normal draws and uniforms for indices 0..count-1, block by block."""
    normals = []
    uniforms = []
    for block in range((count + BLOCK_SIZE - 1) // BLOCK_SIZE):
        stream = np.random.default_rng(
            np.random.SeedSequence(seed & _SEED_MASK, spawn_key=(block,))
        )
        normals.append(stream.standard_normal((BLOCK_SIZE,) + shape))
        uniforms.append(stream.random(BLOCK_SIZE))
    return np.concatenate(normals)[:count], np.concatenate(uniforms)[:count]


def generate_mask_set(
    dist: SearchDistribution,
    n_star: int,
    seed: int,
    mirrored: bool = True,
    smoothing: Optional[Kernel] = None,
    alpha_mode: str = AlphaMode.stratified,
) -> MaskSet:
    """
    Draws n_star masks from N(0, sigma^2 I) with their scores and path positions.
    Args:
        dist (SearchDistribution): Distribution to draw from; fixes sigma and the mask shape.
        n_star (int): Number of masks, at least 2; even when mirrored.
        seed (int): 64-bit seed; the result is a deterministic function of all arguments.
        mirrored (bool): Emit (eps, -eps) pairs sharing one alpha.
        smoothing (Kernel | None): Frobenius-normalized kernel convolved with every raw mask.
        alpha_mode (str): AlphaMode.iid_uniform or AlphaMode.stratified.
    Returns:
        MaskSet: The generated set.
    Raises:
        BadBudget: If n_star < 2.
        OddWithMirror: If mirrored and n_star is odd.
        NotTwoDimensional: If smoothing is requested for non-image masks.
    Notes:
        - Scores are computed from the smoothed masks, the perturbations actually applied.
        - Stratified alphas put draw k in stratum k: alpha_k = (k + u_k) / m, m = number of draws.
    """
    if int(n_star) != n_star or n_star < 2:
        raise BadBudget(f"n_star must be an integer >= 2, got {n_star}")
    n_star = int(n_star)
    if mirrored and n_star % 2:
        raise OddWithMirror(f"mirrored mask sets need an even n_star, got {n_star}")
    if alpha_mode not in AlphaMode.all():
        raise ValueError(f"unknown alpha mode {alpha_mode!r}, expected one of {AlphaMode.all()}")
    if smoothing is not None and len(dist.dim_shape) != 2:
        raise NotTwoDimensional(f"mask smoothing needs 2-D masks, got shape {dist.dim_shape}")

    draws = n_star // 2 if mirrored else n_star
    normals, uniforms = _draw(int(seed), draws, dist.dim_shape)
    raw = normals * dist.sigma
    if smoothing is not None:
        raw = convolve_stack(raw, smoothing)

    if alpha_mode == AlphaMode.stratified:
        alphas = (np.arange(draws) + uniforms) / draws
    else:
        alphas = uniforms

    if mirrored:
        masks = np.empty((n_star,) + dist.dim_shape)
        masks[0::2] = raw
        masks[1::2] = -raw
        alphas = np.repeat(alphas, 2)
    else:
        masks = raw

    logger.debug(
        "generated %d masks: sigma=%r shape=%s seed=%d mirrored=%s smoothing=%s alpha=%s",
        n_star, dist.sigma, dist.dim_shape, seed, mirrored, smoothing, alpha_mode,
    )
    return MaskSet(
        distribution=dist,
        masks=read_only(masks),
        scores=read_only(dist.scores(masks)),
        alphas=read_only(alphas),
        seed=int(seed),
        mirrored=bool(mirrored),
        smoothing=smoothing,
        alpha_mode=alpha_mode,
    )


def sample_count_stats(ms: MaskSet) -> MaskStats:
    """Per-coordinate mean and (population) standard deviation over the masks."""
    if len(ms) == 0:
        raise BadBudget("mask set is empty")
    return MaskStats(mean=Grid(ms.masks.mean(axis=0)), std=Grid(ms.masks.std(axis=0)))
