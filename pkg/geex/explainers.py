"""
Attribution methods.

Black-box, query-only methods estimate gradients from model outputs on Gaussian
perturbations (score-function estimator): `ge_estimate` at the explicand alone,
`geex_interpolated` on a fixed grid of path points, and `geex_merged` with every
mask paired to its own path position. White-box references (`ig_reference`,
`smoothgrad_reference`) use exact gradients, and `random_reference` gives the
random deletion order.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from geex.attribution import Attribution, ExplainConfig
from geex.constants import AlphaMode, BaselineKind, Method
from geex.errors import BudgetNotDivisible, BudgetTooSmall, OddWithMirror, ShapeMismatch
from geex.grid import Grid, check_same_shape, interpolate, path_points
from geex.kernel import gaussian_blur
from geex.mask_set import MaskSet, generate_mask_set
from geex.query_model import QueryModel
from geex.search_distribution import SearchDistribution

logger = logging.getLogger(__name__)


def resolve_baseline(x: Grid, cfg: ExplainConfig) -> Grid:
    if cfg.baseline_kind == BaselineKind.zeros:
        return Grid.zeros(x.shape)
    if cfg.baseline_kind == BaselineKind.blurred_explicand:
        return gaussian_blur(x, cfg.blur_size, cfg.blur_sigma)
    check_same_shape(cfg.baseline, x, "baseline and explicand")
    return cfg.baseline


def resolve_class(m: QueryModel, x: Grid, class_idx: Optional[int]) -> int:
    """The requested class, or the highest-scoring class at the explicand."""
    if class_idx is None:
        return int(np.argmax(m.query(x)))
    m.check_class(class_idx)
    return int(class_idx)


def _mask_set(cfg: ExplainConfig, shape: tuple, n_star: int, mask_set: Optional[MaskSet]) -> MaskSet:
    """
    The first n_star masks of a supplied set, or a fresh set of n_star masks.
    Raises:
        ShapeMismatch: If the supplied masks do not match the explicand shape.
        BudgetTooSmall: If the supplied set holds fewer than n_star masks.
    """
    if mask_set is None:
        return generate_mask_set(
            SearchDistribution(cfg.sigma, shape),
            n_star,
            cfg.seed,
            mirrored=cfg.mirrored,
            smoothing=cfg.smoothing,
            alpha_mode=cfg.alpha_mode,
        )
    if mask_set.shape != tuple(shape):
        raise ShapeMismatch(f"mask set shape {mask_set.shape} does not match explicand {shape}")
    if len(mask_set) < n_star:
        raise BudgetTooSmall(f"mask set holds {len(mask_set)} masks, {n_star} needed")
    return mask_set if len(mask_set) == n_star else mask_set.subset(0, n_star)


def _weighted_score_sum(fvals: np.ndarray, ms: MaskSet) -> np.ndarray:
    """sum_i f_i * score_i, reduced pair by pair for mirrored sets."""
    scores = ms.scores.reshape(len(ms), -1)
    if ms.mirrored:
        if len(ms) % 2:
            raise OddWithMirror(f"mirrored mask set holds an odd number of masks, {len(ms)}")
        total = (fvals[0::2] - fvals[1::2]) @ scores[0::2]
    else:
        total = fvals @ scores
    return total.reshape(ms.shape)


def _completeness(m, x, baseline, class_idx, xi, workers) -> float:
    ends = m.query_batch(np.stack([x.array, baseline.array]), workers)[:, class_idx]
    return float((ends[0] - ends[1]) - np.sum(xi))


def _path_attribution(
    m, x, baseline, class_idx, xi, delta, n_queries, method, seed, sigma=None, workers=1
) -> Attribution:
    xi = np.where(delta == 0.0, 0.0, xi)
    residual = _completeness(m, x, baseline, class_idx, xi, workers)
    logger.debug(
        "%s: class %d, %d queries, completeness residual %.3g", method, class_idx, n_queries, residual
    )
    return Attribution(
        xi=Grid(xi),
        baseline=baseline,
        class_idx=class_idx,
        n_queries=n_queries,
        completeness_residual=residual,
        method=method,
        seed=seed,
        output_kind=m.output_kind,
        sigma=sigma,
    )


def _no_contribution(m, x, baseline, class_idx, method, seed, sigma=None) -> Attribution:
    """Explicand equal to the baseline: nothing to attribute, no queries issued."""
    return Attribution(
        xi=Grid.zeros(x.shape),
        baseline=baseline,
        class_idx=class_idx,
        n_queries=0,
        completeness_residual=0.0,
        method=method,
        seed=seed,
        output_kind=m.output_kind,
        sigma=sigma,
    )


def ge_estimate(m: QueryModel, x: Grid, cfg: ExplainConfig, mask_set: MaskSet = None) -> Attribution:
    """
    Monte Carlo estimate of the Gaussian-smoothed gradient at the explicand,
    (1/n) * sum_i f(x + eps_i) * score(eps_i).
    Raises:
        BudgetTooSmall: If a supplied mask set holds fewer than n_star masks.
    Notes:
        The estimate uses no baseline and no path; the resolved baseline is still
        recorded so deletion curves can use it, and the ignored fields are listed in
        `Attribution.warnings`.
    """
    m.check_shape(x.shape)
    class_idx = resolve_class(m, x, cfg.class_idx)
    baseline = resolve_baseline(x, cfg)
    ms = _mask_set(cfg, x.shape, cfg.n_star, mask_set)

    fvals = m.query_batch(x.array + ms.masks, cfg.workers)[:, class_idx]
    xi = _weighted_score_sum(fvals, ms) / len(ms)
    logger.debug("ge: class %d, %d queries", class_idx, len(ms))
    return Attribution(
        xi=Grid(xi),
        baseline=baseline,
        class_idx=class_idx,
        n_queries=len(ms),
        completeness_residual=None,
        method=Method.ge,
        seed=cfg.seed,
        output_kind=m.output_kind,
        sigma=ms.sigma,
        warnings=(
            "s_steps ignored: the estimate is taken at the explicand only",
            "baseline not used by the estimate; recorded for deletion only",
        ),
    )


def geex_interpolated(
    m: QueryModel, x: Grid, cfg: ExplainConfig, mask_set: MaskSet = None
) -> Attribution:
    """
    Path integral of estimated gradients on s equally spaced path points,
    xi = ((x - baseline) / (n * s)) * sum_j sum_i f(x(j/s) + eps_i) * score(eps_i).
    Args:
        m (QueryModel): Model to explain; only queries are used.
        x (Grid): Explicand.
        cfg (ExplainConfig): n_star is split into s_steps groups of n = n_star / s_steps masks.
        mask_set (MaskSet, optional): Pre-generated masks; n masks (or n_star with
            fresh_masks_per_step) are used from its start.
    Returns:
        Attribution: Path attribution with its completeness residual.
    Raises:
        BudgetNotDivisible: If s_steps does not divide n_star.
        OddWithMirror: If mirrored and n_star / s_steps is odd.
    Notes:
        - By default one mask subset serves every step; fresh_masks_per_step draws
          a separate subset per step from one n_star-mask set.
        - Mask alphas are ignored; the steps fix the path positions.
    """
    m.check_shape(x.shape)
    if cfg.n_star % cfg.s_steps:
        raise BudgetNotDivisible(
            f"n_star {cfg.n_star} is not divisible by s_steps {cfg.s_steps}"
        )
    n = cfg.n_star // cfg.s_steps
    if cfg.mirrored and n % 2:
        raise OddWithMirror(f"mirrored sampling needs an even number of masks per step, got {n}")
    class_idx = resolve_class(m, x, cfg.class_idx)
    baseline = resolve_baseline(x, cfg)
    delta = x.array - baseline.array
    if not np.any(delta):
        return _no_contribution(m, x, baseline, class_idx, Method.geex_interpolated, cfg.seed, cfg.sigma)

    ms = _mask_set(cfg, x.shape, cfg.n_star if cfg.fresh_masks_per_step else n, mask_set)
    total = np.zeros(x.shape)
    for j in range(1, cfg.s_steps + 1):
        if cfg.fresh_masks_per_step:
            step_masks = ms.subset((j - 1) * n, j * n)
        else:
            step_masks = ms.subset(0, n)
        point = interpolate(baseline, x, j / cfg.s_steps).array
        fvals = m.query_batch(point + step_masks.masks, cfg.workers)[:, class_idx]
        total = total + _weighted_score_sum(fvals, step_masks)
    xi = delta * total / (n * cfg.s_steps)
    return _path_attribution(
        m, x, baseline, class_idx, xi, delta, n * cfg.s_steps, Method.geex_interpolated,
        cfg.seed, cfg.sigma, cfg.workers,
    )


def geex_merged(m: QueryModel, x: Grid, cfg: ExplainConfig, mask_set: MaskSet = None) -> Attribution:
    """
    Dense sum of one-sample gradient estimators along the path,
    xi = ((x - baseline) / n_star) * sum_(eps, alpha) f(x(alpha) + eps) * score(eps),
    with every mask paired to its own path position alpha. The default method.
    """
    m.check_shape(x.shape)
    class_idx = resolve_class(m, x, cfg.class_idx)
    baseline = resolve_baseline(x, cfg)
    delta = x.array - baseline.array
    if not np.any(delta):
        return _no_contribution(m, x, baseline, class_idx, Method.geex, cfg.seed, cfg.sigma)

    ms = _mask_set(cfg, x.shape, cfg.n_star, mask_set)
    queries = path_points(baseline.array, x.array, ms.alphas) + ms.masks
    fvals = m.query_batch(queries, cfg.workers)[:, class_idx]
    xi = delta * _weighted_score_sum(fvals, ms) / len(ms)
    return _path_attribution(
        m, x, baseline, class_idx, xi, delta, len(ms), Method.geex, cfg.seed, cfg.sigma, cfg.workers
    )


def ig_reference(
    m: QueryModel, x: Grid, baseline: Grid, steps: int, class_idx: int, workers: int = 1
) -> Attribution:
    """
    Integrated gradients with a right Riemann sum,
    xi = ((x - baseline) / steps) * sum_{j=1..steps} gradient(x(j / steps)).
    Raises:
        NotWhiteBox: If the model does not expose gradients.
    """
    m.require_white_box()
    check_same_shape(baseline, x, "baseline and explicand")
    m.check_class(class_idx)
    if steps < 1:
        raise BudgetTooSmall(f"integrated gradients needs at least one step, got {steps}")
    delta = x.array - baseline.array
    if not np.any(delta):
        return _no_contribution(m, x, baseline, class_idx, Method.ig, seed=0)

    alphas = np.arange(1, steps + 1) / steps
    gradients = m.gradient_batch(path_points(baseline.array, x.array, alphas), class_idx, workers)
    xi = delta * gradients.mean(axis=0)
    return _path_attribution(m, x, baseline, class_idx, xi, delta, steps, Method.ig, seed=0, workers=workers)


def smoothgrad_reference(
    m: QueryModel,
    x: Grid,
    n: int,
    sigma: float,
    seed: int,
    class_idx: int,
    mirrored: bool = False,
    workers: int = 1,
) -> Attribution:
    """
    Average of exact gradients at Gaussian perturbations of the explicand,
    xi = (1/n) * sum_i gradient(x + eps_i).
    Raises:
        NotWhiteBox: If the model does not expose gradients.
    """
    m.require_white_box()
    m.check_class(class_idx)
    noise = generate_mask_set(
        SearchDistribution(sigma, x.shape), n, seed, mirrored=mirrored,
        alpha_mode=AlphaMode.iid_uniform,
    )
    gradients = m.gradient_batch(x.array + noise.masks, class_idx, workers)
    return Attribution(
        xi=Grid(gradients.mean(axis=0)),
        baseline=Grid.zeros(x.shape),
        class_idx=class_idx,
        n_queries=n,
        completeness_residual=None,
        method=Method.smoothgrad,
        seed=seed,
        output_kind=m.output_kind,
        sigma=sigma,
    )


def random_reference(shape, seed: int) -> Attribution:
    """Uniform [0, 1) scores; only their order matters, as a random deletion order."""
    shape = tuple(shape)
    return Attribution(
        xi=Grid(np.random.default_rng(seed).random(shape)),
        baseline=Grid.zeros(shape),
        class_idx=0,
        n_queries=0,
        completeness_residual=None,
        method=Method.random,
        seed=seed,
    )


def explain(method: str, m: QueryModel, x: Grid, cfg: ExplainConfig, mask_set: MaskSet = None) -> Attribution:
    """
    Runs one method with one configuration; the entry point of the command line and the evaluation harness.
    Args:
        method (str): One of Method.all().
        m (QueryModel): Model to explain.
        x (Grid): Explicand.
        cfg (ExplainConfig): Budget, baseline and sampling settings; white-box
            references spend the same budget (n_star gradients, or ig_steps).
        mask_set (MaskSet, optional): Pre-generated masks for the query-only methods.
    Returns:
        Attribution: The explanation; baseline and class are resolved from cfg for every method.
    """
    if method == Method.geex:
        return geex_merged(m, x, cfg, mask_set)
    if method == Method.geex_interpolated:
        return geex_interpolated(m, x, cfg, mask_set)
    if method == Method.ge:
        return ge_estimate(m, x, cfg, mask_set)
    if method not in Method.all():
        raise ValueError(f"unknown method {method!r}, expected one of {Method.all()}")

    if method in (Method.ig, Method.smoothgrad):
        m.require_white_box()
    m.check_shape(x.shape)
    class_idx = resolve_class(m, x, cfg.class_idx)
    baseline = resolve_baseline(x, cfg)
    if method == Method.ig:
        return ig_reference(m, x, baseline, cfg.resolved_ig_steps, class_idx, cfg.workers)
    if method == Method.smoothgrad:
        attribution = smoothgrad_reference(
            m, x, cfg.n_star, cfg.sigma, cfg.seed, class_idx, cfg.mirrored, cfg.workers
        )
    else:
        attribution = random_reference(x.shape, cfg.seed)
    return Attribution(
        xi=attribution.xi,
        baseline=baseline,
        class_idx=class_idx,
        n_queries=attribution.n_queries,
        completeness_residual=None,
        method=attribution.method,
        seed=attribution.seed,
        output_kind=m.output_kind,
        sigma=attribution.sigma,
    )
