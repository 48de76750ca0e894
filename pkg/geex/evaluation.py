"""
Evaluation via deletion: features are replaced in descending attribution order and the
relative drop of the explained class score is averaged into AOPC.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from geex.attribution import Attribution, ExplainConfig
from geex.constants import BaselineKind, Replacement
from geex.errors import BadBudgetList, BadLength, GeexError, ZeroConfidence
from geex.explainers import explain, geex_interpolated, geex_merged, ig_reference, resolve_baseline, resolve_class
from geex.grid import Grid, check_same_shape, frobenius_norm
from geex.query_model import QueryModel

logger = logging.getLogger(__name__)

# |f(x)| below this makes the ratio normalization meaningless
MIN_CONFIDENCE = 1e-9


@dataclass(frozen=True, eq=False)
class DeletionCurve:
    """
    Relative score drops while deleting features cumulatively.
    Attributes:
        ratios (np.ndarray): ratios[i - 1] = 1 - f(x_i) / f(x), x_i with its top i steps replaced.
        l (int): Number of deletion steps.
        replacement (str): Replacement.baseline or Replacement.gaussian.
        aopc (float): Mean of the ratios.
        order (np.ndarray): Flat feature indices in deletion order.
        step_size (int): Features replaced per step.
    """

    ratios: np.ndarray
    l: int
    replacement: str
    aopc: float
    order: np.ndarray
    step_size: int = 1


def deletion_order(attribution: Attribution) -> np.ndarray:
    """Flat indices by descending attribution, ties broken by ascending index."""
    return np.argsort(-attribution.xi.data, kind="stable")


def replacement_values(m: QueryModel, baseline: Grid, replacement: str, seed: int) -> np.ndarray:
    if replacement == Replacement.baseline:
        return baseline.array
    if replacement == Replacement.gaussian:
        low, high = m.input_range
        draws = np.random.default_rng(seed).standard_normal(baseline.shape)
        return np.clip(draws, low, high)
    raise ValueError(f"unknown replacement {replacement!r}, expected one of {Replacement.all()}")


def _checked_length(x: Grid, l: Optional[int], step_size: int) -> int:
    if int(step_size) != step_size or step_size < 1:
        raise BadLength(f"step size must be a positive integer, got {step_size}")
    max_steps = -(-x.size // step_size)
    if l is None:
        l = max_steps
    if int(l) != l or not 1 <= l <= max_steps:
        raise BadLength(f"deletion length must lie in [1, {max_steps}], got {l}")
    return int(l)


def _explicand_score(m: QueryModel, x: Grid, class_idx: int) -> float:
    m.check_class(class_idx)
    fx = m.class_score(x, class_idx)
    if abs(fx) < MIN_CONFIDENCE:
        raise ZeroConfidence(f"class {class_idx} score {fx!r} at the explicand is too close to zero")
    return fx


def deletion_curve(
    m: QueryModel,
    x: Grid,
    attribution: Attribution,
    l: Optional[int] = None,
    replacement: str = Replacement.baseline,
    seed: int = 0,
    step_size: int = 1,
    class_idx: Optional[int] = None,
) -> DeletionCurve:
    """
    Deletes features in attribution order and records 1 - f(x_i) / f(x) after every step.
    Args:
        m (QueryModel): Model whose class score is tracked.
        x (Grid): Explicand the attribution belongs to.
        attribution (Attribution): Supplies the ranking and, for baseline replacement, the values.
        l (int, optional): Number of steps; defaults to every feature.
        replacement (str): Replacement.baseline substitutes the baseline value, Replacement.gaussian
            a draw from N(0, 1) clipped to the model's input range, fixed per pixel by the seed.
        seed (int): Seed of the Gaussian replacement values.
        step_size (int): Features replaced per step.
        class_idx (int, optional): Tracked class; defaults to the explained class.
    Returns:
        DeletionCurve: The curve and its AOPC.
    Raises:
        ShapeMismatch: If the attribution does not match the explicand.
        BadLength: If l is not in [1, number of steps the features allow].
        ZeroConfidence: If |f(x)| < 1e-9.
    """
    check_same_shape(attribution.xi, x, "attribution and explicand")
    m.check_shape(x.shape)
    l = _checked_length(x, l, step_size)
    class_idx = attribution.class_idx if class_idx is None else class_idx
    fx = _explicand_score(m, x, class_idx)

    order = deletion_order(attribution)
    rank = np.empty(x.size, dtype=np.int64)
    rank[order] = np.arange(x.size)
    replaced = rank[np.newaxis, :] < (np.arange(1, l + 1) * step_size)[:, np.newaxis]
    values = replacement_values(m, attribution.baseline, replacement, seed).reshape(-1)
    variants = np.where(replaced, values, x.data).reshape((l,) + x.shape)

    scores = m.query_batch(variants)[:, class_idx]
    ratios = 1.0 - scores / fx
    curve = DeletionCurve(
        ratios=ratios,
        l=l,
        replacement=replacement,
        aopc=float(np.mean(ratios)),
        order=order,
        step_size=int(step_size),
    )
    logger.debug("deletion curve: %s, %d steps of %d, aopc %.4f", replacement, l, step_size, curve.aopc)
    return curve


def best_drop_curve(
    m: QueryModel,
    x: Grid,
    baseline: Grid,
    class_idx: int,
    l: Optional[int] = None,
    replacement: str = Replacement.baseline,
    seed: int = 0,
    step_size: int = 1,
) -> DeletionCurve:
    """
    Reference curve that needs no attribution: every deletion replaces the remaining feature
    whose replacement drops the class score most, given the current partially deleted input.
    Args:
        m (QueryModel): Model whose class score is tracked.
        x (Grid): Explicand.
        baseline (Grid): Replacement values under Replacement.baseline.
        class_idx (int): Tracked class.
        l (int, optional): Number of steps; defaults to every feature.
        replacement (str): As in `deletion_curve`; the Gaussian values are the same for the same seed.
        seed (int): Seed of the Gaussian replacement values.
        step_size (int): Features replaced per step, each picked greedily.
    Returns:
        DeletionCurve: Greedy curve; `order` lists the picks, then the untouched features by index.
    Raises:
        ShapeMismatch: If the baseline does not match the explicand.
        BadLength: If l is not in [1, number of steps the features allow].
        ZeroConfidence: If |f(x)| < 1e-9.
    Notes:
        Costs one query per remaining feature per pick, about size^2 / 2 queries for a full curve.
    """
    check_same_shape(baseline, x, "baseline and explicand")
    m.check_shape(x.shape)
    l = _checked_length(x, l, step_size)
    fx = _explicand_score(m, x, class_idx)

    values = replacement_values(m, baseline, replacement, seed).reshape(-1)
    current = x.array.reshape(-1).copy()
    deleted = np.zeros(x.size, dtype=bool)
    picks, ratios = [], []
    for _ in range(l):
        for _ in range(min(step_size, x.size - len(picks))):
            candidates = np.flatnonzero(~deleted)
            variants = np.repeat(current[np.newaxis, :], len(candidates), axis=0)
            variants[np.arange(len(candidates)), candidates] = values[candidates]
            drops = 1.0 - m.query_batch(variants.reshape((len(candidates),) + x.shape))[:, class_idx] / fx
            best = int(np.argmax(drops))
            k = int(candidates[best])
            current[k] = values[k]
            deleted[k] = True
            picks.append(k)
            drop = float(drops[best])
        ratios.append(drop)

    order = np.concatenate([np.array(picks, dtype=np.int64), np.flatnonzero(~deleted)])
    curve = DeletionCurve(
        ratios=np.array(ratios),
        l=l,
        replacement=replacement,
        aopc=float(np.mean(ratios)),
        order=order,
        step_size=int(step_size),
    )
    logger.debug("best-drop curve: %s, %d steps of %d, aopc %.4f", replacement, l, step_size, curve.aopc)
    return curve


@dataclass(frozen=True)
class AOPCCell:
    """
    One (model, method, replacement) entry of an AOPC table.
    Attributes:
        mean (float | None): Mean over seeds of the explicand-averaged AOPC; None if the cell failed.
        std (float | None): Population standard deviation over seeds.
        seeds (tuple[int, ...]): Seeds the cell was computed with.
        error (str | None): Message of the error that made the cell fail.
        curve (DeletionCurve | None): Curve of the first explicand at the first seed.
    """

    model: str
    method: str
    replacement: str
    mean: Optional[float]
    std: Optional[float]
    seeds: tuple
    error: Optional[str] = None
    curve: Optional[DeletionCurve] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _cell_curves(m, explicands, method, replacement, cfg, seed, l, step_size) -> list[DeletionCurve]:
    curves = []
    for x in explicands:
        attribution = explain(method, m, x, cfg.replace(seed=seed))
        curves.append(deletion_curve(m, x, attribution, l, replacement, seed, step_size))
    return curves


def aopc_table(
    models: dict,
    explicands: list,
    methods: list,
    replacements: list,
    cfg: ExplainConfig,
    seeds: list,
    l: Optional[int] = None,
    step_size: int = 1,
) -> list[AOPCCell]:
    """
    AOPC of every method on every model under every replacement, averaged over explicands.
    Args:
        models (dict[str, QueryModel]): Models by row name.
        explicands (list of Grid): Inputs explained on every model.
        methods (list of str): Methods compared; all share cfg and therefore the query budget.
        replacements (list of str): Replacement kinds.
        cfg (ExplainConfig): Shared explainer configuration; its seed is overridden per seed.
        seeds (list of int): Seeds of the explainers and the Gaussian replacements.
        l (int, optional): Deletion steps; defaults to every feature.
        step_size (int): Features replaced per step.
    Returns:
        list[AOPCCell]: Cells in (model, method, replacement) order. A cell whose computation
        raised a package error is returned with `error` set instead of aborting the table.
    """
    if not seeds:
        raise BadBudgetList("an AOPC table needs at least one seed")
    cells = []
    for name, m in models.items():
        for method in methods:
            for replacement in replacements:
                try:
                    per_seed = [
                        _cell_curves(m, explicands, method, replacement, cfg, seed, l, step_size)
                        for seed in seeds
                    ]
                except GeexError as error:
                    logger.warning("aopc cell %s/%s/%s failed: %s", name, method, replacement, error)
                    cells.append(AOPCCell(name, method, replacement, None, None, tuple(seeds), str(error)))
                    continue
                aopcs = [np.mean([curve.aopc for curve in curves]) for curves in per_seed]
                cells.append(
                    AOPCCell(
                        name, method, replacement,
                        float(np.mean(aopcs)), float(np.std(aopcs)), tuple(seeds),
                        curve=per_seed[0][0],
                    )
                )
    return cells


@dataclass(frozen=True)
class SweepResult:
    """
    Seed-averaged distance of merged estimates to integrated gradients, per budget.
    Attributes:
        budgets (tuple[int, ...]): Query budgets, strictly increasing.
        mean_rel_l2 (tuple[float, ...]): Mean over seeds of ||xi - xi_ig|| / ||xi_ig||.
        std_rel_l2 (tuple[float, ...]): Population standard deviation over seeds.
        mean_aopc (tuple[float, ...] | None): Mean AOPC per budget, when requested.
        ig_aopc (float | None): AOPC of the integrated-gradients target, when requested.
        seeds (tuple[int, ...]): Seeds used at every budget.
    """

    budgets: tuple
    mean_rel_l2: tuple
    std_rel_l2: tuple
    mean_aopc: Optional[tuple]
    ig_aopc: Optional[float]
    seeds: tuple

    @property
    def non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.mean_rel_l2, self.mean_rel_l2[1:]))


def _check_budgets(budgets) -> tuple:
    budgets = tuple(int(b) for b in budgets)
    if not budgets:
        raise BadBudgetList("the budget list is empty")
    if any(later <= earlier for earlier, later in zip(budgets, budgets[1:])):
        raise BadBudgetList(f"budgets must be strictly increasing, got {list(budgets)}")
    return budgets


def convergence_sweep(
    m: QueryModel,
    x: Grid,
    budgets: list,
    cfg: ExplainConfig,
    seeds: list,
    ig_steps: int = 512,
    with_aopc: bool = False,
    l: Optional[int] = None,
    replacement: str = Replacement.baseline,
) -> SweepResult:
    """
    Relative L2 distance of the merged estimator to integrated gradients as the budget grows.
    Raises:
        BadBudgetList: If budgets is empty or not strictly increasing, or seeds is empty.
        NotWhiteBox: If the model cannot provide the integrated-gradients target.
        ZeroConfidence: If the integrated-gradients attribution is all zeros.
    """
    m.require_white_box()
    budgets = _check_budgets(budgets)
    if not seeds:
        raise BadBudgetList("a sweep needs at least one seed")
    class_idx = resolve_class(m, x, cfg.class_idx)
    baseline = resolve_baseline(x, cfg)
    target = ig_reference(m, x, baseline, ig_steps, class_idx, cfg.workers)
    target_norm = frobenius_norm(target.xi)
    if target_norm == 0.0:
        raise ZeroConfidence("integrated gradients gives an all-zero attribution; relative distance undefined")
    ig_aopc = deletion_curve(m, x, target, l, replacement, 0).aopc if with_aopc else None

    means, stds, aopcs = [], [], []
    for budget in budgets:
        distances, curve_aopcs = [], []
        for seed in seeds:
            attribution = geex_merged(m, x, cfg.replace(n_star=budget, seed=seed, class_idx=class_idx))
            distances.append(frobenius_norm(attribution.xi - target.xi) / target_norm)
            if with_aopc:
                curve_aopcs.append(deletion_curve(m, x, attribution, l, replacement, seed).aopc)
        means.append(float(np.mean(distances)))
        stds.append(float(np.std(distances)))
        if with_aopc:
            aopcs.append(float(np.mean(curve_aopcs)))
        logger.debug("sweep budget %d: relative distance %.4f", budget, means[-1])
    return SweepResult(
        budgets=budgets,
        mean_rel_l2=tuple(means),
        std_rel_l2=tuple(stds),
        mean_aopc=tuple(aopcs) if with_aopc else None,
        ig_aopc=ig_aopc,
        seeds=tuple(seeds),
    )


class EstimatorComparison(NamedTuple):
    merged: float
    interpolated: float
    seeds: tuple


def estimator_error_comparison(
    model: QueryModel,
    x: Grid,
    baseline: Grid,
    n_star: int,
    s_steps: int,
    seeds: list,
    cfg: ExplainConfig = None,
) -> EstimatorComparison:
    """
    Mean |completeness residual| of the merged and the interpolated estimator at the same budget.
    Returns:
        EstimatorComparison: Seed-averaged absolute residual of each estimator.
    """
    if not seeds:
        raise BadBudgetList("the comparison needs at least one seed")
    cfg = cfg or ExplainConfig()
    base = cfg.replace(baseline_kind=BaselineKind.custom, baseline=baseline, n_star=n_star, s_steps=s_steps)
    merged, interpolated = [], []
    for seed in seeds:
        seeded = base.replace(seed=seed)
        merged.append(abs(geex_merged(model, x, seeded).completeness_residual))
        interpolated.append(abs(geex_interpolated(model, x, seeded).completeness_residual))
    return EstimatorComparison(float(np.mean(merged)), float(np.mean(interpolated)), tuple(seeds))
