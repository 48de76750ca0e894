from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from geex.constants import AlphaMode, BaselineKind
from geex.errors import BadBudget, OddWithMirror
from geex.grid import Grid
from geex.kernel import Kernel


@dataclass(frozen=True, eq=False)
class Attribution:
    """
    Per-feature contribution map and the facts needed to reproduce or judge it.
    Attributes:
        xi (Grid): Attribution of every feature, shape of the explicand.
        baseline (Grid): Reference input the attribution is measured against.
        class_idx (int): Class whose score was explained.
        n_queries (int): Model evaluations spent, not counting the two completeness queries.
        completeness_residual (float | None): (f(x) - f(baseline)) - sum(xi); None for
            methods that are not path methods.
        method (str): Method that produced the attribution.
        seed (int): Seed of every random draw behind the attribution.
        output_kind (str): OutputKind of the explained score.
        sigma (float | None): Spread of the search distribution or smoothing noise.
        warnings (tuple[str, ...]): Configuration fields the method ignored.
    """

    xi: Grid
    baseline: Grid
    class_idx: int
    n_queries: int
    completeness_residual: Optional[float]
    method: str
    seed: int
    output_kind: str = "score"
    sigma: Optional[float] = None
    warnings: tuple = ()

    @property
    def total(self) -> float:
        return float(self.xi.data.sum())


@dataclass(frozen=True)
class ExplainConfig:
    """
    Settings shared by every explainer.
    Attributes:
        sigma (float): Standard deviation of the search distribution.
        n_star (int): Query budget; at least 2, even when mirrored.
        s_steps (int): Path steps of the interpolated variant; must divide n_star.
        mirrored (bool): Use (eps, -eps) mask pairs.
        smoothing (Kernel | None): Frobenius-normalized kernel applied to raw masks.
        baseline_kind (str): BaselineKind.zeros, BaselineKind.blurred_explicand or BaselineKind.custom.
        baseline (Grid | None): The reference input when baseline_kind is custom.
        alpha_mode (str): AlphaMode used to place masks along the path.
        seed (int): Seed of the mask set and every other draw.
        class_idx (int | None): Class to explain; None picks the argmax at the explicand.
        ig_steps (int | None): Riemann steps of the integrated-gradients reference; None uses n_star.
        blur_size (int): Kernel size of the blurred-explicand baseline.
        blur_sigma (float): Kernel deviation of the blurred-explicand baseline.
        fresh_masks_per_step (bool): Interpolated variant draws a new mask subset for every step.
        workers (int): Threads evaluating queries; never changes a result.
    """

    sigma: float = 1.0
    n_star: int = 5000
    s_steps: int = 5
    mirrored: bool = True
    smoothing: Optional[Kernel] = None
    baseline_kind: str = BaselineKind.zeros
    baseline: Optional[Grid] = field(default=None, compare=False)
    alpha_mode: str = AlphaMode.stratified
    seed: int = 0
    class_idx: Optional[int] = None
    ig_steps: Optional[int] = None
    blur_size: int = 5
    blur_sigma: float = 1.0
    fresh_masks_per_step: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if int(self.n_star) != self.n_star or self.n_star < 2:
            raise BadBudget(f"n_star must be an integer >= 2, got {self.n_star}")
        if self.mirrored and self.n_star % 2:
            raise OddWithMirror(f"mirrored sampling needs an even n_star, got {self.n_star}")
        if int(self.s_steps) != self.s_steps or self.s_steps < 1:
            raise BadBudget(f"s_steps must be an integer >= 1, got {self.s_steps}")
        if self.baseline_kind not in BaselineKind.all():
            raise ValueError(f"unknown baseline kind {self.baseline_kind!r}")
        if self.baseline_kind == BaselineKind.custom and self.baseline is None:
            raise ValueError("a custom baseline kind needs a baseline grid")
        if self.alpha_mode not in AlphaMode.all():
            raise ValueError(f"unknown alpha mode {self.alpha_mode!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def replace(self, **changes) -> "ExplainConfig":
        return dataclasses.replace(self, **changes)

    @property
    def resolved_ig_steps(self) -> int:
        return self.n_star if self.ig_steps is None else int(self.ig_steps)
