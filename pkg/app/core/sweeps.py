"""
Access-Probability Sweeps

Collision probability over a grid of equal access probabilities, and over a
grid of (p_safe, p_unsafe) pairs where the safe/unsafe split is adapted per
cell. Every cell is estimated on the same trial seeds, so cells are paired.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

from tqdm import tqdm

from app.core.adaptation import AccessAssignment, AdaptationConfig, adapt, uniform_assignment
from app.core.montecarlo import EstimateResult, estimate
from app.core.scenario import ScenarioConfig
from app.utils.emoji_logger import EmojiLogger

logger = logging.getLogger(__name__)


@dataclass
class SweepCell:
    p_safe: float
    p_unsafe: float
    result: EstimateResult
    assignment: AccessAssignment


@dataclass
class SweepGrid:
    """Evaluated grid; ``kind`` is ``equal`` or ``differentiated``."""
    kind: str
    p_safe_axis: List[float]
    p_unsafe_axis: List[float]
    cells: List[SweepCell] = field(default_factory=list)
    equal_minimum: Optional[float] = None

    @property
    def argmin(self) -> SweepCell:
        return min(self.cells, key=lambda cell: cell.result.chain_prob)

    @property
    def minimum(self) -> float:
        return self.argmin.result.chain_prob

    @property
    def reduction_vs_equal(self) -> Optional[float]:
        """Relative drop of the grid minimum below the equal-probability minimum."""
        if self.equal_minimum is None or self.equal_minimum == 0:
            return None
        return (self.equal_minimum - self.minimum) / self.equal_minimum

    def is_interior_minimum(self, sigmas: float = 3.0) -> bool:
        """Both ends of an equal sweep exceed the minimum by ``sigmas`` standard errors."""
        if len(self.cells) < 3:
            return False
        best = self.argmin
        if best is self.cells[0] or best is self.cells[-1]:
            return False
        margin = sigmas * best.result.chain_stderr
        return all(end.result.chain_prob - best.result.chain_prob > margin
                   for end in (self.cells[0], self.cells[-1]))


def _check_grid(values: Sequence[float], name: str) -> List[float]:
    grid = [float(v) for v in values]
    if not grid:
        raise ValueError(f"{name} is empty")
    bad = [v for v in grid if not 0.0 < v < 1.0]
    if bad:
        raise ValueError(f"{name} values must lie in (0, 1): {bad}")
    return grid


def sweep_equal(scenario: ScenarioConfig, p_grid: Sequence[float], workers: int = 1,
                progress: bool = False) -> SweepGrid:
    """Chain collision probability with every vehicle using the same p."""
    grid = _check_grid(p_grid, "p_grid")
    sweep = SweepGrid(kind="equal", p_safe_axis=grid, p_unsafe_axis=grid)
    for p in tqdm(grid, desc="equal sweep", disable=not progress):
        assignment = uniform_assignment(scenario.chain_length, p)
        result = estimate(scenario, assignment, workers=workers)
        sweep.cells.append(SweepCell(p, p, result, assignment))
        logger.debug("p=%.4f chain=%.4f", p, result.chain_prob)

    best = sweep.argmin
    EmojiLogger.log('sweep', f"Equal-p minimum {best.result.chain_prob:.4f} "
                             f"(±{best.result.chain_stderr:.4f}) at p0={best.p_safe:g}")
    return sweep


def sweep_differentiated(scenario: ScenarioConfig, p_safe_grid: Sequence[float],
                         p_unsafe_grid: Sequence[float], config: AdaptationConfig,
                         equal_reference: Optional[SweepGrid] = None, workers: int = 1,
                         progress: bool = False) -> SweepGrid:
    """Collision probability over (p_safe, p_unsafe) with the split adapted per cell.

    Cells with p_unsafe < p_safe are not evaluated. When ``equal_reference`` is
    given its minimum is stored for the reduction figure.
    """
    safe_axis = _check_grid(p_safe_grid, "p_safe_grid")
    unsafe_axis = _check_grid(p_unsafe_grid, "p_unsafe_grid")
    sweep = SweepGrid(kind="differentiated", p_safe_axis=safe_axis, p_unsafe_axis=unsafe_axis,
                      equal_minimum=equal_reference.minimum if equal_reference else None)

    pairs = [(ps, pu) for ps in safe_axis for pu in unsafe_axis if pu >= ps]
    if not pairs:
        raise ValueError("No grid cell satisfies p_unsafe >= p_safe")
    for p_safe, p_unsafe in tqdm(pairs, desc="2-D sweep", disable=not progress):
        cell_config = replace(config, p_safe=p_safe, p_unsafe=p_unsafe)
        adapted = adapt(scenario, cell_config, workers=workers).assignment
        result = estimate(scenario, adapted, workers=workers)
        sweep.cells.append(SweepCell(p_safe, p_unsafe, result, adapted))

    best = sweep.argmin
    message = (f"2-D minimum {best.result.chain_prob:.4f} at p_safe={best.p_safe:g}, "
               f"p_unsafe={best.p_unsafe:g}")
    if sweep.reduction_vs_equal is not None:
        message += f"; {100.0 * sweep.reduction_vs_equal:.1f}% below the equal-p minimum"
    EmojiLogger.log('sweep', message)
    return sweep
