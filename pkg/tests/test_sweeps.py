"""
Test suite for the equal and differentiated access-probability sweeps.
"""
from dataclasses import replace

import numpy as np
import pytest

from app.config import parse_config
from app.core.adaptation import AdaptationConfig, uniform_assignment
from app.core.montecarlo import EstimateResult, bernoulli_stderr, compare_assignments, estimate
from app.core.sweeps import SweepCell, SweepGrid, sweep_differentiated, sweep_equal


def _result(chain_prob: float, trials: int = 1000) -> EstimateResult:
    empty = np.zeros(3)
    return EstimateResult(trials=trials, vehicle_probs=empty, vehicle_stderr=empty,
                          chain_prob=chain_prob, chain_stderr=bernoulli_stderr(chain_prob, trials),
                          mean_onsets=empty, mean_delays=empty, warning_availability=empty)


def _grid(probs) -> SweepGrid:
    grid = SweepGrid(kind="equal", p_safe_axis=[], p_unsafe_axis=[])
    for k, prob in enumerate(probs):
        p = 0.01 * (k + 1)
        grid.cells.append(SweepCell(p, p, _result(prob), uniform_assignment(3, p)))
    return grid


@pytest.fixture
def small(scenario):
    return replace(scenario, trials=30)


class TestSweepGrid:
    """Minimum detection and reductions on a finished grid."""
    def test_interior_minimum(self):
        """A dip in the middle that clears both ends counts as interior."""
        assert _grid([0.9, 0.4, 0.2, 0.5, 0.95]).is_interior_minimum()

    def test_minimum_at_edge(self):
        assert not _grid([0.1, 0.4, 0.6]).is_interior_minimum()

    def test_shallow_minimum(self):
        """A dip inside the noise of its neighbours is not interior."""
        assert not _grid([0.41, 0.40, 0.41]).is_interior_minimum()

    def test_too_few_points(self):
        assert not _grid([0.5, 0.2]).is_interior_minimum()

    def test_reduction(self):
        """The reduction is undefined against a zero baseline."""
        grid = _grid([0.3, 0.2])
        grid.equal_minimum = 0.4
        assert grid.reduction_vs_equal == pytest.approx(0.5)
        grid.equal_minimum = 0.0
        assert grid.reduction_vs_equal is None


class TestSweepEqual:
    """Equal access probability for every vehicle."""
    def test_single_point(self, small):
        grid = sweep_equal(small, [0.05])
        assert len(grid.cells) == 1
        assert grid.argmin.p_safe == 0.05

    def test_cells_match_direct_estimates(self, small):
        """Each cell is the plain estimate at that probability."""
        grid = sweep_equal(small, [0.02, 0.1])
        for cell in grid.cells:
            direct = estimate(small, uniform_assignment(8, cell.p_safe))
            assert cell.result.chain_prob == direct.chain_prob
            assert np.array_equal(cell.result.vehicle_probs, direct.vehicle_probs)

    @pytest.mark.parametrize("p_grid", [[], [0.0, 0.1], [0.1, 1.0]])
    def test_invalid_grid(self, small, p_grid):
        with pytest.raises(ValueError):
            sweep_equal(small, p_grid)


class TestSweepDifferentiated:
    """Safe and unsafe access probability pairs."""
    def test_degenerate_cell_equals_equal_sweep(self, small):
        """Equal classes reproduce the equal sweep."""
        equal = sweep_equal(small, [0.05])
        config = AdaptationConfig(p_safe=0.05, p_unsafe=0.05, max_iterations=2, trials=20)
        grid = sweep_differentiated(small, [0.05], [0.05], config, equal_reference=equal)
        assert len(grid.cells) == 1
        assert grid.cells[0].result.chain_prob == equal.minimum
        if equal.minimum > 0:
            assert grid.reduction_vs_equal == 0.0

    def test_skips_inverted_cells(self, small):
        """Cells with p_unsafe below p_safe are never run."""
        config = AdaptationConfig(p_safe=0.02, p_unsafe=0.05, max_iterations=1, trials=10)
        grid = sweep_differentiated(small, [0.02, 0.06], [0.05, 0.08], config)
        pairs = [(cell.p_safe, cell.p_unsafe) for cell in grid.cells]
        assert pairs == [(0.02, 0.05), (0.02, 0.08), (0.06, 0.08)]
        assert all(p >= 0.02 for p in grid.argmin.assignment.p_access)

    def test_no_valid_cell(self, small):
        config = AdaptationConfig(p_safe=0.02, p_unsafe=0.05)
        with pytest.raises(ValueError):
            sweep_differentiated(small, [0.1], [0.05], config)

    def test_bracket_never_worse_than_equal(self, small):
        """Bracketing p0* includes the equal cell, so it cannot lose."""
        equal = sweep_equal(small, [0.03, 0.05, 0.08])
        p0 = equal.argmin.p_safe
        config = AdaptationConfig(p_safe=p0, p_unsafe=p0, max_iterations=2, trials=20)
        grid = sweep_differentiated(small, [p0 / 2, p0], [p0, 2 * p0], config, equal_reference=equal)
        assert grid.minimum <= equal.minimum


@pytest.mark.slow
class TestAcceptance:
    """Sweeps at full grid resolution."""

    def test_equal_access_has_interior_minimum(self):
        """Default highway, default grid, 10^4 trials: both grid ends sit 3 SE above p0*."""
        config = parse_config({"montecarlo": {"trials": 10_000}})
        grid = sweep_equal(config.scenario_config(), config.sweep.p_grid, workers=4)
        assert len(grid.cells) >= 20
        assert grid.is_interior_minimum(sigmas=3.0)

    def test_tailored_access_beats_best_equal_access(self):
        """Safe drivers below p0*, unsafe drivers above it, significantly fewer crashes."""
        # 8 ms slots make warning delay matter; a wide first gap keeps the
        # brake-light-only first follower from dominating the chain figure
        profiles = [{}, {"gap_scale": 3.0}] + [{}] * 6
        config = parse_config({
            "scenario": {"profiles": profiles},
            "link": {"packet_bits": 48_000},
            "montecarlo": {"trials": 4000},
        })
        scenario = config.scenario_config()
        equal = sweep_equal(scenario, config.sweep.p_grid, workers=4)
        p0 = equal.argmin.p_safe
        safe_grid = [p0 * f for f in config.sweep.safe_factors]
        unsafe_grid = [p0 * f for f in config.sweep.unsafe_factors]
        grid = sweep_differentiated(scenario, safe_grid, unsafe_grid, config.adaptation_config(p0, p0),
                                    equal_reference=equal, workers=4)
        best = grid.argmin
        assert best.p_safe < p0 < best.p_unsafe
        comparison = compare_assignments(scenario, best.assignment, uniform_assignment(8, p0), workers=4)
        assert comparison.prob_b == equal.minimum
        assert comparison.difference > 3.0 * comparison.stderr
        assert grid.reduction_vs_equal > 0
