"""
Test suite for the safe/unsafe split and the iterative access adaptation.
"""
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from app.core import adaptation
from app.core.adaptation import (
    AccessAssignment,
    AdaptationConfig,
    AssignmentOrderError,
    ClassificationRule,
    RuleKind,
    adapt,
    assign,
    classify,
    classify_chain,
    uniform_assignment,
)
from app.core.kinematics import SafetyClass
from app.core.montecarlo import estimate

S, U = SafetyClass.SAFE, SafetyClass.UNSAFE
HALF = ClassificationRule(RuleKind.THRESHOLD, 0.5)


def _scripted_estimates(monkeypatch, rounds):
    """Replace the estimator with one that replays ``rounds`` in a loop."""
    calls = []

    def fake_estimate(scenario, assignment, workers=1):
        probs = np.asarray(rounds[len(calls) % len(rounds)], dtype=float)
        calls.append(assignment)
        return SimpleNamespace(vehicle_probs=probs, vehicle_stderr=np.zeros_like(probs),
                               chain_prob=float(probs.max()))

    monkeypatch.setattr(adaptation, "estimate", fake_estimate)
    return calls


class TestClassify:
    """Labels from collision probabilities."""

    def test_median_split(self):
        """Values above the median are Unsafe."""
        assert classify([0.0, 0.1, 0.4, 0.2, 0.3]) == (S, S, U, S, U)

    def test_ties_at_cutoff_are_safe(self):
        """A vehicle exactly at the cutoff stays safe."""
        assert classify([0.2, 0.2, 0.2, 0.2]) == (S, S, S, S)

    def test_threshold(self):
        """The threshold itself is still Safe."""
        rule = ClassificationRule(RuleKind.THRESHOLD, 0.15)
        assert classify([0.0, 0.15, 0.16, 0.9], rule) == (S, S, U, U)

    def test_quantile_property(self, rng):
        """At most half the chain is Unsafe and every Unsafe value beats every Safe one."""
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            probs = rng.uniform(0.0, 1.0, n)
            classes = classify(probs)
            unsafe = [p for p, c in zip(probs, classes) if c is U]
            safe = [p for p, c in zip(probs, classes) if c is S]
            assert len(unsafe) <= n // 2
            if unsafe and safe:
                assert min(unsafe) > max(safe)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            classify([0.1, 1.2])

    @pytest.mark.parametrize("value", [-0.1, 1.5])
    def test_rule_domain(self, value):
        """Cutoffs live in [0, 1]."""
        with pytest.raises(ValueError):
            ClassificationRule(RuleKind.QUANTILE, value)


class TestClassifyChain:
    """The leader follows the risk of the warning it sends."""

    def test_leader_joins_unsafe_followers(self):
        assert classify_chain([0.0, 0.1, 0.7, 0.2], HALF) == (U, S, U, S)

    def test_leader_safe_when_nobody_is_at_risk(self):
        """No Unsafe follower leaves the leader Safe."""
        assert classify_chain([0.0, 0.1, 0.2, 0.3], HALF) == (S, S, S, S)

    def test_quantile_ignores_the_leader(self):
        """The leader's zero does not pull the cutoff down."""
        # followers alone: median 0.2, only 0.3 is above it
        assert classify_chain([0.0, 0.1, 0.2, 0.3]) == (U, S, S, U)

    def test_needs_a_follower(self):
        with pytest.raises(ValueError):
            classify_chain([0.0])


class TestAssign:
    """Class vectors mapped to access probabilities."""

    def test_maps_classes(self):
        """Safe gets p_safe, Unsafe gets p_unsafe, other lanes p_safe."""
        assignment = assign((S, U, S), 0.03, 0.08)
        assert assignment.p_access == (0.03, 0.08, 0.03)
        assert assignment.background_p == 0.03
        assert assignment.unsafe_indices == [1]

    def test_explicit_background(self):
        """An explicit background probability overrides the mean."""
        assert assign((S, S), 0.03, 0.08, background_p=0.05).background_p == 0.05

    def test_order_enforced(self):
        """Unsafe drivers never get less than Safe ones."""
        with pytest.raises(AssignmentOrderError):
            assign((S, U), 0.08, 0.03)

    def test_assignment_rejects_inverted_probabilities(self):
        with pytest.raises(AssignmentOrderError):
            AccessAssignment((0.1, 0.05), (S, U), 0.1)

    def test_config_order_enforced(self):
        with pytest.raises(AssignmentOrderError):
            AdaptationConfig(p_safe=0.1, p_unsafe=0.05)

    @pytest.mark.parametrize("p_access,background", [
        ((0.0, 0.05), 0.05),
        ((0.05, 1.0), 0.05),
        ((0.05, 0.05), 0.0),
        ((0.05, -0.1), 0.05),
    ])
    def test_probabilities_strictly_inside_unit_interval(self, p_access, background):
        """A silent or always-on vehicle is not a valid assignment."""
        with pytest.raises(ValueError):
            AccessAssignment(p_access, (S, S), background)

    def test_uniform_rejects_silence(self):
        with pytest.raises(ValueError):
            uniform_assignment(8, 0.0)

    def test_uniform(self):
        """Same p everywhere and nobody Unsafe."""
        assignment = uniform_assignment(4, 0.05)
        assert assignment.p_access == (0.05,) * 4
        assert assignment.unsafe_indices == []


class TestAdapt:
    """The estimate, classify and assign loop."""

    def test_collision_free_chain_stays_safe(self, scenario):
        """Without collisions nobody is Unsafe, the leader included."""
        spread = replace(scenario, gap_low=2000.0, gap_high=3000.0, trials=30)
        result = adapt(spread, AdaptationConfig(p_safe=0.03, p_unsafe=0.08))
        assert result.assignment.converged
        assert len(result.trace) <= 2
        assert result.assignment.unsafe_indices == []
        assert result.assignment.p_access == (0.03,) * 8

    def test_single_round_budget(self, scenario):
        """One round spends exactly the configured trials."""
        config = AdaptationConfig(p_safe=0.03, p_unsafe=0.08, max_iterations=1, trials=40)
        result = adapt(scenario, config)
        assert len(result.trace) == 1
        assert result.trace[0].iteration == 1
        assert result.assignment.iterations == 1

    def test_tailgaters_become_unsafe(self, mixed_scenario):
        """The two slow tailgaters and the leader warning them end up Unsafe."""
        result = adapt(mixed_scenario, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF))
        assert result.assignment.converged
        assert result.cycle_length is None
        assert result.assignment.unsafe_indices == [0, 3, 4]
        assert len(result.trace) == 2
        assert result.assignment.p_access == (0.08, 0.03, 0.03, 0.08, 0.08)

    def test_matches_brake_light_ranking(self, mixed_scenario):
        """The converged split equals a one-shot split of the brake-light-only estimate."""
        baseline = estimate(mixed_scenario, uniform_assignment(5, 0.03), comms_enabled=False)
        result = adapt(mixed_scenario, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF))
        assert result.assignment.classes == classify_chain(baseline.vehicle_probs, HALF)

    def test_fixed_point_is_idempotent(self, mixed_scenario):
        """Adapting from a fixed point returns it after a single round."""
        first = adapt(mixed_scenario, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF))
        again = adapt(mixed_scenario, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF,
                                                       initial_classes=first.assignment.classes))
        assert again.assignment.classes == first.assignment.classes
        assert len(again.trace) == 1

    def test_reproducible(self, scenario):
        """Same seed, same rounds."""
        config = AdaptationConfig(p_safe=0.03, p_unsafe=0.08, max_iterations=2, trials=30)
        a = adapt(scenario, config)
        b = adapt(scenario, config)
        assert a.assignment == b.assignment
        assert np.array_equal(a.trace[-1].vehicle_probs, b.trace[-1].vehicle_probs)

    def test_trace_records_round_assignment(self, mixed_scenario):
        """Each trace row carries the probabilities its round ran under."""
        result = adapt(mixed_scenario, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF))
        assert result.trace[0].p_access == (0.03,) * 5
        assert result.trace[1].p_access == (0.08, 0.03, 0.03, 0.08, 0.08)

    def test_initial_classes_length(self, scenario):
        with pytest.raises(ValueError):
            adapt(scenario, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, initial_classes=(S, U)))

    def test_two_cycle_stops_early(self, scenario, monkeypatch):
        """Alternating estimates end the loop at the first repeated vector."""
        chain = replace(scenario, chain_length=4)
        calls = _scripted_estimates(monkeypatch, [
            [0.0, 0.9, 0.1, 0.1],
            [0.0, 0.1, 0.9, 0.1],
        ])
        result = adapt(chain, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF,
                                               max_iterations=6))
        assert len(calls) == 3
        assert len(result.trace) == 3
        assert result.cycle_length == 2
        assert not result.assignment.converged
        assert result.assignment.iterations == 3
        assert result.trace[0].classes == (U, U, S, S)
        assert result.trace[1].classes == (U, S, U, S)
        assert result.trace[2].classes == (U, U, S, S)
        assert result.assignment.classes == (U, S, U, S)

    def test_return_to_start_is_a_cycle(self, scenario, monkeypatch):
        """Coming back to the initial all-Safe vector counts as a repeat."""
        chain = replace(scenario, chain_length=3)
        _scripted_estimates(monkeypatch, [[0.0, 0.9, 0.1], [0.0, 0.1, 0.1]])
        result = adapt(chain, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF))
        assert len(result.trace) == 2
        assert result.cycle_length == 2
        assert not result.assignment.converged

    def test_stable_script_converges(self, scenario, monkeypatch):
        chain = replace(scenario, chain_length=3)
        _scripted_estimates(monkeypatch, [[0.0, 0.9, 0.1]])
        result = adapt(chain, AdaptationConfig(p_safe=0.03, p_unsafe=0.08, rule=HALF))
        assert result.assignment.converged
        assert result.cycle_length is None
        assert len(result.trace) == 2
