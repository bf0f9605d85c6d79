"""
Test suite for the slot oracle, braking trials and their aggregation.
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from app.core.adaptation import uniform_assignment
from app.core.channel import ChannelParams, Interferer, MacMode, packet_success
from app.core.montecarlo import (
    ROUND_STREAM,
    TRIAL_STREAM,
    bernoulli_stderr,
    compare_assignments,
    derive_seed,
    estimate,
    paired_comparison,
    run_trial,
    run_trials,
    slot_oracle_success,
    summarize,
    trial_rng,
)
from app.core.scenario import sample_geometry


class TestSeeding:
    """Seed derivation for trials and adaptation rounds."""
    def test_derive_seed_is_stable(self):
        assert derive_seed(42, TRIAL_STREAM, 3) == derive_seed(42, TRIAL_STREAM, 3)

    def test_streams_and_indices_differ(self):
        """Stream and index both separate the derived seeds."""
        seeds = {derive_seed(42, stream, index) for stream in (TRIAL_STREAM, ROUND_STREAM) for index in range(50)}
        assert len(seeds) == 100

    def test_trial_rng_reproducible(self):
        assert trial_rng(1, 5).random() == trial_rng(1, 5).random()
        assert trial_rng(1, 5).random() != trial_rng(1, 6).random()

    @pytest.mark.parametrize("p,n,expected", [(0.5, 100, 0.05), (0.0, 10, 0.0), (1.0, 10, 0.0)])
    def test_bernoulli_stderr(self, p, n, expected):
        assert bernoulli_stderr(p, n) == pytest.approx(expected)


class TestSlotOracle:
    """Slot-level simulation of packet receptions."""
    def test_no_interferers(self, channel):
        assert slot_oracle_success(10.0, [], channel, 1000, seed=1).estimate == 1.0

    def test_half_success(self):
        params = ChannelParams(alpha=2.0, beta_linear=1.0)
        result = slot_oracle_success(10.0, [Interferer(10.0, 1.0)], params, 400_000, seed=2)
        assert abs(result.estimate - 0.5) <= 3 * result.stderr

    @pytest.mark.parametrize("mode", [MacMode.SSP, MacMode.SAP])
    def test_reference_configuration(self, channel, mode):
        """Simulation agrees with the closed form within three standard errors."""
        params = ChannelParams(3.0, channel.beta_linear, mode)
        interferers = [Interferer(10.0, 0.05), Interferer(20.0, 0.05), Interferer(30.0, 0.05)]
        result = slot_oracle_success(5.0, interferers, params, 1_000_000, seed=3)
        closed = packet_success(5.0, interferers, params)
        assert abs(result.estimate - closed) <= 3 * bernoulli_stderr(closed, result.slots)

    def test_rejects_empty_run(self, channel):
        with pytest.raises(ValueError):
            slot_oracle_success(10.0, [], channel, 0, seed=1)


class TestTrials:
    """Single trials and batches."""
    def test_rerun_is_bit_identical(self, scenario):
        """The same seed reproduces every field of the outcome."""
        assignment = uniform_assignment(8, 0.05)
        a = run_trial(scenario, assignment, 17)
        b = run_trial(scenario, assignment, 17)
        assert np.array_equal(a.collided, b.collided)
        assert np.array_equal(a.onset_times, b.onset_times)
        assert np.array_equal(a.comm_delays, b.comm_delays)

    def test_near_silent_channel_equals_brake_lights_only(self, scenario):
        """Links that almost never fire fall under the deadline floor."""
        silent = uniform_assignment(8, 1e-9)
        for k in range(20):
            with_comms = run_trial(scenario, silent, k)
            without = run_trial(scenario, silent, k, comms_enabled=False)
            assert np.array_equal(with_comms.onset_times, without.onset_times)
            assert np.array_equal(with_comms.collided, without.collided)

    def test_ideal_channel_onsets_are_reaction_times(self, scenario):
        assignment = uniform_assignment(8, 0.05)
        for k in range(20):
            outcome = run_trial(scenario, assignment, k, ideal_channel=True)
            taus = sample_geometry(scenario, trial_rng(scenario.seed, k)).taus
            assert np.allclose(outcome.onset_times[1:], taus[1:])

    def test_ideal_channel_is_lower_bound(self, scenario):
        """Instant warnings never brake later than real ones."""
        assignment = uniform_assignment(8, 0.05)
        ideal = run_trials(scenario, assignment, ideal_channel=True)
        real = run_trials(scenario, assignment)
        assert np.all(ideal.onsets <= real.onsets + 1e-12)

    def test_first_follower_uses_brake_lights(self, scenario):
        """Vehicle 1 reacts to brake lights, not to packets."""
        outcome = run_trial(scenario, uniform_assignment(8, 0.05), 0)
        assert outcome.comm_delays[1] == 0.0


class TestEstimate:
    """Collision estimates and their errors."""
    def test_single_trial_indicators(self, scenario):
        single = replace(scenario, trials=1)
        assignment = uniform_assignment(8, 0.05)
        result = estimate(single, assignment)
        outcome = run_trial(single, assignment, 0)
        assert np.array_equal(result.vehicle_probs, outcome.collided.astype(float))
        assert result.chain_prob == float(outcome.chain_collision)

    def test_far_apart_chain_never_collides(self, scenario):
        """Gaps of kilometres leave nothing to hit."""
        spread = replace(scenario, gap_low=2000.0, gap_high=3000.0, trials=50)
        result = estimate(spread, uniform_assignment(8, 0.05))
        assert result.chain_prob == 0.0
        assert result.chain_stderr == 0.0

    def test_standard_errors(self, scenario):
        result = estimate(scenario, uniform_assignment(8, 0.05))
        assert result.chain_stderr == pytest.approx(bernoulli_stderr(result.chain_prob, scenario.trials))
        for p, se in zip(result.vehicle_probs, result.vehicle_stderr):
            assert se == pytest.approx(math.sqrt(p * (1 - p) / scenario.trials))
        assert result.vehicle_probs[0] == 0.0

    def test_summary_of_batch(self, scenario):
        batch = run_trials(replace(scenario, trials=30), uniform_assignment(8, 0.05))
        result = summarize(batch)
        assert result.trials == 30
        assert result.chain_prob == batch.collided.any(axis=1).mean()
        assert np.all((result.warning_availability >= 0) & (result.warning_availability <= 1))

    def test_independent_of_worker_count(self, scenario):
        """Parallel runs reproduce the serial batch exactly."""
        small = replace(scenario, trials=24)
        assignment = uniform_assignment(8, 0.05)
        serial = run_trials(small, assignment, workers=1)
        parallel = run_trials(small, assignment, workers=3)
        assert np.array_equal(serial.collided, parallel.collided)
        assert np.array_equal(serial.onsets, parallel.onsets)
        assert np.array_equal(serial.delays, parallel.delays)

    def test_two_vehicle_chain_ignores_access_probability(self, scenario):
        """Two vehicles never use the radio."""
        pair = replace(scenario, chain_length=2, trials=100)
        low = estimate(pair, uniform_assignment(2, 0.01))
        high = estimate(pair, uniform_assignment(2, 0.3))
        assert np.array_equal(low.vehicle_probs, high.vehicle_probs)


class TestPairedComparison:
    """Warnings against brake lights alone on the same trials."""
    def test_warnings_reduce_collisions(self, scenario):
        comparison = paired_comparison(replace(scenario, trials=300), uniform_assignment(8, 0.05))
        assert comparison.prob_a < comparison.prob_b
        assert comparison.z_score > 3.0

    @pytest.mark.slow
    def test_warnings_reduce_collisions_at_scale(self, scenario):
        comparison = paired_comparison(replace(scenario, trials=10_000), uniform_assignment(8, 0.05), workers=4)
        assert comparison.difference > 3.0 * comparison.stderr
        assert comparison.worse_trials <= 0.01 * comparison.trials


class TestCompareAssignments:
    """Two access assignments on shared trial seeds."""

    def test_identical_assignments_tie(self, scenario):
        comparison = compare_assignments(replace(scenario, trials=60), uniform_assignment(8, 0.05),
                                         uniform_assignment(8, 0.05))
        assert comparison.difference == 0.0
        assert comparison.stderr == 0.0
        assert comparison.worse_trials == 0

    def test_matches_separate_estimates(self, scenario):
        """Paired probabilities equal the unpaired estimates on the same seeds."""
        small = replace(scenario, trials=60)
        fast, slow = uniform_assignment(8, 0.04), uniform_assignment(8, 0.3)
        comparison = compare_assignments(small, fast, slow)
        assert comparison.prob_a == estimate(small, fast).chain_prob
        assert comparison.prob_b == estimate(small, slow).chain_prob
        assert comparison.difference == pytest.approx(comparison.prob_b - comparison.prob_a)
