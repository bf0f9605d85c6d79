"""Shared fixtures for the simulator test suites."""
import os

import numpy as np
import pytest

from app.core.channel import ChannelParams
from app.core.scenario import DriverProfile, ScenarioConfig
from app.core.timing import LinkBudget
from app.utils.emoji_logger import EmojiLogger


@pytest.fixture(scope="session", autouse=True)
def log_dir(tmp_path_factory):
    """Keep log files of the test run out of the working tree."""
    path = tmp_path_factory.mktemp("logs")
    os.environ["VANET_ADAPT_LOG_DIR"] = str(path)
    EmojiLogger.setup_logging({'log_dir': str(path), 'log_level': 'WARNING'})
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for property loops."""
    return np.random.default_rng(20130601)


@pytest.fixture
def budget() -> LinkBudget:
    return LinkBudget(packet_bits=12000, rate_bps=6e6, tolerable_delay=1.0)


@pytest.fixture
def channel() -> ChannelParams:
    """6 Mbps (β = 8 dB), α = 3, SSP."""
    return ChannelParams.from_rate(6e6, alpha=3.0)


@pytest.fixture
def scenario(budget, channel) -> ScenarioConfig:
    """Default highway with a small trial count."""
    return ScenarioConfig(budget=budget, channel=channel, trials=200, seed=7)


@pytest.fixture
def mixed_scenario(budget, channel) -> ScenarioConfig:
    """Deterministic five-vehicle chain: two alert drivers with long gaps, then two
    slow drivers tailgating at a quarter of the gap.

    Every trial is identical: vehicles 3 and 4 always collide, 1 and 2 never do.
    """
    alert = DriverProfile(tau_scale=0.5)
    slow = DriverProfile(tau_scale=3.0, gap_scale=0.25)
    return ScenarioConfig(
        budget=budget, channel=channel, chain_length=5, lanes=1, vehicles_per_lane=0,
        tau_median=1.0, tau_sigma_log=0.0, gap_low=60.0, gap_high=60.0,
        profiles=(DriverProfile(), alert, alert, slow, slow), trials=20, seed=11,
    )


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "results"
