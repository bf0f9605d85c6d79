"""Simulation models: channel, timing, kinematics, scenario, Monte Carlo and adaptation."""
