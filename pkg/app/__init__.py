"""
VANET Driver Adaptation
-----------------------

Simulation toolkit for driver-aware channel access in vehicular safety
messaging: a closed-form channel and delay model, a rear-end braking chain,
Monte Carlo estimation of collision probabilities and an iterative
safe/unsafe access-probability adaptation.

Key Components:
- core: channel, timing, kinematics, scenario, Monte Carlo, adaptation, sweeps
- config: environment and JSON run-configuration handling
- cli: command implementations, output writers and validation batteries
- utils: logging helpers
"""

__version__ = "0.1.0"
