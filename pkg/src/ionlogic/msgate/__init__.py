"""Molmer-Sorensen gate simulation and Bell-state fidelity estimation."""
from .analytic import loop_integrals, propagate_analytic, residual_displacement
from .flopping import GateResult, characterize, find_zeros, population_flopping, simulate_gate
from .oracle import FockOracle, SpectatorMode, propagate_oracle
from .params import GateParams, MotionalSpec, Ramp, TwoQubitState, calibrate_gate
from .readout import (ParityFit, ParityFringe, bell_fidelity, fit_parity_contrast,
                      fit_parity_period, parity_scan)

__all__ = [
    "FockOracle", "GateParams", "GateResult", "MotionalSpec", "ParityFit", "ParityFringe",
    "Ramp", "SpectatorMode", "TwoQubitState", "bell_fidelity", "calibrate_gate", "characterize",
    "find_zeros", "fit_parity_contrast", "fit_parity_period", "loop_integrals",
    "parity_scan", "population_flopping", "propagate_analytic", "propagate_oracle",
    "residual_displacement", "simulate_gate",
]
