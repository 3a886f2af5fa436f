"""Population flopping curves and the full gate-characterization run."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .analytic import propagate_analytic
from .oracle import FockOracle
from .params import GateParams, MotionalSpec, TwoQubitState
from .readout import ParityFringe, bell_fidelity, fit_parity_contrast, parity_scan

ZERO_TOL = 1e-6


@dataclass
class GateResult:
    times: np.ndarray
    populations: np.ndarray  # columns P00, P1bright, P11
    zeros: list[float] = field(default_factory=list)
    final_state: TwoQubitState | None = None
    parity_fringe: ParityFringe | None = None
    contrast: float | None = None
    fit_offset: float | None = None
    fit_phase: float | None = None
    fidelity: float | None = None

    @property
    def p1bright(self) -> np.ndarray:
        return self.populations[:, 1]


def _propagator(params: GateParams, motion: MotionalSpec | None, method: str, hamiltonian: str,
                t_end: float):
    if method == "analytic":
        return lambda t: propagate_analytic(params, float(t), motion)
    if method == "oracle":
        oracle = FockOracle(params, motion or MotionalSpec.thermal(params.nbar), hamiltonian)
        oracle.solve(t_end)
        return oracle.state
    raise ValueError(f"unknown propagator {method!r}")


def find_zeros(p1bright, times, tol: float = ZERO_TOL) -> list[float]:
    """Times in (0, t_max] where the 1-bright population touches zero.

    Grid local minima are refined with a bounded scalar minimization of the
    callable ``p1bright``; refined minima below ``tol`` count as zeros.
    """
    times = np.asarray(times, dtype=float)
    vals = np.array([p1bright(t) for t in times])
    zeros = []
    for k in range(1, len(times)):
        left = vals[k - 1]
        right = vals[k + 1] if k + 1 < len(times) else np.inf
        if not (vals[k] <= left and vals[k] <= right):
            continue
        lo = times[k - 1]
        hi = times[k + 1] if k + 1 < len(times) else times[k]
        res = minimize_scalar(p1bright, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(hi, 1e-12)})
        t0, v0 = (res.x, res.fun) if res.fun < vals[k] else (times[k], vals[k])
        if v0 < tol and t0 > 0 and not any(abs(t0 - z) < 1e-9 * times[-1] for z in zeros):
            zeros.append(float(t0))
    return zeros


def population_flopping(params: GateParams, t_grid, motion: MotionalSpec | None = None,
                        method: str = "analytic", hamiltonian: str = "LD") -> GateResult:
    """Populations (P00, P1bright, P11) of the gate pulse versus duration.

    The envelope is fixed by the nominal gate time; a point at time t is the
    state reached t into that pulse. Zeros of P1bright are reported in order,
    so the index of the zero at which the Bell state forms can be read off.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    prop = _propagator(params, motion, method, hamiltonian, float(t_grid.max()))
    states = [prop(t) for t in t_grid]
    pops = np.array([s.populations for s in states])
    zeros = find_zeros(lambda t: prop(t).p1bright, t_grid)
    return GateResult(times=t_grid, populations=pops, zeros=zeros, final_state=states[-1])


def characterize(state: TwoQubitState, n_chi: int = 64) -> tuple[ParityFringe, float, float, float, float]:
    """Parity scan over one full turn, constrained fit and fidelity estimate."""
    chi = np.linspace(0, 2 * math.pi, n_chi, endpoint=False)
    fringe = parity_scan(state, chi)
    fit = fit_parity_contrast(fringe)
    p00, p11 = state.p00, state.p11
    contrast = min(fit.contrast, 2 * math.sqrt(max(p00, 0) * max(p11, 0)))
    return fringe, fit.contrast, fit.offset, fit.phase, bell_fidelity(p00, p11, contrast)


def simulate_gate(params: GateParams, n_points: int = 201, motion: MotionalSpec | None = None,
                  method: str = "analytic", hamiltonian: str = "LD", n_chi: int = 64) -> GateResult:
    """Flopping curve up to the gate time plus parity analysis of the final state."""
    times = np.linspace(0, params.gate_time, n_points)
    result = population_flopping(params, times, motion, method, hamiltonian)
    fringe, contrast, offset, phase, fidelity = characterize(result.final_state, n_chi)
    result.parity_fringe = fringe
    result.contrast = contrast
    result.fit_offset = offset
    result.fit_phase = phase
    result.fidelity = fidelity
    return result
