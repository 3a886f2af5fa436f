"""Parity-flopping analysis and Bell-state fidelity estimation."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import curve_fit

from ..errors import FitError, PhysicalityError
from .analytic import SZ, sigma_theta
from .params import TwoQubitState

PARITY = np.kron(SZ, SZ)


class FitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ParityFringe:
    chi: np.ndarray
    parity: np.ndarray


@dataclass(frozen=True)
class ParityFit:
    contrast: float
    phase: float
    offset: float


def analysis_pulse(chi: float) -> np.ndarray:
    """pi/2 rotation about the equatorial axis at angle ``chi`` from X, on both qubits."""
    r = expm(-1j * math.pi / 4 * sigma_theta(chi))
    return np.kron(r, r)


def parity_scan(state: TwoQubitState, chi_grid) -> ParityFringe:
    """(P00 + P11) - (P01 + P10) after the analysis pulse, for each chi."""
    chi = np.asarray(chi_grid, dtype=float)
    out = np.empty(chi.shape)
    for k, c in enumerate(chi):
        u = analysis_pulse(c)
        out[k] = np.real(np.trace(PARITY @ u @ state.rho @ u.conj().T))
    return ParityFringe(chi, np.clip(out, -1.0, 1.0))


def fit_parity_contrast(fringe: ParityFringe) -> ParityFit:
    """Least-squares fit of A sin(2 chi + phi0) + c with the period fixed at pi."""
    chi, y = np.asarray(fringe.chi), np.asarray(fringe.parity)
    if chi.size < 8:
        raise FitError(f"need at least 8 fringe points, got {chi.size}")
    if np.ptp(chi) < math.pi * (1 - 1e-9):
        raise FitError("fringe must span at least one period (pi)")
    design = np.column_stack([np.sin(2 * chi), np.cos(2 * chi), np.ones_like(chi)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise FitError("singular parity fit")
    s, c, offset = coef
    amp = math.hypot(s, c)
    if abs(offset) > 0.05:
        warnings.warn(f"parity fit offset {offset:.3f} exceeds 0.05", FitWarning, stacklevel=2)
    return ParityFit(contrast=amp, phase=math.atan2(c, s), offset=float(offset))


def fit_parity_period(fringe: ParityFringe) -> float:
    """Fringe period from a fit with the frequency left free."""
    seed = fit_parity_contrast(fringe)

    def model(x, a, k, p, c):
        return a * np.sin(k * x + p) + c

    popt, _ = curve_fit(model, fringe.chi, fringe.parity,
                        p0=(seed.contrast, 2.0, seed.phase, seed.offset), xtol=1e-14, ftol=1e-14)
    return 2 * math.pi / abs(popt[1])


def bell_fidelity(p00: float, p11: float, contrast: float) -> float:
    """F = (P00 + P11 + C_PF) / 2, clamped to [0, 1]."""
    tol = 1e-9
    for name, v in (("P00", p00), ("P11", p11), ("C_PF", contrast)):
        if not -tol <= v <= 1 + tol:
            raise PhysicalityError(f"{name}={v} outside [0, 1]")
    if contrast > 2 * math.sqrt(max(p00, 0) * max(p11, 0)) + tol:
        raise PhysicalityError(f"contrast {contrast} exceeds 2 sqrt(P00 P11)")
    f = (p00 + p11 + contrast) / 2
    if not 0 <= f <= 1:
        warnings.warn(f"fidelity {f} clamped to [0, 1]", FitWarning, stacklevel=2)
        f = min(max(f, 0.0), 1.0)
    return f
