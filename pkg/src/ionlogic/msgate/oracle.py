"""Truncated Fock-space integration of the Molmer-Sorensen dynamics.

Two Hamiltonians are available:

``"LD"``
    H = -r(t) (a e^{-i delta t} + a^dag e^{i delta t}) sum_j f_j sigma_theta^(j)

``"full"``
    H = sum_j r(t) Omega_j [ e^{i varphi} 2 cos(nu t) sigma_+^(j)
        exp(i sum_k eta_jk (a_k e^{-i w_k t} + h.c.)) + h.c. ],  nu = w_target + delta

The full model keeps the carrier and every motional sideband order; the
exponential is built exactly (on an enlarged space, then truncated) and
moved to the interaction picture by the diagonal free evolution.
Its Lamb-Dicke limit equals the ``"LD"`` form with delta -> -delta, so the
drive phase is chosen separately for each model to aim at the same Bell
phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ..errors import LeakageError
from .analytic import I2, envelope, sigma_theta
from .params import INITIAL_INDEX, GateParams, MotionalSpec, TwoQubitState

LEAKAGE_LIMIT = 1e-6
RTOL = 1e-9
ATOL = 1e-12


def _annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def exact_displacement_generator(eta: float, n: int) -> np.ndarray:
    """exp(i eta (a + a^dag)) restricted to the lowest ``n`` Fock states."""
    big = 2 * n + 20
    a = _annihilation(big)
    return expm(1j * eta * (a + a.conj().T))[:n, :n]


@dataclass(frozen=True)
class SpectatorMode:
    """A motional mode included in the full-model simulation space."""

    frequency: float
    etas: tuple[float, float]
    motion: MotionalSpec


class FockOracle:
    """Numerical propagator for one gate configuration.

    Parameters
    ----------
    params : GateParams
    motion : MotionalSpec
        Truncation and initial state of the driven mode.
    hamiltonian : {"LD", "full"}
    spectators : sequence of SpectatorMode, optional
        Extra modes coupled through the full exponential (``"full"`` only).
    leakage_limit : float or None
        Largest tolerated top-two-level population; None disables the check
        (for diagnosing truncation error, not for production runs).
    """

    def __init__(self, params: GateParams, motion: MotionalSpec, hamiltonian: str = "LD",
                 spectators: Sequence[SpectatorMode] = (), rtol: float = RTOL, atol: float = ATOL,
                 leakage_limit: float | None = LEAKAGE_LIMIT):
        if hamiltonian not in ("LD", "full"):
            raise ValueError(f"unknown hamiltonian {hamiltonian!r}")
        if spectators and hamiltonian != "full":
            raise ValueError("spectator modes require the full Hamiltonian")
        self.params = params
        self.hamiltonian = hamiltonian
        self.rtol, self.atol = rtol, atol
        self.leakage_limit = leakage_limit
        self.max_top_population = 0.0
        self.modes = [SpectatorMode(params.mode_frequency, params.etas, motion), *spectators]
        self.dims = [m.motion.n_max for m in self.modes]
        self.dim = int(np.prod(self.dims))
        self._build_initial()
        if hamiltonian == "LD":
            self._build_ld()
        else:
            self._build_full()

    # -- initial state -------------------------------------------------
    def _build_initial(self):
        per_mode = [m.motion.weights() for m in self.modes]
        grids = np.meshgrid(*[w for _, w in per_mode], indexing="ij")
        idx = np.meshgrid(*[n for n, _ in per_mode], indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in grids]), axis=0)
        flat = np.ravel_multi_index(tuple(i.ravel() for i in idx), self.dims)
        keep = weights > 1e-16
        self.weights = weights[keep] / weights[keep].sum()
        self.columns = flat[keep]
        y0 = np.zeros((4, self.dim, len(self.columns)), dtype=complex)
        y0[INITIAL_INDEX, self.columns, np.arange(len(self.columns))] = 1.0
        self.y0 = y0

    # -- Hamiltonians --------------------------------------------------
    def _build_ld(self):
        p = self.params
        f = p.sideband_products
        theta = p.spin_axis(+1.0)
        self.F = f[0] * np.kron(sigma_theta(theta), I2) + f[1] * np.kron(I2, sigma_theta(theta))
        self.sqrt_n = np.sqrt(np.arange(1, self.dim))[None, :, None]

    def _build_full(self):
        p = self.params
        n_modes = len(self.modes)
        self.number = np.zeros(self.dim)
        for k, m in enumerate(self.modes):
            n_k = np.arange(m.motion.n_max)
            shape = [1] * n_modes
            shape[k] = -1
            self.number = self.number + (np.broadcast_to(n_k.reshape(shape), self.dims).ravel()
                                         * m.frequency)
        self.kicks = []
        for j in range(2):
            d = np.ones((1, 1), dtype=complex)
            for m in self.modes:
                d = np.kron(d, exact_displacement_generator(m.etas[j], m.motion.n_max))
            self.kicks.append(d)
        self.kicks_h = [d.conj().T.copy() for d in self.kicks]
        theta = p.spin_axis(-1.0)
        self.drive_phase = math.pi / 2 - theta
        self.beat = p.mode_frequency + p.detuning

    def _rhs_ld(self, t, y):
        p = self.params
        Y = y.reshape(4, self.dim, -1)
        r = float(envelope(t, p.gate_time, p.ramp_duration))
        if r == 0.0:
            return np.zeros_like(y)
        FY = np.einsum("ij,jnc->inc", self.F, Y)
        aFY = np.zeros_like(FY)
        adFY = np.zeros_like(FY)
        aFY[:, :-1] = self.sqrt_n * FY[:, 1:]
        adFY[:, 1:] = self.sqrt_n * FY[:, :-1]
        out = 1j * r * (np.exp(-1j * p.detuning * t) * aFY + np.exp(1j * p.detuning * t) * adFY)
        return out.ravel()

    # sigma_+ = |0><1| on qubit j as index moves in the |q1 q2> basis:
    # (source spin indices, destination spin indices) for sigma_+ and sigma_-
    _RAISE = (((2, 3), (0, 1)), ((1, 3), (0, 2)))
    _LOWER = (((0, 1), (2, 3)), ((0, 2), (1, 3)))

    def _rhs_full(self, t, y):
        p = self.params
        Y = y.reshape(4, self.dim, -1)
        r = float(envelope(t, p.gate_time, p.ramp_duration))
        if r == 0.0:
            return np.zeros_like(y)
        rot = np.exp(1j * self.number * t)[None, :, None]
        Yi = Y * rot.conj()
        out = np.zeros_like(Y)
        for j in range(2):
            g = r * p.rabis[j] * np.exp(1j * self.drive_phase) * 2 * math.cos(self.beat * t)
            if g == 0:
                continue
            D = self.kicks[j]
            (src, dst), (src_b, dst_b) = self._RAISE[j], self._LOWER[j]
            out[list(dst)] += g * np.matmul(D, Yi[list(src)])
            out[list(dst_b)] += np.conj(g) * np.matmul(self.kicks_h[j], Yi[list(src_b)])
        return (-1j * out * rot).ravel()

    # -- integration ---------------------------------------------------
    def _top_population(self, Y) -> tuple[float, int]:
        """Largest top-two-level population over modes, and that mode's index."""
        pop = np.einsum("inc,c->n", np.abs(Y) ** 2, self.weights).reshape(self.dims)
        tops = [float(np.moveaxis(pop, k, 0).reshape(self.dims[k], -1).sum(axis=1)[-2:].sum())
                for k in range(len(self.dims))]
        k = int(np.argmax(tops))
        return tops[k], k

    def _reduce(self, Y) -> TwoQubitState:
        rho = np.einsum("inc,jnc,c->ij", Y, Y.conj(), self.weights)
        return TwoQubitState(rho)

    def solve(self, t_end: float, dense: bool = False, check_points: int = 64):
        rhs = self._rhs_ld if self.hamiltonian == "LD" else self._rhs_full
        p = self.params
        # break the integration at envelope kinks
        stops = sorted({x for x in (p.ramp_duration, p.gate_time - p.ramp_duration, p.gate_time)
                        if 0 < x < t_end} | {t_end})
        check = np.linspace(0, t_end, check_points)
        self._segments = []
        y, t0 = self.y0.ravel(), 0.0
        for t1 in stops:
            sol = solve_ivp(rhs, (t0, t1), y, method="DOP853", rtol=self.rtol, atol=self.atol,
                            dense_output=True)
            if not sol.success:
                raise RuntimeError(sol.message)
            self._segments.append((t0, t1, sol.sol))
            y, t0 = sol.y[:, -1], t1
        for tc in check:
            self._check_leak(self._raw(tc))
        return self

    def _raw(self, t: float) -> np.ndarray:
        if t == 0:
            return self.y0
        for a, b, s in self._segments:
            if a <= t <= b:
                return s(t).reshape(4, self.dim, -1)
        raise ValueError(f"time {t} outside the solved interval")

    def _check_leak(self, Y):
        top, k = self._top_population(Y)
        self.max_top_population = max(self.max_top_population, top)
        if self.leakage_limit is not None and top > self.leakage_limit:
            n = self.dims[k]
            raise LeakageError(top, n, int(math.ceil(n * 1.5)), mode=k)

    def state(self, t: float) -> TwoQubitState:
        Y = self._raw(float(t))
        self._check_leak(Y)
        return self._reduce(Y)

    def states(self, times) -> list[TwoQubitState]:
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("time must be non-negative")
        t_end = float(times.max()) if times.size else 0.0
        if not getattr(self, "_segments", None) or self._segments[-1][1] < t_end:
            self.solve(t_end)
        return [self.state(t) for t in times]


def propagate_oracle(params: GateParams, motion: MotionalSpec | None = None,
                     hamiltonian: str = "LD", t=None, **kwargs):
    """Numerically propagate |11> (x) motion; returns the motion-traced state(s).

    ``t`` defaults to the gate time. Raises :class:`LeakageError` when the
    top two Fock levels of any mode hold more than 1e-6 population.
    """
    if motion is None:
        motion = MotionalSpec.thermal(params.nbar)
    if t is None:
        t = params.gate_time
    oracle = FockOracle(params, motion, hamiltonian, **kwargs)
    out = oracle.states(np.atleast_1d(t))
    return out[0] if np.ndim(t) == 0 else out
