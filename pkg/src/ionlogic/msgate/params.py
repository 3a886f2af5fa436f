"""Gate parameters, motional-state specification and two-qubit states."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..coupling import CouplingTable
from ..errors import DecoupledIonError

# |00>, |01>, |10>, |11>; |0> is the upper (D) level, sigma_z|0> = +|0>
BASIS = ("00", "01", "10", "11")
INITIAL_INDEX = 3


@dataclass(frozen=True)
class Ramp:
    """Amplitude envelope edges: ``shape`` is ``"none"`` or ``"sine2"``.

    ``duration`` of None means 5% of the gate time.
    """

    shape: str = "none"
    duration: float | None = None

    def __post_init__(self):
        if self.shape not in ("none", "sine2"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")
        if self.duration is not None and self.duration < 0:
            raise ValueError("ramp duration must be non-negative")

    def resolved(self, gate_time: float) -> float:
        if self.shape == "none":
            return 0.0
        tau = 0.05 * gate_time if self.duration is None else self.duration
        if 2 * tau > gate_time:
            raise ValueError("ramp edges longer than half the gate time")
        return tau


@dataclass(frozen=True)
class GateParams:
    """A two-ion Molmer-Sorensen drive on a single motional mode.

    ``etas`` are signed Lamb-Dicke parameters of the two driven ions on
    ``mode`` and ``rabis`` their carrier Rabi frequencies (rad/s); their
    products are the sideband couplings entering the Lamb-Dicke Hamiltonian.
    ``bell_phase`` is the target phase phi of (|00> + e^{i phi}|11>)/sqrt2.
    """

    mode: str
    mode_frequency: float
    detuning: float
    etas: tuple[float, float]
    rabis: tuple[float, float]
    loops: int = 1
    ramp: Ramp = field(default_factory=Ramp)
    nbar: float = 0.0
    bell_phase: float = math.pi / 2
    gate_time_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "etas", tuple(float(e) for e in self.etas))
        object.__setattr__(self, "rabis", tuple(float(r) for r in self.rabis))
        if not self.detuning > 0:
            raise ValueError("detuning must be positive")
        if len(self.etas) != 2 or len(self.rabis) != 2:
            raise ValueError("exactly two driven ions are supported")
        if self.loops < 1:
            raise ValueError("loops must be a positive integer")
        if self.nbar < 0:
            raise ValueError("nbar must be non-negative")
        if any(r < 0 for r in self.rabis):
            raise ValueError("Rabi frequencies must be non-negative")

    @property
    def gate_time(self) -> float:
        if self.gate_time_override is not None:
            return self.gate_time_override
        return 2 * math.pi * self.loops / self.detuning

    @property
    def sideband_products(self) -> np.ndarray:
        """Signed eta_j Omega_j (rad/s)."""
        return np.array(self.etas) * np.array(self.rabis)

    @property
    def ramp_duration(self) -> float:
        return self.ramp.resolved(self.gate_time)

    def spin_axis(self, phase_sign: float = 1.0) -> float:
        """Equatorial spin axis theta that yields ``bell_phase`` from |11>.

        ``phase_sign`` is the sign of the geometric phase the Hamiltonian
        accumulates per unit f1 f2 (+1 for the Lamb-Dicke model).
        """
        f1, f2 = self.sideband_products
        s = phase_sign * (1.0 if f1 * f2 >= 0 else -1.0)
        return 0.5 * (self.bell_phase + s * math.pi / 2)


def calibrate_gate(coupling: CouplingTable, mode: str, gate_time: float, loops: int = 1,
                   ions: Sequence[int] | None = None, **kwargs) -> GateParams:
    """Calibrated drive: delta = 2 pi K / t_g and |eta_j| Omega_j = delta / (4 sqrt K).

    ``ions`` selects the two driven ions (default: a two-ion chain's both
    ions). Extra keyword arguments go to :class:`GateParams`.
    """
    n = coupling.modes.config.n_ions
    if ions is None:
        if n != 2:
            raise ValueError("name the two driven ions for chains longer than two")
        ions = (0, 1)
    ions = tuple(ions)
    if len(ions) != 2:
        raise ValueError("exactly two driven ions are supported")
    if gate_time <= 0:
        raise ValueError("gate_time must be positive")
    detuning = 2 * math.pi * loops / gate_time
    target = detuning / (4 * math.sqrt(loops))
    etas, rabis = [], []
    for j in ions:
        e = coupling.entry(j, mode)
        if e.eta <= 1e-15:
            label = coupling.modes.config.ions[j].label
            raise DecoupledIonError(f"ion {j} ({label}) does not couple to mode {mode}")
        etas.append(e.eta_signed)
        rabis.append(target / e.eta)
    return GateParams(mode=mode, mode_frequency=coupling.modes.mode(mode).frequency,
                      detuning=detuning, etas=tuple(etas), rabis=tuple(rabis),
                      loops=loops, **kwargs)


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MotionalSpec:
    """Truncated Fock space and initial motional state of one mode.

    ``initial`` is ``"ground"``, ``"thermal"`` (mean occupation ``nbar``) or
    ``"fock"`` (number state ``fock_n``).
    """

    n_max: int = 40
    initial: str = "ground"
    nbar: float = 0.0
    fock_n: int = 0

    def __post_init__(self):
        if self.initial not in ("ground", "thermal", "fock"):
            raise ValueError(f"unknown initial motional state {self.initial!r}")
        if self.nbar < 0:
            raise ValueError("nbar must be non-negative")
        mean = self.nbar if self.initial == "thermal" else (self.fock_n if self.initial == "fock" else 0)
        if self.n_max < 4 * (mean + 1):
            raise ValueError(f"n_max={self.n_max} below 4*(nbar+1)={4 * (mean + 1):g}")
        if self.initial == "fock" and self.fock_n > self.n_max - 3:
            raise ValueError("Fock state too close to the truncation edge")
        tail = self.initial_tail()
        if tail > 1e-8:
            warnings.warn(f"initial population {tail:.2g} in the top two Fock levels "
                          f"(n_max={self.n_max}) exceeds 1e-8", TruncationWarning, stacklevel=3)

    @classmethod
    def thermal(cls, nbar: float, n_max: int = 40) -> "MotionalSpec":
        return cls(n_max=n_max, initial="thermal" if nbar > 0 else "ground", nbar=nbar)

    def _raw_weights(self) -> np.ndarray:
        n = np.arange(self.n_max)
        if self.initial == "ground" or (self.initial == "thermal" and self.nbar == 0):
            return (n == 0).astype(float)
        if self.initial == "fock":
            return (n == self.fock_n).astype(float)
        p = self.nbar / (self.nbar + 1)
        return p**n / (self.nbar + 1)

    def initial_tail(self) -> float:
        return float(self._raw_weights()[-2:].sum())

    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Fock numbers and normalized weights of the initial mixture.

        Thermal weights stop once the cumulative weight exceeds 1 - 1e-10 (or
        at the truncation edge) and are renormalized.
        """
        w = self._raw_weights()
        cum = np.cumsum(w)
        stop = int(np.searchsorted(cum, 1 - 1e-10)) + 1
        stop = min(stop, len(w))
        keep = np.flatnonzero(w[:stop] > 0)
        wk = w[keep]
        return keep, wk / wk.sum()


@dataclass(frozen=True)
class TwoQubitState:
    """Reduced two-qubit density matrix in the basis |00>, |01>, |10>, |11>."""

    rho: np.ndarray

    @classmethod
    def from_ket(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def bell(cls, phase: float) -> "TwoQubitState":
        return cls.from_ket(np.array([1, 0, 0, np.exp(1j * phase)]) / math.sqrt(2))

    @classmethod
    def maximally_mixed(cls) -> "TwoQubitState":
        return cls(np.eye(4, dtype=complex) / 4)

    @property
    def p00(self) -> float:
        return float(self.rho[0, 0].real)

    @property
    def p11(self) -> float:
        return float(self.rho[3, 3].real)

    @property
    def p1bright(self) -> float:
        return float(self.rho[1, 1].real + self.rho[2, 2].real)

    @property
    def populations(self) -> tuple[float, float, float]:
        """(P_00, P_01 + P_10, P_11)."""
        return self.p00, self.p1bright, self.p11

    @property
    def coherence(self) -> complex:
        """rho_{00,11}."""
        return complex(self.rho[0, 3])

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def fidelity(self, phase: float) -> float:
        """<Phi_phi| rho |Phi_phi>."""
        v = np.array([1, 0, 0, np.exp(1j * phase)]) / math.sqrt(2)
        return float((v.conj() @ self.rho @ v).real)

    def entropy(self) -> float:
        """Von Neumann entropy in nats."""
        p = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))
        p = p[p > 1e-300]
        return float(-np.sum(p * np.log(p)))
