"""Lamb-Dicke parameters and sideband Rabi frequencies for each (ion, mode)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .crystal import ModeTable
from .errors import DecoupledIonError
from .species import CONSTANTS, IonSpecies

LAMB_DICKE_WARN = 0.3


class LambDickeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LaserField:
    """Qubit laser addressing one species.

    ``wavevector_projection`` is k . z_hat in rad/m (signed). ``carrier_rabi``
    (rad/s) overrides the value derived from a reference Rabi frequency.
    """

    target_species: IonSpecies
    wavevector_projection: float
    intensity_rel: float = 1.0
    carrier_rabi: float | None = None

    def __post_init__(self):
        kmax = self.target_species.wavevector
        if abs(self.wavevector_projection) > kmax * (1 + 1e-12):
            raise ValueError(
                f"|k.z| = {abs(self.wavevector_projection):.6g} exceeds 2pi/lambda = {kmax:.6g}"
            )
        if self.intensity_rel < 0:
            raise ValueError("intensity_rel must be non-negative")
        if self.carrier_rabi is not None and self.carrier_rabi < 0:
            raise ValueError("carrier_rabi must be non-negative")

    @classmethod
    def along_axis(cls, species: IonSpecies, cosine: float = 1.0, **kw) -> "LaserField":
        """Beam at angle arccos(cosine) to the trap axis."""
        return cls(species, cosine * species.wavevector, **kw)

    def rabi(self, rabi_reference: float | None = None) -> float:
        """Carrier Rabi frequency: explicit value, else Omega_ref sqrt(I) M_rel."""
        if self.carrier_rabi is not None:
            return self.carrier_rabi
        if rabi_reference is None:
            return math.nan
        return rabi_reference * math.sqrt(self.intensity_rel) * self.target_species.quad_matrix_element_rel


def parallel_lasers(modes: ModeTable, signs: Mapping[str, float] | None = None) -> dict[str, LaserField]:
    """One axis-parallel laser per species in the chain."""
    signs = signs or {}
    out = {}
    for ion in modes.config.ions:
        out.setdefault(ion.label, LaserField.along_axis(ion, signs.get(ion.label, 1.0)))
    return out


@dataclass(frozen=True)
class CouplingEntry:
    eta: float
    eta_signed: float
    ground_state_extent: float
    rabi: float

    @property
    def sideband_rabi(self) -> float:
        return self.eta * self.rabi


@dataclass(frozen=True)
class CouplingTable:
    modes: ModeTable
    lasers: Mapping[str, LaserField]
    entries: Mapping[tuple[int, str], CouplingEntry]

    def entry(self, ion: int, mode: str) -> CouplingEntry:
        return self.entries[(ion, mode)]

    def eta(self, ion: int, mode: str) -> float:
        return self.entries[(ion, mode)].eta

    def etas(self, mode: str, signed: bool = False) -> np.ndarray:
        n = self.modes.config.n_ions
        attr = "eta_signed" if signed else "eta"
        return np.array([getattr(self.entries[(j, mode)], attr) for j in range(n)])

    def sideband_rabis(self, mode: str) -> np.ndarray:
        n = self.modes.config.n_ions
        return np.array([self.entries[(j, mode)].sideband_rabi for j in range(n)])


def ground_state_extent(mass: float, frequency: float) -> float:
    """z_RMS = sqrt(hbar / (2 m w))."""
    return math.sqrt(CONSTANTS.hbar / (2 * mass * frequency))


def lamb_dicke(modes: ModeTable, lasers: Mapping[str, LaserField],
               rabi_reference: float | None = None) -> CouplingTable:
    """Lamb-Dicke parameter eta_{j,beta} = k_j z_RMS(m_j, w_beta) b_{j,beta}.

    Parameters
    ----------
    modes : ModeTable
    lasers : mapping of species label to LaserField
        Every species present in the chain needs an entry.
    rabi_reference : float, optional
        Carrier Rabi frequency (rad/s) at unit intensity for a species with
        unit relative matrix element. Used for lasers without an explicit
        ``carrier_rabi``.
    """
    ions = modes.config.ions
    missing = sorted({ion.label for ion in ions} - set(lasers))
    if missing:
        raise KeyError(f"no laser given for species {', '.join(missing)}")
    entries = {}
    for j, ion in enumerate(ions):
        laser = lasers[ion.label]
        rabi = laser.rabi(rabi_reference)
        for mode in modes:
            z = ground_state_extent(ion.mass, mode.frequency)
            signed = laser.wavevector_projection * z * float(mode.eigenvector[j])
            entries[(j, mode.label)] = CouplingEntry(abs(signed), signed, z, rabi)
    worst = max(e.eta for e in entries.values())
    if worst > LAMB_DICKE_WARN:
        warnings.warn(f"Lamb-Dicke parameter {worst:.3f} exceeds {LAMB_DICKE_WARN}; "
                      "the Lamb-Dicke expansion is unreliable", LambDickeWarning, stacklevel=2)
    return CouplingTable(modes, dict(lasers), entries)


def equalize_sideband_rabi(coupling: CouplingTable, mode: str, target_product: float,
                           rabi_reference: float,
                           ions: Sequence[int] | None = None) -> dict[str, float]:
    """Relative intensities giving eta_j Omega_j = ``target_product`` on ``mode``.

    Omega_j = rabi_reference * sqrt(I_j) * M_j, so I_j = (target / (eta_j Omega_ref M_j))^2.
    ``ions`` restricts the condition to the driven ions (default: all).
    Ions of one species share a beam, so they must have equal |eta|.
    """
    chain = coupling.modes.config.ions
    ions = range(len(chain)) if ions is None else ions
    out: dict[str, float] = {}
    for j in ions:
        species = chain[j]
        eta = coupling.eta(j, mode)
        if eta <= 1e-15:
            raise DecoupledIonError(f"ion {j} ({species.label}) does not couple to mode {mode}")
        intensity = (target_product / (eta * rabi_reference * species.quad_matrix_element_rel)) ** 2
        prev = out.get(species.label)
        if prev is not None and not math.isclose(prev, intensity, rel_tol=1e-9):
            raise ValueError(f"{species.label} ions need different intensities on mode {mode}; "
                             "a shared beam cannot equalize them")
        out[species.label] = intensity
    return out


def with_intensities(lasers: Mapping[str, LaserField], intensities: Mapping[str, float]) -> dict[str, LaserField]:
    """Copy of ``lasers`` with new relative intensities (explicit Rabi values cleared)."""
    return {
        label: replace(laser, intensity_rel=intensities[label], carrier_rabi=None)
        if label in intensities else laser
        for label, laser in lasers.items()
    }
