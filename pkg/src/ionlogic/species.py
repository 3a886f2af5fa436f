"""Ion species registry and physical constants.

Masses default to integer mass number times the atomic mass unit. Precise
isotopic ion masses are available through :meth:`IonSpecies.with_precise_mass`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from types import MappingProxyType

import scipy.constants as sc

from .errors import UnknownSpeciesError


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    atomic_mass_unit: float
    vacuum_permittivity: float
    elementary_charge: float

    @property
    def coulomb_constant(self) -> float:
        """q^2 / (4 pi eps0) for a singly charged ion, in J m."""
        return self.elementary_charge**2 / (4 * math.pi * self.vacuum_permittivity)


CONSTANTS = PhysicalConstants(
    hbar=sc.hbar,
    atomic_mass_unit=sc.physical_constants["atomic mass constant"][0],
    vacuum_permittivity=sc.epsilon_0,
    elementary_charge=sc.e,
)


@dataclass(frozen=True)
class IonSpecies:
    """A singly charged ion with an optical S-D qubit.

    Attributes
    ----------
    label : str
        Registry key such as ``"40Ca+"``.
    element : str
        Chemical symbol, used to group isotopes.
    mass_number : int
    qubit_wavelength : float
        Wavelength of the qubit transition in meters.
    quad_matrix_element_rel : float
        S->D quadrupole matrix element relative to Sr+.
    heating_rate_ref : float or None
        Measured single-ion heating rate in quanta/s (informational).
    heating_rate_ref_frequency : float or None
        Angular trap frequency at which ``heating_rate_ref`` was measured.
    mass_override : float or None
        Mass in kg replacing the integer-mass default.
    """

    label: str
    element: str
    mass_number: int
    qubit_wavelength: float
    quad_matrix_element_rel: float
    heating_rate_ref: float | None = None
    heating_rate_ref_frequency: float | None = None
    mass_override: float | None = None

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"{self.label}: mass must be positive")
        if not self.qubit_wavelength > 0:
            raise ValueError(f"{self.label}: qubit_wavelength must be positive")
        if not self.quad_matrix_element_rel > 0:
            raise ValueError(f"{self.label}: quad_matrix_element_rel must be positive")

    @property
    def mass(self) -> float:
        if self.mass_override is not None:
            return self.mass_override
        return self.mass_number * CONSTANTS.atomic_mass_unit

    @property
    def wavevector(self) -> float:
        """Magnitude of the qubit-laser wavevector, 2 pi / lambda (rad/m)."""
        return 2 * math.pi / self.qubit_wavelength

    def with_precise_mass(self) -> "IonSpecies":
        """Copy of this species using the tabulated isotopic ion mass."""
        try:
            atomic = _ATOMIC_MASSES_U[self.label]
        except KeyError:
            raise UnknownSpeciesError(self.label) from None
        ion_mass_u = atomic - sc.m_e / CONSTANTS.atomic_mass_unit
        return replace(self, mass_override=ion_mass_u * CONSTANTS.atomic_mass_unit)


# AME2016 neutral-atom masses in u.
_ATOMIC_MASSES_U = {
    "40Ca+": 39.962590863,
    "43Ca+": 42.95876644,
    "86Sr+": 85.90926073,
    "88Sr+": 87.90561226,
}

_CA_WAVELENGTH = 729e-9
_SR_WAVELENGTH = 674e-9
_CA_QUAD_REL = 0.70

_REGISTRY = MappingProxyType(
    {
        "40Ca+": IonSpecies(
            "40Ca+", "Ca", 40, _CA_WAVELENGTH, _CA_QUAD_REL,
            heating_rate_ref=8.6, heating_rate_ref_frequency=2 * math.pi * 1.94e6,
        ),
        "43Ca+": IonSpecies("43Ca+", "Ca", 43, _CA_WAVELENGTH, _CA_QUAD_REL),
        "86Sr+": IonSpecies("86Sr+", "Sr", 86, _SR_WAVELENGTH, 1.0),
        "88Sr+": IonSpecies("88Sr+", "Sr", 88, _SR_WAVELENGTH, 1.0),
    }
)


def registered_labels() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def lookup(label: str) -> IonSpecies:
    """Return the registry entry for ``label``.

    A missing trailing ``+`` is tolerated (``"88Sr"`` resolves to ``"88Sr+"``).
    """
    key = label.strip()
    if not key.endswith("+"):
        key += "+"
    try:
        return _REGISTRY[key]
    except KeyError:
        raise UnknownSpeciesError(label) from None


def mass_ratio(heavy: IonSpecies, light: IonSpecies) -> float:
    """m_heavy / m_light. Pass operands in the order the caller needs."""
    return heavy.mass / light.mass
