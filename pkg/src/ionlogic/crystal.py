"""Axial equilibrium and normal modes of linear mixed-species ion chains.

Positions are solved in the dimensionless length unit

    l^3 = q^2 / (4 pi eps0 m_ref w_ref^2)

where the axial curvature k = m_ref w_ref^2 is shared by every ion regardless
of mass. The numerical route (``normal_modes``) is validated against the
closed-form two-ion and symmetric three-ion expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ChainShapeError, ConvergenceError
from .species import CONSTANTS, IonSpecies, lookup

MAX_IONS = 16
GRADIENT_TOL = 1e-12

# Display names used by the table emitters.
MODE_NAMES = {
    "IP": "In-phase",
    "OOP": "Out-of-phase",
    "Stretch": "Stretch",
    "Alt": "Alternating",
}


@dataclass(frozen=True)
class CrystalConfig:
    """An ordered chain of ions in a shared axial potential.

    ``reference_frequency`` is the angular axial frequency a lone
    ``reference_species`` ion would have in the same potential.
    """

    ions: tuple[IonSpecies, ...]
    reference_species: IonSpecies
    reference_frequency: float

    def __post_init__(self):
        object.__setattr__(self, "ions", tuple(self.ions))
        if not 1 <= len(self.ions) <= MAX_IONS:
            raise ChainShapeError(
                f"chain length must be between 1 and {MAX_IONS}, got {len(self.ions)}"
            )
        if not self.reference_frequency > 0:
            raise ValueError("reference_frequency must be positive")

    @classmethod
    def from_labels(cls, labels: Sequence[str], reference: str,
                    reference_frequency: float) -> "CrystalConfig":
        return cls(tuple(lookup(s) for s in labels), lookup(reference), reference_frequency)

    @property
    def n_ions(self) -> int:
        return len(self.ions)

    @property
    def name(self) -> str:
        return "-".join(ion.label for ion in self.ions)

    @property
    def curvature(self) -> float:
        """Axial spring constant k in N/m."""
        return self.reference_species.mass * self.reference_frequency**2

    @property
    def length_scale(self) -> float:
        return (CONSTANTS.coulomb_constant / self.curvature) ** (1.0 / 3.0)

    def single_ion_frequency(self, species: IonSpecies) -> float:
        return self.reference_frequency * math.sqrt(self.reference_species.mass / species.mass)

    def scaled(self, factor: float) -> "CrystalConfig":
        return CrystalConfig(self.ions, self.reference_species, self.reference_frequency * factor)

    def reversed(self) -> "CrystalConfig":
        return CrystalConfig(self.ions[::-1], self.reference_species, self.reference_frequency)

    def is_symmetric_three(self) -> bool:
        return self.n_ions == 3 and self.ions[0].mass == self.ions[2].mass


@dataclass(frozen=True)
class Mode:
    label: str
    frequency: float
    eigenvector: np.ndarray

    @property
    def name(self) -> str:
        return MODE_NAMES.get(self.label, self.label)


@dataclass(frozen=True)
class ModeTable:
    config: CrystalConfig
    modes: tuple[Mode, ...]
    equilibrium_positions: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes])

    @property
    def eigenvectors(self) -> np.ndarray:
        """Matrix with one column per mode."""
        return np.column_stack([m.eigenvector for m in self.modes])

    def mode(self, label: str) -> Mode:
        for m in self.modes:
            if m.label == label:
                return m
        raise KeyError(f"no mode {label!r} in {self.config.name} (have {self.labels})")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _seed_positions(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    if n == 2:
        u = 0.25 ** (1 / 3)
        return np.array([-u, u])
    if n == 3:
        u = 1.25 ** (1 / 3)
        return np.array([-u, 0.0, u])
    # minimum spacing scales as ~2.018 / n^0.559 (James 1998)
    extent = 2.018 / n**0.559 * (n - 1) * 1.2
    return np.linspace(-extent / 2, extent / 2, n)


def _gradient(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _energy(u: np.ndarray) -> float:
    i, j = np.triu_indices(len(u), 1)
    return 0.5 * float(u @ u) + float(np.sum(1.0 / np.abs(u[i] - u[j])))


def _hessian(u: np.ndarray) -> np.ndarray:
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    h = -2.0 / d**3
    np.fill_diagonal(h, 1.0 - h.sum(axis=1))
    return h


def _solve_dimensionless(n: int, max_iter: int = 100) -> np.ndarray:
    u = _seed_positions(n)
    for _ in range(max_iter):
        g = _gradient(u)
        if np.linalg.norm(g) < GRADIENT_TOL:
            return u
        step = np.linalg.solve(_hessian(u), -g)
        e0, t = _energy(u), 1.0
        while t > 1e-8:
            trial = u + t * step
            if np.all(np.diff(trial) > 0) and _energy(trial) <= e0 + 1e-14 * abs(e0):
                break
            t *= 0.5
        u = trial
    g = np.linalg.norm(_gradient(u))
    if g < GRADIENT_TOL:
        return u
    raise ConvergenceError(f"equilibrium solve for {n} ions did not converge (|grad|={g:.2e})")


def equilibrium_positions(config: CrystalConfig) -> np.ndarray:
    """Axial equilibrium positions in meters, strictly increasing."""
    return _solve_dimensionless(config.n_ions) * config.length_scale


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
        if lead < 0:
            vecs[:, k] = -v
    return vecs


def _order_modes(evals: np.ndarray, evecs: np.ndarray):
    # break (near-)degeneracies by lexicographic eigenvector order
    keys = [(round(float(ev), 10),) + tuple(np.round(-evecs[:, k], 12)) for k, ev in enumerate(evals)]
    order = sorted(range(len(evals)), key=lambda k: keys[k])
    return evals[order], evecs[:, order]


def _mode_labels(config: CrystalConfig) -> list[str]:
    n = config.n_ions
    if n == 1:
        return ["IP"]
    if n == 2:
        return ["IP", "OOP"]
    if config.is_symmetric_three():
        return ["IP", "Stretch", "Alt"]
    return ["IP"] + [f"M{k}" for k in range(2, n + 1)]


def mass_weighted_hessian(config: CrystalConfig, u: np.ndarray | None = None) -> np.ndarray:
    """Hessian divided by sqrt(m_i m_j), in units of w_ref^2."""
    if u is None:
        u = _solve_dimensionless(config.n_ions)
    rel = np.array([ion.mass for ion in config.ions]) / config.reference_species.mass
    return _hessian(u) / np.sqrt(np.outer(rel, rel))


def normal_modes(config: CrystalConfig) -> ModeTable:
    """Axial normal modes from the mass-weighted Hessian at equilibrium."""
    u = _solve_dimensionless(config.n_ions)
    a = mass_weighted_hessian(config, u)
    evals, evecs = np.linalg.eigh(a)
    if np.any(evals <= 0):
        raise ConvergenceError(f"non-positive curvature eigenvalue {evals.min():.3g}")
    evals, evecs = _order_modes(evals, _sign_fix(evecs))
    freqs = config.reference_frequency * np.sqrt(evals)
    modes = tuple(
        Mode(label, float(w), _frozen(evecs[:, k]))
        for k, (label, w) in enumerate(zip(_mode_labels(config), freqs))
    )
    return ModeTable(config, modes, _frozen(u * config.length_scale))


def two_ion_frequency_ratio(mu: float) -> float:
    """w_OOP / w_IP for a two-ion chain with mass ratio ``mu``."""
    r = math.sqrt(1 - mu + mu * mu)
    return math.sqrt((1 + mu + r) / (1 + mu - r))


def two_ion_ip_amplitude(mu_tilde: float) -> float:
    """|b_j,IP| for ion j with mu_tilde = m_i / m_j (i the other ion)."""
    r = math.sqrt(1 - mu_tilde + mu_tilde**2)
    return math.sqrt((1 - mu_tilde + r) / (2 * r))


def closed_form_two_ion(first: IonSpecies, second: IonSpecies, reference_frequency: float,
                        reference_species: IonSpecies | None = None) -> ModeTable:
    """Two-ion modes from closed-form expressions.

    Ions are given in chain order. ``reference_frequency`` is the single-ion
    frequency of ``reference_species`` (default: the heavier ion).
    """
    heavy, light = (first, second) if first.mass >= second.mass else (second, first)
    ref = reference_species or heavy
    config = CrystalConfig((first, second), ref, reference_frequency)
    mu = heavy.mass / light.mass
    w_heavy = config.single_ion_frequency(heavy)
    w_ip = w_heavy * math.sqrt(1 + mu - math.sqrt(1 - mu + mu * mu))
    w_oop = w_ip * two_ion_frequency_ratio(mu)

    b_ip = [two_ion_ip_amplitude(second.mass / first.mass),
            two_ion_ip_amplitude(first.mass / second.mass)]
    b_oop = [math.sqrt(1 - b_ip[0] ** 2), -math.sqrt(1 - b_ip[1] ** 2)]
    d = 0.25 ** (1 / 3) * config.length_scale
    return ModeTable(
        config,
        (Mode("IP", w_ip, _frozen(b_ip)), Mode("OOP", w_oop, _frozen(b_oop))),
        _frozen([-d, d]),
    )


def closed_form_three_ion_symmetric(outer: IonSpecies, center: IonSpecies,
                                    reference_frequency: float,
                                    reference_species: IonSpecies | None = None) -> ModeTable:
    """Modes of an outer-center-outer chain from closed-form expressions.

    Uses mu_tilde = m_outer / m_center and the single-ion frequency of the
    outer species. ``reference_species`` defaults to the heavier species.
    """
    ref = reference_species or (outer if outer.mass >= center.mass else center)
    config = CrystalConfig((outer, center, outer), ref, reference_frequency)
    w_i = config.single_ion_frequency(outer)
    mu_t = outer.mass / center.mass
    inv = 1.0 / mu_t
    root = math.sqrt(441 - 34 * inv + 169 * inv * inv)
    r_ip = 13 / 10 + (21 - root) / (10 * inv)
    r_alt = 13 / 10 + (21 + root) / (10 * inv)

    def sym_vector(r2):
        v = np.array([1.0, (13 - 5 * r2) / (8 * math.sqrt(mu_t)), 1.0])
        return v / np.linalg.norm(v)

    modes = (
        Mode("IP", w_i * math.sqrt(r_ip), _frozen(sym_vector(r_ip))),
        Mode("Stretch", w_i * math.sqrt(3), _frozen(np.array([1.0, 0.0, -1.0]) / math.sqrt(2))),
        Mode("Alt", w_i * math.sqrt(r_alt), _frozen(sym_vector(r_alt))),
    )
    u = 1.25 ** (1 / 3) * config.length_scale
    return ModeTable(config, modes, _frozen([-u, 0.0, u]))


def closed_form_modes(config: CrystalConfig) -> ModeTable:
    """Dispatch to the closed form matching ``config``'s shape."""
    if config.n_ions == 2:
        return closed_form_two_ion(*config.ions, config.reference_frequency,
                                   config.reference_species)
    if config.is_symmetric_three():
        return closed_form_three_ion_symmetric(config.ions[0], config.ions[1],
                                               config.reference_frequency,
                                               config.reference_species)
    raise ChainShapeError(f"no closed form for {config.name}")
