"""Sideband spectra, near-degeneracies and the 2xIP error budget."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .coupling import CouplingTable, lamb_dicke, parallel_lasers
from .crystal import MODE_NAMES, CrystalConfig, ModeTable, normal_modes
from .errors import ChainShapeError
from .species import IonSpecies, lookup

DEFAULT_WINDOW = 2 * math.pi * 50e3
DEFAULT_POOL = ("40Ca+", "43Ca+", "88Sr+", "86Sr+")
TABLE_REFERENCE_FREQUENCY = 2 * math.pi * 660e3


@dataclass(frozen=True)
class SidebandLine:
    """One line of the motional sideband spectrum.

    ``combination`` holds (mode label, signed order) pairs, e.g.
    ``(("IP", 2),)`` for the second IP sideband or ``(("OOP", 1), ("IP", -1))``
    for the difference line. ``offset`` is the signed detuning from the
    carrier in rad/s.
    """

    combination: tuple[tuple[str, int], ...]
    offset: float
    order: int
    strength: float

    @property
    def name(self) -> str:
        """"IP", "2xIP", "IP+OOP", "OOP-IP"; a leading "-" marks the red side."""
        parts = []
        for label, k in self.combination:
            text = label if abs(k) == 1 else f"{abs(k)}x{label}"
            if parts:
                text = ("-" if k < 0 else "+") + text
            parts.append(text)
        text = "".join(parts)
        return text if self.offset >= 0 else f"-{text}"

    @property
    def modes(self) -> frozenset[str]:
        return frozenset(label for label, _ in self.combination)

    def is_first_order(self, label: str | None = None) -> bool:
        return self.order == 1 and (label is None or self.combination[0][0] == label)


@dataclass(frozen=True)
class SidebandSpectrum:
    modes: ModeTable
    lines: tuple[SidebandLine, ...]

    def __iter__(self):
        return iter(self.lines)

    def __len__(self):
        return len(self.lines)

    def positive(self) -> tuple[SidebandLine, ...]:
        return tuple(line for line in self.lines if line.offset > 0)

    def find(self, name: str) -> SidebandLine:
        for line in self.lines:
            if line.name == name:
                return line
        raise KeyError(name)


def sideband_spectrum(modes: ModeTable, coupling: CouplingTable, max_order: int = 2) -> SidebandSpectrum:
    """All first- and (optionally) second-order sideband lines, sorted by offset.

    Strengths are proxies: the largest single-ion |eta| for first-order lines
    and the largest single-ion product of the two |eta|'s for second-order ones.
    """
    if max_order not in (1, 2):
        raise ValueError("max_order must be 1 or 2")
    etas = {m.label: coupling.etas(m.label) for m in modes}
    freqs = {m.label: m.frequency for m in modes}
    raw: list[tuple[tuple[tuple[str, int], ...], float, int, float]] = []
    for m in modes:
        raw.append((((m.label, 1),), m.frequency, 1, float(etas[m.label].max())))
    if max_order == 2:
        for m in modes:
            raw.append((((m.label, 2),), 2 * m.frequency, 2, float((etas[m.label] ** 2).max())))
        for a, b in combinations(modes.labels, 2):
            s = float((etas[a] * etas[b]).max())
            raw.append((((a, 1), (b, 1)), freqs[a] + freqs[b], 2, s))
            hi, lo = (a, b) if freqs[a] >= freqs[b] else (b, a)
            diff = freqs[hi] - freqs[lo]
            if diff > 0:
                raw.append((((hi, 1), (lo, -1)), diff, 2, s))
    lines = []
    for combo, offset, order, strength in raw:
        lines.append(SidebandLine(combo, offset, order, strength))
        lines.append(SidebandLine(combo, -offset, order, strength))
    lines.sort(key=lambda line: (line.offset, line.order, line.combination))
    return SidebandSpectrum(modes, tuple(lines))


@dataclass(frozen=True)
class NearDegeneracy:
    lines: tuple[SidebandLine, SidebandLine]
    gap: float
    gate_relevant: bool

    @property
    def names(self) -> frozenset[str]:
        return frozenset(line.name for line in self.lines)


def find_near_degeneracies(spectrum: SidebandSpectrum, window: float = DEFAULT_WINDOW,
                           target: str | None = None, both_sides: bool = False) -> list[NearDegeneracy]:
    """Line pairs closer than ``window`` (rad/s), sorted by gap.

    Only the upper half of the (mirror-symmetric) spectrum is searched unless
    ``both_sides``. A pair is gate-relevant when it contains the first-order
    line of ``target`` (any first-order line if no target is named).
    """
    if not window > 0:
        raise ValueError("window must be positive")
    pool = spectrum.lines if both_sides else spectrum.positive()
    out = []
    for a, b in combinations(pool, 2):
        gap = abs(b.offset - a.offset)
        if gap < window:
            relevant = a.is_first_order(target) or b.is_first_order(target)
            out.append(NearDegeneracy((a, b), gap, relevant))
    out.sort(key=lambda d: (d.gap, sorted(d.names)))
    return out


def _detuned_integral(delta: float, t_g: float) -> complex:
    """int_0^t_g exp(-i delta t) dt = t_g exp(-i delta t_g / 2) sinc(delta t_g / 2)."""
    x = 0.5 * delta * t_g
    return t_g * cmath.exp(-1j * x) * float(np.sinc(x / math.pi))


def displacement_alpha(coupling: CouplingTable, rabi: Sequence[float], drive_freq: float,
                       collision_freq: float, t_g: float, mode: str = "IP",
                       ions: Sequence[int] | None = None) -> complex:
    """Off-resonant displacement of ``mode`` driven at its second sideband.

    alpha = 1/2 (sum_j eta_{j,mode}^2 Omega_j) int_0^t_g exp(-i (w - w_c) t) dt,
    where ``drive_freq`` w is the bichromatic beat frequency, ``collision_freq``
    w_c the second-order line (2 w_mode) and ``rabi`` the carrier Rabi
    frequencies (rad/s) of the driven ions.
    """
    if not t_g > 0:
        raise ValueError("t_g must be positive")
    ions = range(len(rabi)) if ions is None else ions
    etas = coupling.etas(mode)
    drive = 0.5 * sum(etas[j] ** 2 * r for j, r in zip(ions, rabi))
    return drive * _detuned_integral(drive_freq - collision_freq, t_g)


def displacement_alpha_quad(coupling: CouplingTable, rabi: Sequence[float], drive_freq: float,
                            collision_freq: float, t_g: float, mode: str = "IP",
                            ions: Sequence[int] | None = None) -> complex:
    """:func:`displacement_alpha` by numerical quadrature (for cross-checks)."""
    ions = range(len(rabi)) if ions is None else ions
    etas = coupling.etas(mode)
    drive = 0.5 * sum(etas[j] ** 2 * r for j, r in zip(ions, rabi))
    x = (drive_freq - collision_freq) * t_g
    # integrate over s = t / t_g in [0, 1]
    opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12)
    re = quad(lambda s: math.cos(x * s), 0, 1, **opts)[0]
    im = quad(lambda s: -math.sin(x * s), 0, 1, **opts)[0]
    return drive * t_g * complex(re, im)


@dataclass(frozen=True)
class ErrorBudget:
    """Error from driving the 2xIP line while gating on OOP.

    ``epsilon`` = ``displacement_sq`` * (``nbar`` + 1/2).
    """

    crystal: CrystalConfig
    gate_mode: str
    detuning: float
    gate_time: float
    loops: int
    collision_line: str
    gap: float
    alpha: complex
    displacement_sq: float
    nbar: float
    epsilon: float
    etas: dict = field(default_factory=dict)
    rabis: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {
            "crystal": self.crystal.name,
            "gate_mode": self.gate_mode,
            "detuning_hz": self.detuning / (2 * math.pi),
            "gate_time_us": self.gate_time * 1e6,
            "loops": self.loops,
            "collision_line": self.collision_line,
            "gap_hz": self.gap / (2 * math.pi),
            "alpha_re": self.alpha.real,
            "alpha_im": self.alpha.imag,
            "displacement_sq": self.displacement_sq,
            "nbar": self.nbar,
            "epsilon": self.epsilon,
            "etas": {k: list(v) for k, v in self.etas.items()},
            "rabi_hz": [r / (2 * math.pi) for r in self.rabis],
        }


def _require_dual_pair(crystal: CrystalConfig):
    if crystal.n_ions != 2:
        raise ChainShapeError(f"2xIP budget needs a two-ion chain, got {crystal.n_ions} ions")
    a, b = crystal.ions
    if a.label == b.label:
        raise ChainShapeError(f"2xIP budget needs two different species, got {crystal.name}")


def rescale_to_ip(crystal: CrystalConfig, omega_ip: float) -> tuple[CrystalConfig, ModeTable]:
    """Crystal with its potential rescaled so that w_IP = ``omega_ip``."""
    modes = normal_modes(crystal)
    config = crystal.scaled(omega_ip / modes.mode("IP").frequency)
    return config, normal_modes(config)


def error_2xIP(crystal: CrystalConfig, omega_IP: float, nbar: float = 0.0, loops: int = 1,
               detuning: float | None = None) -> ErrorBudget:
    """Error of a calibrated OOP gate from off-resonant driving of the 2xIP line.

    The trap is rescaled to put the IP mode at ``omega_IP``. The OOP drive is
    calibrated (|eta_j| Omega_j = delta / (4 sqrt K)) with axis-parallel beams.
    ``detuning`` None is the worst case: the beat note sits exactly on 2 w_IP,
    so delta equals the gap 2 w_IP - w_OOP and
    alpha = (pi sqrt(K) / 4) sum_j eta_{j,IP}^2 / eta_{j,OOP}.
    ``nbar`` is the mean occupation of the IP mode.
    """
    _require_dual_pair(crystal)
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if loops < 1:
        raise ValueError("loops must be a positive integer")
    config, modes = rescale_to_ip(crystal, omega_IP)
    coupling = lamb_dicke(modes, parallel_lasers(modes))
    w_ip, w_oop = modes.mode("IP").frequency, modes.mode("OOP").frequency
    gap = 2 * w_ip - w_oop
    if detuning is None:
        detuning = abs(gap)
    if not detuning > 0:
        raise ValueError("detuning must be positive")
    t_g = 2 * math.pi * loops / detuning
    drive = w_oop + math.copysign(detuning, gap)
    rabis = tuple(detuning / (4 * math.sqrt(loops) * coupling.eta(j, "OOP")) for j in range(2))
    alpha = displacement_alpha(coupling, rabis, drive, 2 * w_ip, t_g)
    d2 = abs(alpha) ** 2
    return ErrorBudget(
        crystal=config, gate_mode="OOP", detuning=detuning, gate_time=t_g, loops=loops,
        collision_line="2xIP", gap=gap, alpha=alpha, displacement_sq=d2, nbar=nbar,
        epsilon=d2 * (nbar + 0.5),
        etas={label: tuple(float(x) for x in coupling.etas(label)) for label in modes.labels},
        rabis=rabis,
    )


def worst_case_epsilon(eta_ip: Sequence[float], eta_oop: Sequence[float], nbar: float = 0.0,
                       loops: int = 1) -> float:
    """(pi^2 K / 16) (nbar + 1/2) (sum_j eta_{j,IP}^2 / eta_{j,OOP})^2."""
    s = sum(a * a / b for a, b in zip(eta_ip, eta_oop))
    return math.pi**2 * loops / 16 * (nbar + 0.5) * s * s


# -- isotope scan -------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    configuration: str
    mode: str
    ratio_ref: float
    ratio_ip: float
    b: tuple[float, float]
    eta: tuple[float, float]
    gap: float
    nearest: str

    @property
    def mode_name(self) -> str:
        return MODE_NAMES.get(self.mode, self.mode)


@dataclass(frozen=True)
class ScanTable:
    species: tuple[str, str]
    rows: tuple[ScanRow, ...]
    reference_frequency: float

    def configurations(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.configuration not in seen:
                seen.append(r.configuration)
        return seen

    def min_gaps(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.rows:
            out[r.configuration] = min(out.get(r.configuration, math.inf), r.gap)
        return out

    def ranked(self) -> list[tuple[str, float]]:
        """Configurations by decreasing minimum spectral gap."""
        return sorted(self.min_gaps().items(), key=lambda kv: -kv[1])


def _pairs(pool: Sequence[IonSpecies]) -> list[tuple[IonSpecies, IonSpecies]]:
    """(heavy-element isotope, light-element isotope) pairs in pool order."""
    by_element: dict[str, list[IonSpecies]] = {}
    for s in pool:
        by_element.setdefault(s.element, []).append(s)
    elements = sorted(by_element, key=lambda e: -max(s.mass for s in by_element[e]))
    if len(elements) == 1:
        group = by_element[elements[0]]
        return [(a, a) for a in group]
    out = []
    for i, heavy in enumerate(elements):
        for light in elements[i + 1:]:
            for a in by_element[heavy]:
                for b in by_element[light]:
                    out.append((a, b))
    return out


def _row_gaps(modes: ModeTable, coupling: CouplingTable) -> dict[str, tuple[float, str]]:
    spectrum = sideband_spectrum(modes, coupling, 2)
    lines = spectrum.positive()
    out = {}
    for m in modes:
        best, name = math.inf, ""
        for line in lines:
            if line.is_first_order(m.label):
                continue
            d = abs(line.offset - m.frequency)
            if d < best:
                best, name = d, line.name
        out[m.label] = (best, name)
    return out


def _amplitude(modes: ModeTable, coupling: CouplingTable, mode: str, species: IonSpecies,
               skip: int | None = None) -> tuple[float, float]:
    ions = modes.config.ions
    j = next(k for k, s in enumerate(ions) if s.label == species.label and k != skip)
    return float(modes.mode(mode).eigenvector[j]), float(coupling.eta(j, mode))


def scan_configuration(config: CrystalConfig, first: IonSpecies, second: IonSpecies) -> list[ScanRow]:
    """Table rows of one configuration, amplitudes of ``first`` then ``second``.

    Amplitudes come from the first ion of each species in chain order (for a
    same-species chain, ions 0 and 1). Two-ion amplitudes are magnitudes.
    """
    modes = normal_modes(config)
    coupling = lamb_dicke(modes, parallel_lasers(modes))
    w_ref = config.single_ion_frequency(first)
    w_ip = modes.mode("IP").frequency
    gaps = _row_gaps(modes, coupling)
    rows = []
    for m in modes:
        b1, e1 = _amplitude(modes, coupling, m.label, first)
        skip = next(k for k, s in enumerate(config.ions) if s.label == first.label) \
            if first.label == second.label else None
        b2, e2 = _amplitude(modes, coupling, m.label, second, skip)
        if config.n_ions == 2:
            b1, b2 = abs(b1), abs(b2)
        b1, b2 = (0.0 if abs(b) < 1e-12 else b for b in (b1, b2))
        gap, nearest = gaps[m.label]
        rows.append(ScanRow(config.name, m.label, m.frequency / w_ref, m.frequency / w_ip,
                            (b1, b2), (e1, e2), gap, nearest))
    return rows


def isotope_scan(pool: Iterable[str | IonSpecies] = DEFAULT_POOL,
                 configurations: Sequence[str] = ("two", "three"),
                 reference_frequency: float = TABLE_REFERENCE_FREQUENCY) -> ScanTable:
    """Mode parameters and Lamb-Dicke parameters over isotope combinations.

    For each (heavy, light) isotope pair: the two-ion light-heavy chain, then
    the symmetric light-heavy-light and heavy-light-heavy chains. Frequencies
    are normalized to the lone-ion frequency of the heavy isotope, which is
    set to ``reference_frequency``; the first amplitude column is the heavy
    species. ``gap`` is the distance from each mode's line to the nearest other
    first- or second-order line.
    """
    species = [s if isinstance(s, IonSpecies) else lookup(s) for s in pool]
    if not species:
        raise ValueError("species pool is empty")
    unknown = set(configurations) - {"two", "three"}
    if unknown:
        raise ValueError(f"unknown configuration kinds {sorted(unknown)}")
    rows: list[ScanRow] = []
    heads = None
    for heavy, light in _pairs(species):
        heads = heads or (heavy.element, light.element)
        chains = []
        if "two" in configurations:
            chains.append((light, heavy))
        if "three" in configurations:
            chains.append((light, heavy, light))
            if light.label != heavy.label:
                chains.append((heavy, light, heavy))
        for chain in chains:
            config = CrystalConfig(chain, heavy, reference_frequency)
            rows.extend(scan_configuration(config, heavy, light))
    return ScanTable(heads, tuple(rows), reference_frequency)


# -- mode advisor -------------------------------------------------------------

@dataclass(frozen=True)
class Recommendation:
    mode: str
    gate_time: float
    detuning: float
    margin: float
    nearest: str
    min_eta: float
    decoupled: tuple[int, ...]
    epsilon: float | None
    within_window: bool

    @property
    def rejected(self) -> bool:
        return bool(self.decoupled)

    @property
    def flagged(self) -> bool:
        return not self.rejected and not self.within_window


def mode_advisor(crystal: CrystalConfig, gate_times: Iterable[float], window: float = DEFAULT_WINDOW,
                 driven: Sequence[int] | None = None, nbar: float = 0.0) -> list[Recommendation]:
    """Rank (mode, gate time) choices by spectral margin, then by min |eta|.

    The bichromatic beat sits at w_mode + 2 pi / t_g. ``margin`` is its distance
    to the nearest other first- or second-order line; ``within_window`` means
    margin >= ``window``. Modes leaving a driven ion uncoupled are rejected
    and sorted last. For two-ion dual-species OOP gates the 2xIP error is
    attached.
    """
    if not window > 0:
        raise ValueError("window must be positive")
    gate_times = [float(t) for t in gate_times]
    if not gate_times or any(t <= 0 for t in gate_times):
        raise ValueError("gate times must be positive")
    modes = normal_modes(crystal)
    coupling = lamb_dicke(modes, parallel_lasers(modes))
    if driven is None:
        driven = (0, 1) if crystal.n_ions >= 2 else (0,)
    lines = sideband_spectrum(modes, coupling, 2).positive()
    dual_pair = crystal.n_ions == 2 and crystal.ions[0].label != crystal.ions[1].label
    out = []
    for m in modes:
        etas = [coupling.eta(j, m.label) for j in driven]
        decoupled = tuple(j for j, e in zip(driven, etas) if e <= 1e-12)
        for t_g in gate_times:
            delta = 2 * math.pi / t_g
            beat = m.frequency + delta
            margin, nearest = math.inf, ""
            for line in lines:
                if line.is_first_order(m.label):
                    continue
                d = abs(line.offset - beat)
                if d < margin:
                    margin, nearest = d, line.name
            eps = None
            if dual_pair and m.label == "OOP":
                eps = float(error_2xIP(crystal, modes.mode("IP").frequency, nbar,
                                       detuning=delta).epsilon)
            out.append(Recommendation(m.label, t_g, delta, margin, nearest, min(etas),
                                      decoupled, eps, margin >= window))
    out.sort(key=lambda r: (r.rejected, -r.margin, -r.min_eta))
    return out


def oracle_2xIP_infidelity(crystal: CrystalConfig, omega_IP: float, n_max: tuple[int, int] = (14, 18),
                           rtol: float = 1e-8, atol: float = 1e-10) -> float:
    """Worst-case gate error from the full Hamiltonian with both modes simulated.

    Runs the calibrated worst-case OOP gate of :func:`error_2xIP` (n_bar = 0)
    with the IP mode as a spectator and returns 1 - F against the target Bell
    state. ``n_max`` gives the (OOP, IP) truncations; the IP mode is squeezed
    by the two-phonon drive and needs the larger space.
    """
    from .msgate import FockOracle, GateParams, MotionalSpec, SpectatorMode

    b = error_2xIP(crystal, omega_IP)
    _, modes = rescale_to_ip(crystal, omega_IP)
    coupling = lamb_dicke(modes, parallel_lasers(modes))
    params = GateParams("OOP", modes.mode("OOP").frequency, b.detuning,
                        tuple(coupling.etas("OOP", signed=True)), b.rabis)
    spectator = SpectatorMode(modes.mode("IP").frequency, tuple(coupling.etas("IP", signed=True)),
                              MotionalSpec(n_max[1]))
    oracle = FockOracle(params, MotionalSpec(n_max[0]), "full", (spectator,), rtol=rtol, atol=atol)
    state = oracle.solve(params.gate_time).state(params.gate_time)
    return 1.0 - state.fidelity(params.bell_phase)
