"""Command-line interface: ``python -m ionlogic <command>``.

All ``*_hz`` configuration fields are ordinary (non-angular) frequencies;
conversion to rad/s happens here. Exit codes: 0 success, 2 configuration or
validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import budget as bud
from .coupling import LaserField, lamb_dicke
from .crystal import CrystalConfig, normal_modes
from .errors import NumericalError
from .msgate import GateParams, MotionalSpec, Ramp, calibrate_gate, simulate_gate
from .species import lookup

TWO_PI = 2 * math.pi

DEFAULTS = {
    # reference_species None means the heaviest ion in the chain
    "crystal": {"ions": ["40Ca+", "88Sr+"], "reference_species": None, "reference_frequency_hz": 660e3},
    "lasers": {},
    "gate": {"mode": "IP", "gate_time_us": None, "detuning_hz": None, "loops": 1,
             "ramp_fraction": 0.0, "nbar": 0.0, "bell_phase": math.pi / 2, "ions": None,
             "n_points": 201},
    "oracle": {"enabled": False, "n_max": 40, "hamiltonian": "LD"},
    "budget": {"omega_ip_hz": None, "nbar": 0.0, "loops": 1, "detuning_hz": None},
    "scan": {"pool": list(bud.DEFAULT_POOL), "window_khz": 50.0, "gate_times_us": [100.0],
             "omega_ip_hz": None},
    "output": {"format": "table", "path": None},
}
LASER_KEYS = {"wavelength_nm", "wavevector_axis_projection", "intensity_rel", "carrier_rabi_hz"}


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if "config" in raw and isinstance(raw["config"], dict):
            raw = raw["config"]  # a summary JSON echoes its inputs under "config"
        if not isinstance(raw, dict):
            raise ConfigError("configuration root must be a JSON object")
        data = copy.deepcopy(DEFAULTS)
        for section, value in raw.items():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown section {section!r}")
            if not isinstance(value, dict):
                raise ConfigError(f"section {section!r} must be an object")
            if section == "lasers":
                data["lasers"] = copy.deepcopy(value)
                continue
            for key, v in value.items():
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown field {section}.{key}")
                data[section][key] = v
        cfg = cls(data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | None, overrides: list[str] = ()) -> "RunConfig":
        raw: dict = {}
        if path:
            text = Path(path).read_text(encoding="utf-8")
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
            if "config" in raw and isinstance(raw["config"], dict):
                raw = raw["config"]
        for item in overrides:
            _apply_override(raw, item)
        return cls.from_dict(raw)

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    def validate(self):
        c = self["crystal"]
        if not isinstance(c["ions"], list) or not c["ions"]:
            raise ConfigError("crystal.ions must be a non-empty list of species labels")
        for label in c["ions"] + [c["reference_species"] or c["ions"][0]]:
            if not isinstance(label, str):
                raise ConfigError(f"species labels must be strings, got {label!r}")
            lookup(label)
        if not _number(c["reference_frequency_hz"]) or c["reference_frequency_hz"] <= 0:
            raise ConfigError("crystal.reference_frequency_hz must be a positive number")
        for label, laser in self["lasers"].items():
            lookup(label)
            if not isinstance(laser, dict):
                raise ConfigError(f"lasers.{label} must be an object")
            unknown = set(laser) - LASER_KEYS
            if unknown:
                raise ConfigError(f"unknown field lasers.{label}.{sorted(unknown)[0]}")
        g = self["gate"]
        if g["gate_time_us"] is not None and g["detuning_hz"] is not None:
            raise ConfigError("give only one of gate.gate_time_us and gate.detuning_hz")
        for key in ("gate_time_us", "detuning_hz"):
            if g[key] is not None and (not _number(g[key]) or g[key] <= 0):
                raise ConfigError(f"gate.{key} must be a positive number")
        if not isinstance(g["loops"], int) or g["loops"] < 1:
            raise ConfigError("gate.loops must be a positive integer")
        if not _number(g["ramp_fraction"]) or not 0 <= g["ramp_fraction"] < 0.5:
            raise ConfigError("gate.ramp_fraction must lie in [0, 0.5)")
        if self["oracle"]["hamiltonian"] not in ("LD", "full"):
            raise ConfigError("oracle.hamiltonian must be 'LD' or 'full'")
        if self["output"]["format"] not in ("table", "csv", "json"):
            raise ConfigError("output.format must be table, csv or json")
        for label in self["scan"]["pool"]:
            lookup(label)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)


def _number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _apply_override(raw: dict, item: str):
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, text = item.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key}: {p} is not a section")
    node[parts[-1]] = value


# -- model construction ---------------------------------------------------------

def build_crystal(cfg: RunConfig) -> CrystalConfig:
    c = cfg["crystal"]
    ref = c["reference_species"] or max(c["ions"], key=lambda label: lookup(label).mass)
    return CrystalConfig.from_labels(c["ions"], ref, TWO_PI * c["reference_frequency_hz"])


def build_lasers(cfg: RunConfig, crystal: CrystalConfig) -> dict[str, LaserField]:
    out = {}
    for ion in crystal.ions:
        if ion.label in out:
            continue
        spec = cfg["lasers"].get(ion.label, {})
        species = ion
        if spec.get("wavelength_nm") is not None:
            species = replace(ion, qubit_wavelength=float(spec["wavelength_nm"]) * 1e-9)
        rabi = spec.get("carrier_rabi_hz")
        out[ion.label] = LaserField.along_axis(
            species, float(spec.get("wavevector_axis_projection", 1.0)),
            intensity_rel=float(spec.get("intensity_rel", 1.0)),
            carrier_rabi=None if rabi is None else TWO_PI * float(rabi),
        )
    return out


def build_gate(cfg: RunConfig, coupling) -> GateParams:
    g = cfg["gate"]
    loops = g["loops"]
    if g["gate_time_us"] is None and g["detuning_hz"] is None:
        raise ConfigError("the gate command needs gate.gate_time_us or gate.detuning_hz")
    if g["gate_time_us"] is not None:
        t_g = g["gate_time_us"] * 1e-6
    else:
        t_g = loops / g["detuning_hz"]
    nbar = g["nbar"]
    if isinstance(nbar, dict):
        nbar = nbar.get(g["mode"], 0.0)
    ramp = Ramp("sine2", g["ramp_fraction"] * t_g) if g["ramp_fraction"] > 0 else Ramp()
    ions = tuple(g["ions"]) if g["ions"] is not None else None
    return calibrate_gate(coupling, g["mode"], t_g, loops, ions=ions, ramp=ramp,
                          nbar=float(nbar), bell_phase=float(g["bell_phase"]))


# -- rendering ------------------------------------------------------------------

def two_pi(hz: float, unit: str = "kHz") -> str:
    scale = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6}[unit]
    return f"2π×{hz / scale:.3f} {unit}"


def render_table(header: list[str], rows: list[list], stream=None) -> str:
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[k]) for r in cells)) if cells else len(h) for k, h in enumerate(header)]
    bold = _use_color(stream)
    head = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    lines = [f"\033[1m{head}\033[0m" if bold else head, "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _use_color(stream) -> bool:
    stream = stream or sys.stdout
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def write_csv(header: list[str], rows: list[list], fmt: str = ".12g") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, fmt) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _clean(x: float) -> float:
    return 0.0 if abs(x) < 1e-12 else float(x)


# -- commands -------------------------------------------------------------------

def cmd_modes(cfg: RunConfig, args) -> int:
    crystal = build_crystal(cfg)
    modes = normal_modes(crystal)
    coupling = lamb_dicke(modes, build_lasers(cfg, crystal))
    w_ref = crystal.reference_frequency
    w_ip = modes.modes[0].frequency
    header = (["mode", "frequency_hz", "ratio_ref", "ratio_ip"]
              + [f"b_{j}_{ion.label}" for j, ion in enumerate(crystal.ions)]
              + [f"eta_{j}_{ion.label}" for j, ion in enumerate(crystal.ions)])
    rows = []
    for m in modes:
        rows.append([m.name, m.frequency / TWO_PI, m.frequency / w_ref, m.frequency / w_ip]
                    + [_clean(b) for b in m.eigenvector]
                    + [_clean(e) for e in coupling.etas(m.label)])
    fmt = cfg["output"]["format"]
    if fmt == "csv":
        emit(write_csv(header, rows), cfg["output"]["path"])
    elif fmt == "json":
        emit(json.dumps({"config": cfg.to_dict(), "ions": [i.label for i in crystal.ions],
                         "modes": [dict(zip(header, r)) for r in rows]}, indent=2) + "\n",
             cfg["output"]["path"])
    else:
        shown = [[r[0], two_pi(r[1])] + r[2:] for r in rows]
        text = f"{crystal.name}  (ω_ref = {two_pi(w_ref / TWO_PI)})\n"
        emit(text + render_table(["mode", "ω"] + header[2:], shown), cfg["output"]["path"])
    return 0


def table_rows(pool, reference_hz: float, rank_gaps: bool = False):
    table = bud.isotope_scan(pool, reference_frequency=TWO_PI * reference_hz)
    a, b = table.species
    header = ["configuration", "mode", "ratio_ref", "ratio_ip", f"b_{a}", f"b_{b}", f"eta_{a}", f"eta_{b}"]
    if rank_gaps:
        header += ["gap_khz", "nearest_line"]
    rows = []
    for r in table.rows:
        row = [r.configuration, r.mode_name, r.ratio_ref, r.ratio_ip, *r.b, *r.eta]
        if rank_gaps:
            row += [r.gap / TWO_PI / 1e3, r.nearest]
        rows.append(row)
    return table, header, rows


def cmd_table(cfg: RunConfig, args) -> int:
    pool = args.pool or cfg["scan"]["pool"]
    ref = args.reference_hz or cfg["crystal"]["reference_frequency_hz"]
    table, header, rows = table_rows(pool, ref, args.rank_gaps)
    fmt = cfg["output"]["format"]
    if fmt == "csv":
        emit(write_csv(header, rows, ".3f"), cfg["output"]["path"])
    elif fmt == "json":
        out = {"config": cfg.to_dict(), "rows": [dict(zip(header, r)) for r in rows]}
        if args.rank_gaps:
            out["ranking"] = [{"configuration": k, "min_gap_khz": v / TWO_PI / 1e3}
                              for k, v in table.ranked()]
        emit(json.dumps(out, indent=2) + "\n", cfg["output"]["path"])
    else:
        text = render_table(header, rows)
        if args.rank_gaps:
            text += "\nconfigurations by smallest spectral gap:\n"
            for name, gap in sorted(table.min_gaps().items(), key=lambda kv: kv[1]):
                text += f"  {name:24s} {two_pi(gap / TWO_PI)}\n"
        emit(text, cfg["output"]["path"])
    return 0


def run_gate(cfg: RunConfig):
    crystal = build_crystal(cfg)
    modes = normal_modes(crystal)
    coupling = lamb_dicke(modes, build_lasers(cfg, crystal))
    params = build_gate(cfg, coupling)
    o = cfg["oracle"]
    motion = None
    method = "analytic"
    if o["enabled"]:
        method = "oracle"
        motion = MotionalSpec.thermal(params.nbar, n_max=int(o["n_max"]))
    result = simulate_gate(params, n_points=int(cfg["gate"]["n_points"]), motion=motion,
                           method=method, hamiltonian=o["hamiltonian"])
    return params, result


def gate_artifacts(cfg: RunConfig, params: GateParams, result) -> dict[str, str]:
    pops = [[t * 1e6, *map(float, p)] for t, p in zip(result.times, result.populations)]
    fringe = result.parity_fringe
    parity = [[float(c), float(v)] for c, v in zip(fringe.chi, fringe.parity)]
    final = result.final_state
    summary = {
        "config": cfg.to_dict(),
        "calibration": {
            "mode": params.mode,
            "mode_frequency_hz": params.mode_frequency / TWO_PI,
            "detuning_hz": params.detuning / TWO_PI,
            "gate_time_us": params.gate_time * 1e6,
            "etas": list(params.etas),
            "rabi_hz": [r / TWO_PI for r in params.rabis],
        },
        "final_populations": {"P00": final.p00, "P1bright": final.p1bright, "P11": final.p11},
        "contrast": result.contrast,
        "parity_offset": result.fit_offset,
        "fidelity": result.fidelity,
        "zeros_us": [z * 1e6 for z in result.zeros],
    }
    return {
        "populations.csv": write_csv(["times_us", "P00", "P1bright", "P11"], pops),
        "parity.csv": write_csv(["chi_rad", "parity"], parity),
        "summary.json": json.dumps(summary, indent=2) + "\n",
    }


def cmd_gate(cfg: RunConfig, args) -> int:
    params, result = run_gate(cfg)
    files = gate_artifacts(cfg, params, result)
    out_dir = args.out or cfg["output"]["path"]
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (d / name).write_text(text, encoding="utf-8", newline="\n")
    fmt = cfg["output"]["format"]
    if fmt == "json":
        sys.stdout.write(files["summary.json"])
    elif fmt == "csv":
        sys.stdout.write(files["populations.csv"])
    else:
        fin = result.final_state
        rows = [
            ["mode", f"{params.mode} at {two_pi(params.mode_frequency / TWO_PI)}"],
            ["detuning δ", two_pi(params.detuning / TWO_PI)],
            ["gate time", f"{params.gate_time * 1e6:.3f} µs"],
            ["carrier Rabi", ", ".join(two_pi(r / TWO_PI) for r in params.rabis)],
            ["P00 / P1bright / P11", f"{fin.p00:.6f} / {fin.p1bright:.3g} / {fin.p11:.6f}"],
            ["parity contrast", f"{result.contrast:.6f}"],
            ["Bell fidelity", f"{result.fidelity:.6f}"],
            ["P1bright zeros", ", ".join(f"{z * 1e6:.3f} µs" for z in result.zeros) or "none"],
        ]
        sys.stdout.write(render_table(["quantity", "value"], rows))
    return 0


def cmd_budget(cfg: RunConfig, args) -> int:
    crystal = build_crystal(cfg)
    b = cfg["budget"]
    if b["omega_ip_hz"] is not None:
        w_ip = TWO_PI * b["omega_ip_hz"]
    else:
        w_ip = normal_modes(crystal).mode("IP").frequency
    detuning = None if b["detuning_hz"] is None else TWO_PI * b["detuning_hz"]
    result = bud.error_2xIP(crystal, w_ip, float(b["nbar"]), int(b["loops"]), detuning)
    out = {"config": cfg.to_dict(), "budget": result.as_dict()}
    fmt = cfg["output"]["format"]
    if fmt == "table":
        d = out["budget"]
        rows = [
            ["crystal", d["crystal"]],
            ["gate", f"{d['gate_mode']}, δ = {two_pi(d['detuning_hz'])}"],
            ["gap 2ω_IP - ω_OOP", two_pi(d["gap_hz"])],
            ["|α|²", f"{d['displacement_sq']:.6g}"],
            ["n̄_IP", f"{d['nbar']:g}"],
            ["ε_2xIP", f"{d['epsilon']:.6g}"],
        ]
        emit(render_table(["quantity", "value"], rows), cfg["output"]["path"])
    elif fmt == "csv":
        d = out["budget"]
        keys = ["crystal", "gate_mode", "detuning_hz", "gap_hz", "displacement_sq", "nbar", "epsilon"]
        emit(write_csv(keys, [[d[k] for k in keys]]), cfg["output"]["path"])
    else:
        emit(json.dumps(out, indent=2) + "\n", cfg["output"]["path"])
    return 0


def _scan_crystal(cfg: RunConfig) -> CrystalConfig:
    crystal = build_crystal(cfg)
    target = cfg["scan"]["omega_ip_hz"]
    if target is not None:
        crystal, _ = bud.rescale_to_ip(crystal, TWO_PI * target)
    return crystal


def cmd_scan(cfg: RunConfig, args) -> int:
    crystal = _scan_crystal(cfg)
    s = cfg["scan"]
    ions = cfg["gate"]["ions"]
    recs = bud.mode_advisor(crystal, [t * 1e-6 for t in s["gate_times_us"]],
                            TWO_PI * s["window_khz"] * 1e3, driven=ions)
    header = ["rank", "mode", "gate_time_us", "margin_khz", "nearest_line", "min_eta", "status", "epsilon"]
    rows = []
    for k, r in enumerate(recs, 1):
        status = "rejected: ion decoupled" if r.rejected else ("ok" if r.within_window else "flagged")
        rows.append([k, r.mode, r.gate_time * 1e6, r.margin / TWO_PI / 1e3, r.nearest, r.min_eta,
                     status, "" if r.epsilon is None else f"{r.epsilon:.3g}"])
    fmt = cfg["output"]["format"]
    if fmt == "csv":
        emit(write_csv(header, rows), cfg["output"]["path"])
    elif fmt == "json":
        emit(json.dumps({"config": cfg.to_dict(), "recommendations": [dict(zip(header, r)) for r in rows]},
                        indent=2) + "\n", cfg["output"]["path"])
    else:
        emit(f"{crystal.name}  window {two_pi(s['window_khz'] * 1e3)}\n" + render_table(header, rows),
             cfg["output"]["path"])
    return 0


def cmd_degeneracies(cfg: RunConfig, args) -> int:
    crystal = _scan_crystal(cfg)
    modes = normal_modes(crystal)
    coupling = lamb_dicke(modes, build_lasers(cfg, crystal))
    spectrum = bud.sideband_spectrum(modes, coupling, 2)
    pairs = bud.find_near_degeneracies(spectrum, TWO_PI * cfg["scan"]["window_khz"] * 1e3,
                                       target=cfg["gate"]["mode"])
    header = ["line_a", "offset_a_hz", "line_b", "offset_b_hz", "gap_khz", "gate_relevant"]
    rows = [[p.lines[0].name, p.lines[0].offset / TWO_PI, p.lines[1].name, p.lines[1].offset / TWO_PI,
             p.gap / TWO_PI / 1e3, p.gate_relevant] for p in pairs]
    fmt = cfg["output"]["format"]
    if fmt == "csv":
        emit(write_csv(header, rows), cfg["output"]["path"])
    elif fmt == "json":
        emit(json.dumps({"config": cfg.to_dict(), "pairs": [dict(zip(header, r)) for r in rows]},
                        indent=2) + "\n", cfg["output"]["path"])
    else:
        shown = [[r[0], two_pi(r[1]), r[2], two_pi(r[3]),
                  two_pi(r[4] * 1e3), r[5]] for r in rows]
        emit(f"{crystal.name}\n" + render_table(["line a", "ω_a", "line b", "ω_b", "gap", "gate"], shown),
             cfg["output"]["path"])
    return 0


COMMANDS = {
    "modes": (cmd_modes, "normal modes and Lamb-Dicke parameters of the configured crystal"),
    "table": (cmd_table, "mode/Lamb-Dicke table over isotope combinations"),
    "gate": (cmd_gate, "simulate a calibrated Molmer-Sorensen gate"),
    "budget": (cmd_budget, "2xIP error budget for a two-ion dual-species gate on OOP"),
    "scan": (cmd_scan, "rank gate modes by spectral margin"),
    "degeneracies": (cmd_degeneracies, "near-degenerate sideband line pairs"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionlogic",
        description="Mixed-species trapped-ion normal modes, Molmer-Sorensen gates and error budgets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                       help="override a config field, e.g. gate.gate_time_us=71 (repeatable)")
        p.add_argument("--format", choices=("table", "csv", "json"), help="output format")
        p.add_argument("--output", metavar="PATH", help="write output to PATH instead of stdout")
        if name == "table":
            p.add_argument("--pool", nargs="+", metavar="LABEL", help="species pool")
            p.add_argument("--reference-hz", type=float,
                           help="lone-ion frequency of the heavy isotope (Hz, default 660e3)")
            p.add_argument("--rank-gaps", action="store_true", help="append spectral gaps per row")
        if name == "gate":
            p.add_argument("--out", metavar="DIR",
                           help="directory for populations.csv, parity.csv and summary.json")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.format:
        overrides.append(f"output.format={json.dumps(args.format)}")
    if args.output:
        overrides.append(f"output.path={json.dumps(args.output)}")
    func = COMMANDS[args.command][0]
    try:
        cfg = RunConfig.load(args.config, overrides)
        return func(cfg, args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if type(exc) is KeyError and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
