"""Acceptance criteria 1-9, one test (or parametrized family) per criterion.

The conftest hook prints one PASS/FAIL line per criterion after the run.
"""
import csv
import io
import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from ionlogic.budget import error_2xIP, rescale_to_ip
from ionlogic.cli import main
from ionlogic.coupling import lamb_dicke, parallel_lasers
from ionlogic.crystal import CrystalConfig, closed_form_modes, normal_modes
from ionlogic.msgate import (FockOracle, GateParams, MotionalSpec, TwoQubitState, bell_fidelity,
                             calibrate_gate, characterize, fit_parity_contrast, fit_parity_period,
                             parity_scan, propagate_analytic, simulate_gate)
from ionlogic.msgate.params import TruncationWarning

GOLDEN = Path(__file__).parent / "golden"
TWO_PI = 2 * math.pi
KHZ = TWO_PI * 1e3
MHZ = TWO_PI * 1e6

# Experimental gate scenarios: chain, reference species, IP frequency, gate time, driven ions.
SCENARIOS = {
    "Ca-Ca": (("40Ca+", "40Ca+"), TWO_PI * 1.2e6, 71e-6, (0, 1)),
    "Sr-Sr": (("88Sr+", "88Sr+"), TWO_PI * 1.3e6, 72e-6, (0, 1)),
    "Sr-Ca-Sr": (("88Sr+", "40Ca+", "88Sr+"), TWO_PI * 730e3, 61e-6, (0, 2)),
    "Ca-Sr": (("40Ca+", "88Sr+"), TWO_PI * 770e3, 160e-6, (0, 1)),
}
# Measured Bell-state errors and their one-sigma uncertainties.
MEASURED_ERROR = {"Ca-Ca": (0.012, 0.002), "Sr-Sr": (0.025, 0.002),
                  "Sr-Ca-Sr": (0.043, 0.003), "Ca-Sr": (0.057, 0.003)}


def scenario_gate(name, **kw):
    labels, omega_ip, t_g, ions = SCENARIOS[name]
    _, modes = rescale_to_ip(CrystalConfig.from_labels(labels, labels[0], 1.0), omega_ip)
    coupling = lamb_dicke(modes, parallel_lasers(modes))
    return calibrate_gate(coupling, "IP", t_g, ions=ions, **kw)


def bare_gate(omega, t_g, eta, nbar=0.0):
    d = TWO_PI / t_g
    return GateParams("IP", omega, d, (eta, eta), (d / (4 * eta),) * 2, nbar=nbar)


def ca_sr():
    return CrystalConfig.from_labels(["40Ca+", "88Sr+"], "88Sr+", 1.0)


# -- 1 ----------------------------------------------------------------------------

def test_criterion_1_table_reproduction(tmp_path):
    out = tmp_path / "table.csv"
    start = time.perf_counter()
    assert main(["table", "--format", "csv", "--output", str(out)]) == 0
    elapsed = time.perf_counter() - start
    ours = list(csv.DictReader(io.StringIO(out.read_text())))
    printed = list(csv.DictReader(io.StringIO((GOLDEN / "appendix_table_reference.csv").read_text())))
    assert len(ours) == len(printed)
    worst = 0.0
    for a, b in zip(ours, printed):
        assert (a["configuration"], a["mode"]) == (b["configuration"], b["mode"])
        for key in ("ratio_ref", "ratio_ip", "b_Sr", "b_Ca", "eta_Sr", "eta_Ca"):
            # the printed table carries signs on three-ion amplitudes; compare magnitudes
            diff = abs(abs(float(a[key])) - abs(float(b[key])))
            worst = max(worst, diff)
            assert diff <= 1e-3 + 1e-12, (a["configuration"], a["mode"], key)
    print(f"criterion 1: worst |diff| {worst:.2e}, runtime {elapsed:.3f} s")
    assert elapsed < 1.0


# -- 2 ----------------------------------------------------------------------------

def twelve_configurations():
    out = []
    for heavy in ("88Sr+", "86Sr+"):
        for light in ("40Ca+", "43Ca+"):
            for labels in ((light, heavy), (light, heavy, light), (heavy, light, heavy)):
                out.append(CrystalConfig.from_labels(labels, heavy, TWO_PI * 660e3))
    return out


def test_criterion_2_closed_form_equivalence():
    configs = twelve_configurations()
    assert len(configs) == 12
    start = time.perf_counter()
    pairs = [(normal_modes(c), closed_form_modes(c)) for c in configs]
    elapsed = time.perf_counter() - start
    for cfg, (num, ana) in zip(configs, pairs):
        assert num.labels == ana.labels, cfg.name
        assert num.frequencies == pytest.approx(ana.frequencies, rel=1e-9), cfg.name
        assert np.max(np.abs(np.abs(num.eigenvectors) - np.abs(ana.eigenvectors))) < 1e-9, cfg.name
    assert elapsed < 1.0


# -- 3 ----------------------------------------------------------------------------

def test_criterion_3_degeneracy_gap():
    _, modes = rescale_to_ip(ca_sr(), MHZ)
    gap = 2 * modes.mode("IP").frequency - modes.mode("OOP").frequency
    print(f"criterion 3: gap = 2pi x {gap / KHZ:.3f} kHz")
    assert abs(gap - 12 * KHZ) <= 0.5 * KHZ
    assert error_2xIP(ca_sr(), MHZ).gap == pytest.approx(gap, rel=1e-12)


# -- 4 ----------------------------------------------------------------------------

def test_criterion_4_error_budget():
    eps0 = error_2xIP(ca_sr(), MHZ).epsilon
    print(f"criterion 4: epsilon = {eps0:.5f}")
    assert abs(eps0 - 0.013) <= 0.002
    for nbar in (0.5, 1.0, 2.0, 7.3):
        ratio = error_2xIP(ca_sr(), MHZ, nbar=nbar).epsilon / eps0
        assert ratio == pytest.approx(2 * nbar + 1, rel=1e-13)


# -- 5 ----------------------------------------------------------------------------

@pytest.mark.parametrize("name", list(SCENARIOS))
def test_criterion_5_ideal_gate(name):
    start = time.perf_counter()
    params = scenario_gate(name)
    result = simulate_gate(params)
    elapsed = time.perf_counter() - start
    print(f"criterion 5 [{name}]: F = {result.fidelity:.12f}, "
          f"P1bright = {result.final_state.p1bright:.1e}, {elapsed:.3f} s")
    assert result.fidelity >= 0.9999
    assert result.final_state.p1bright < 1e-9
    assert elapsed < 1.0


# -- 6 ----------------------------------------------------------------------------

def test_criterion_6_analytic_oracle_equivalence():
    params_of = {eta: bare_gate(TWO_PI * 1.2e6, 71e-6, eta) for eta in (0.06, 0.1)}
    grid = np.linspace(0, 71e-6, 100)
    start = time.perf_counter()
    report = []
    for eta, base in params_of.items():
        for nbar in (0.0, 0.5, 2.0):
            params = GateParams(base.mode, base.mode_frequency, base.detuning, base.etas, base.rabis,
                                nbar=nbar)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                motion = MotionalSpec.thermal(nbar, n_max=40)
            # leakage_limit=None lets the run finish so the deviation can be reported
            oracle = FockOracle(params, motion, "LD", leakage_limit=None)
            oracle.solve(grid[-1])
            dev = max(np.max(np.abs(np.subtract(o.populations, propagate_analytic(params, t).populations)))
                      for t, o in zip(grid, oracle.states(grid)))
            report.append((eta, nbar, dev, oracle.max_top_population))
    elapsed = time.perf_counter() - start
    for eta, nbar, dev, top in report:
        print(f"criterion 6 [eta={eta}, nbar={nbar}]: max deviation {dev:.2e}, top-two population {top:.1e}")
    print(f"criterion 6: runtime {elapsed:.1f} s")
    assert elapsed < 60.0
    failing = [(eta, nbar, dev) for eta, nbar, dev, _ in report if dev > 1e-6]
    assert not failing, f"deviation above 1e-6 at n_max=40: {failing}"


# -- 7 ----------------------------------------------------------------------------

def test_criterion_7_parity_protocol():
    params = scenario_gate("Ca-Ca")
    state = propagate_analytic(params, params.gate_time)
    fringe = parity_scan(state, np.linspace(0, TWO_PI, 128, endpoint=False))
    period = fit_parity_period(fringe)
    contrast = fit_parity_contrast(fringe).contrast
    print(f"criterion 7: period - pi = {period - math.pi:.1e}, C = {contrast:.12f}")
    assert abs(period - math.pi) < 1e-6
    assert abs(contrast - 1.0) <= 1e-6
    assert bell_fidelity(state.p00, state.p11, min(contrast, 1.0)) == pytest.approx(1.0, abs=1e-12)
    # a fully dephased Bell state: equal populations, no coherence
    dephased = TwoQubitState(np.diag([0.5, 0, 0, 0.5]).astype(complex))
    assert characterize(dephased)[-1] == 0.5


# -- 8 ----------------------------------------------------------------------------

NBARS = (0.0, 0.5, 2.0)


def test_criterion_8_thermal_insensitivity():
    analytic = []
    for nbar in NBARS:
        params = scenario_gate("Ca-Ca", nbar=nbar)
        analytic.append(propagate_analytic(params, params.gate_time).fidelity(params.bell_phase))
    assert np.ptp(analytic) < 1e-6

    full = []
    for nbar, n_max in zip(NBARS, (16, 20, 40)):
        params = bare_gate(MHZ, 100e-6, 0.06, nbar=nbar)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            motion = MotionalSpec.thermal(nbar, n_max)
        oracle = FockOracle(params, motion, "full")
        oracle.solve(params.gate_time)
        full.append(oracle.state(params.gate_time).fidelity(params.bell_phase))
    print(f"criterion 8: analytic spread {np.ptp(analytic):.1e}; full-model F {', '.join(f'{f:.6f}' for f in full)}")
    assert all(a >= b for a, b in zip(full, full[1:]))


# -- 9 ----------------------------------------------------------------------------

@pytest.mark.parametrize("name", list(SCENARIOS))
def test_criterion_9_measured_errors_not_reproduced(name):
    """The measured errors come from laboratory noise outside the model.

    The ideal gate reaches F ~ 1, and the worst perturbative 2xIP floor of the
    dual-species OOP gate at 1 MHz stays below the mixed-species measurement,
    so only these limits are reproduced.
    """
    params = scenario_gate(name)
    model_error = 1 - propagate_analytic(params, params.gate_time).fidelity(params.bell_phase)
    measured, sigma = MEASURED_ERROR[name]
    print(f"criterion 9 [{name}]: model error {model_error:.1e} vs measured {measured}({sigma})")
    assert model_error < measured - 3 * sigma
    assert error_2xIP(ca_sr(), MHZ).epsilon < MEASURED_ERROR["Ca-Sr"][0]
