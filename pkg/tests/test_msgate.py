import math
import warnings

import numpy as np
import pytest

from ionlogic.coupling import lamb_dicke, parallel_lasers
from ionlogic.crystal import CrystalConfig, normal_modes
from ionlogic.errors import FitError, LeakageError, PhysicalityError
from ionlogic.msgate import (FockOracle, GateParams, MotionalSpec, ParityFringe, Ramp, TwoQubitState,
                             bell_fidelity, calibrate_gate, find_zeros, fit_parity_contrast,
                             fit_parity_period, loop_integrals, parity_scan, population_flopping,
                             propagate_analytic, propagate_oracle, residual_displacement, simulate_gate)
from ionlogic.msgate.params import TruncationWarning
from ionlogic.msgate.readout import FitWarning

W = 2 * math.pi * 1.2e6
T_G = 71e-6


def bare(etas=(0.06, 0.06), t_g=T_G, loops=1, **kw):
    d = 2 * math.pi * loops / t_g
    rabis = tuple(d / (4 * math.sqrt(loops) * abs(e)) for e in etas)
    return GateParams("IP", W, d, etas, rabis, loops=loops, **kw)


def max_pop_diff(a, b):
    return max(np.max(np.abs(np.array(x.populations) - np.array(y.populations))) for x, y in zip(a, b))


# -- analytic propagator ------------------------------------------------------

def test_loop_integrals_unramped_closed_form():
    p = bare()
    t = np.linspace(0, p.gate_time, 7)
    A, phi = loop_integrals(p, t)
    d = p.detuning
    assert A == pytest.approx((np.exp(1j * d * t) - 1) / d, abs=1e-15)
    assert phi == pytest.approx((d * t - np.sin(d * t)) / d**2, rel=1e-10, abs=1e-22)


@pytest.mark.parametrize("phase", [math.pi / 2, 0.0, 0.3, -2.0])
@pytest.mark.parametrize("etas", [(0.06, 0.06), (0.05, -0.07), (-0.04, -0.09)])
def test_calibrated_gate_reaches_target_bell_state(phase, etas):
    p = bare(etas, bell_phase=phase)
    s = propagate_analytic(p, p.gate_time)
    assert s.fidelity(phase) == pytest.approx(1.0, abs=1e-12)
    assert s.p1bright < 1e-12
    assert residual_displacement(p, p.gate_time) < 1e-12


def test_half_gate_is_entangled_with_motion():
    p = bare()
    s = propagate_analytic(p, p.gate_time / 2)
    assert s.p1bright > 0.1
    assert s.entropy() > 0.1


@pytest.mark.parametrize("loops", [2, 4])
def test_multi_loop_gate(loops):
    p = bare(loops=loops)
    s = propagate_analytic(p, p.gate_time)
    assert s.fidelity(p.bell_phase) == pytest.approx(1.0, abs=1e-12)
    # motion closes after every loop
    for k in range(1, loops + 1):
        assert residual_displacement(p, k * p.gate_time / loops) < 1e-12


def test_thermal_insensitivity_at_gate_time():
    f = [propagate_analytic(bare(nbar=n), T_G).fidelity(math.pi / 2) for n in (0, 0.5, 2, 10)]
    assert np.ptp(f) < 1e-12
    mid = [propagate_analytic(bare(nbar=n), T_G / 2).p1bright for n in (0, 2)]
    assert mid[0] != pytest.approx(mid[1], abs=1e-3)


def test_fully_detuned_drive_leaves_state_alone():
    p = GateParams("IP", W, 2 * math.pi * 1e6, (0.06, 0.06), (1.0, 1.0))
    s = propagate_analytic(p, 1e-6)
    assert s.p11 == pytest.approx(1.0, abs=1e-9)


def test_sine2_ramp_envelope_runs_and_is_continuous():
    p = bare(ramp=Ramp("sine2"))
    ts = np.linspace(0, p.gate_time, 50)
    pops = np.array([s.populations for s in propagate_analytic(p, ts)])
    assert np.all(np.abs(np.diff(pops, axis=0)) < 0.2)
    assert pops.sum(axis=1) == pytest.approx(np.ones(50), abs=1e-12)


def test_ramp_validation():
    with pytest.raises(ValueError):
        Ramp("gauss")
    with pytest.raises(ValueError):
        Ramp("sine2", 0.6).resolved(1.0)


def test_gate_params_validation():
    with pytest.raises(ValueError):
        GateParams("IP", W, 0.0, (0.1, 0.1), (1, 1))
    with pytest.raises(ValueError):
        GateParams("IP", W, 1.0, (0.1,), (1,))
    with pytest.raises(ValueError):
        GateParams("IP", W, 1.0, (0.1, 0.1), (1, 1), loops=0)


# -- oracle ---------------------------------------------------------------------

@pytest.mark.parametrize("etas,phase", [((0.06, 0.06), math.pi / 2), ((0.05, -0.07), 0.3)])
def test_ld_oracle_matches_analytic(etas, phase):
    p = bare(etas, bell_phase=phase)
    ts = np.linspace(0, p.gate_time, 30)
    a = propagate_analytic(p, ts)
    o = propagate_oracle(p, MotionalSpec(20), "LD", ts)
    assert max(np.max(np.abs(x.rho - y.rho)) for x, y in zip(a, o)) < 1e-8


def test_ld_oracle_matches_analytic_with_ramp_and_beyond_gate_time():
    p = bare(ramp=Ramp("sine2"))
    ts = np.linspace(0, 1.1 * p.gate_time, 40)
    a = propagate_analytic(p, ts)
    o = propagate_oracle(p, MotionalSpec(25), "LD", ts)
    assert max_pop_diff(a, o) < 1e-8


def test_fock_initial_state_matches_analytic():
    p = bare()
    motion = MotionalSpec(n_max=30, initial="fock", fock_n=3)
    ts = np.linspace(0, p.gate_time, 15)
    a = propagate_analytic(p, ts, motion)
    o = propagate_oracle(p, motion, "LD", ts)
    assert max_pop_diff(a, o) < 1e-8
    assert a[-1].fidelity(p.bell_phase) == pytest.approx(1.0, abs=1e-12)


def test_thermal_oracle_matches_analytic():
    p = bare(nbar=0.5)
    ts = np.linspace(0, p.gate_time, 20)
    a = propagate_analytic(p, ts)
    o = propagate_oracle(p, MotionalSpec.thermal(0.5, 40), "LD", ts)
    assert max_pop_diff(a, o) < 1e-8


def test_leakage_error_suggests_larger_space():
    p = bare()
    with pytest.raises(LeakageError) as info:
        propagate_oracle(p, MotionalSpec(5), "LD")
    assert info.value.suggested_n_max > 5
    assert "n_max" in str(info.value)


def test_leakage_check_can_be_disabled_for_diagnostics():
    p = bare()
    oracle = FockOracle(p, MotionalSpec(5), "LD", leakage_limit=None).solve(p.gate_time)
    oracle.state(p.gate_time)
    assert oracle.max_top_population > 1e-6


def test_oracle_rejects_spectators_in_ld_model():
    from ionlogic.msgate import SpectatorMode
    p = bare()
    with pytest.raises(ValueError):
        FockOracle(p, MotionalSpec(10), "LD", [SpectatorMode(W, (0.1, 0.1), MotionalSpec(5))])


@pytest.mark.slow
def test_full_hamiltonian_reduces_to_lamb_dicke_model():
    d = 2 * math.pi / 200e-6
    p = GateParams("IP", 2 * math.pi * 1.5e6, d, (0.06, 0.06), (d / 0.24, d / 0.24))
    ts = np.linspace(0, p.gate_time, 40)
    a = propagate_analytic(p, ts)
    o = propagate_oracle(p, MotionalSpec(16), "full", ts)
    assert max_pop_diff(a, o) <= 0.01
    assert o[-1].fidelity(p.bell_phase) > 0.999


# -- motional spec ----------------------------------------------------------------

def test_motional_spec_validation():
    with pytest.raises(ValueError):
        MotionalSpec(n_max=10, initial="thermal", nbar=2)
    with pytest.raises(ValueError):
        MotionalSpec(initial="squeezed")
    with pytest.warns(TruncationWarning):
        MotionalSpec(n_max=12, initial="thermal", nbar=2)


def test_thermal_weights_normalized():
    n, w = MotionalSpec.thermal(0.5, 40).weights()
    assert w.sum() == pytest.approx(1.0)
    assert w[1] / w[0] == pytest.approx(1 / 3)


# -- calibration ------------------------------------------------------------------

def calibrated(labels, mode, t_g, ions=None, ref="88Sr+", w=2 * math.pi * 660e3, **kw):
    modes = normal_modes(CrystalConfig.from_labels(labels, ref, w))
    return calibrate_gate(lamb_dicke(modes, parallel_lasers(modes)), mode, t_g, ions=ions, **kw)


def test_calibration_condition():
    p = calibrated(["40Ca+", "88Sr+"], "IP", 160e-6)
    assert p.detuning == pytest.approx(2 * math.pi / 160e-6)
    assert np.abs(p.sideband_products) == pytest.approx([p.detuning / 4] * 2)
    assert p.gate_time == pytest.approx(160e-6)


def test_calibration_k_loops():
    p = calibrated(["40Ca+", "40Ca+"], "IP", 100e-6, loops=4, ref="40Ca+")
    assert p.detuning == pytest.approx(8 * math.pi / 100e-6)
    assert np.abs(p.sideband_products) == pytest.approx([p.detuning / 8] * 2)


def test_calibration_rejects_decoupled_ion():
    from ionlogic.errors import DecoupledIonError
    with pytest.raises(DecoupledIonError):
        calibrated(["88Sr+", "40Ca+", "88Sr+"], "Stretch", 100e-6, ions=(0, 1))


# -- readout ------------------------------------------------------------------------

def test_bell_state_parity_fringe():
    s = TwoQubitState.bell(0.7)
    fringe = parity_scan(s, np.linspace(0, 2 * math.pi, 64, endpoint=False))
    fit = fit_parity_contrast(fringe)
    assert fit.contrast == pytest.approx(1.0, abs=1e-12)
    assert abs(fit.offset) < 1e-12
    assert fit_parity_period(fringe) == pytest.approx(math.pi, abs=1e-9)


def test_product_state_has_no_fringe():
    s = TwoQubitState.from_ket([0, 0, 0, 1])
    fringe = parity_scan(s, np.linspace(0, math.pi, 16))
    assert fit_parity_contrast(fringe).contrast < 1e-12


def test_bell_fidelity_values():
    assert bell_fidelity(0.5, 0.5, 1.0) == 1.0
    assert bell_fidelity(0.5, 0.5, 0.0) == 0.5
    assert bell_fidelity(0.0, 0.0, 0.0) == 0.0
    with pytest.raises(PhysicalityError):
        bell_fidelity(0.9, 0.1, 0.9)
    with pytest.raises(PhysicalityError):
        bell_fidelity(1.2, 0.0, 0.0)


def test_state_fidelities():
    assert TwoQubitState.maximally_mixed().fidelity(0.0) == pytest.approx(0.25)
    assert TwoQubitState.bell(1.0).fidelity(1.0) == pytest.approx(1.0)
    assert TwoQubitState.bell(1.0).fidelity(1.0 + math.pi) == pytest.approx(0.0, abs=1e-15)


def test_fit_input_checks():
    with pytest.raises(FitError):
        fit_parity_contrast(ParityFringe(np.linspace(0, 4, 5), np.zeros(5)))
    with pytest.raises(FitError):
        fit_parity_contrast(ParityFringe(np.linspace(0, 1, 20), np.zeros(20)))
    chi = np.linspace(0, 2 * math.pi, 32)
    with pytest.warns(FitWarning):
        fit_parity_contrast(ParityFringe(chi, 0.5 + 0.3 * np.sin(2 * chi)))


# -- flopping ------------------------------------------------------------------------

def test_find_zeros_of_simple_function():
    f = lambda t: math.sin(t) ** 2
    zeros = find_zeros(f, np.linspace(0, 10, 201))
    assert zeros == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], abs=1e-6)


def test_simulate_gate_ideal():
    r = simulate_gate(bare())
    assert r.fidelity == pytest.approx(1.0, abs=1e-9)
    assert r.contrast == pytest.approx(1.0, abs=1e-9)
    assert r.zeros[-1] == pytest.approx(T_G, rel=1e-9)
    assert r.populations.shape == (201, 3)


def test_flopping_analytic_and_oracle_agree():
    p = bare()
    ts = np.linspace(0, p.gate_time, 41)
    a = population_flopping(p, ts)
    o = population_flopping(p, ts, MotionalSpec(20), method="oracle")
    assert a.populations == pytest.approx(o.populations, abs=1e-8)
    assert a.zeros == pytest.approx(o.zeros, rel=1e-6)


def test_multi_loop_zeros():
    p = bare(loops=3)
    r = population_flopping(p, np.linspace(0, p.gate_time, 301))
    assert len(r.zeros) == 3
    assert r.zeros == pytest.approx([p.gate_time * k / 3 for k in (1, 2, 3)], rel=1e-6)
