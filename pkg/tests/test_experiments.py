import itertools
import json
from dataclasses import replace

import numpy as np
import pytest

from cavitychip import analysis as an
from cavitychip.calibration import DARK_RATE_HZ, PERTURBED_COUPLERS
from cavitychip.config import ConfigError, NetworkSpec
from cavitychip.eventlog import EventLog
from cavitychip.experiments import (BellCheck, analyze, bell_state_preparation, calibrate_dark_rate,
                                    calibrate_verbatim_signs, curve_csv, duration_for_pairs, figure_config,
                                    predicted_table, preset, run, run_bell, simulate, write_report)
from cavitychip.optics import CONTROL_RAILS, TARGET_RAILS, bell_network, cnot_network, compile_network

PSI_PLUS = np.array([0, 1, 1, 0]) / np.sqrt(2)


def oracle_bell_amplitudes(net):
    """Post-selected amplitudes for control in C0 and target in T0, from 2x2 permanents."""
    U = compile_network(net.without("beta"))
    a, b = net.index(CONTROL_RAILS[0][0]), net.index(TARGET_RAILS[0][0])
    amps = []
    for oc, ot in itertools.product(range(2), repeat=2):
        i, j = net.output_index(CONTROL_RAILS[1][oc]), net.output_index(TARGET_RAILS[1][ot])
        amps.append(U[i, a] * U[j, b] + U[i, b] * U[j, a])
    return BellCheck(np.array(amps))


# -- Bell-state preparation -------------------------------------------------

def test_ideal_bell_state():
    b = bell_state_preparation()
    phase = b.state[1] / abs(b.state[1])
    assert np.max(np.abs(b.state - phase * PSI_PLUS)) < 1e-10
    assert abs(b.witness - 1) < 1e-10 and abs(b.fidelity - 1) < 1e-10
    assert abs(b.success_probability - 1 / 9) < 1e-12


def test_bell_state_matches_permanent_oracle():
    b, o = bell_state_preparation(), oracle_bell_amplitudes(bell_network())
    assert np.max(np.abs(np.abs(b.amplitudes) - np.abs(o.amplitudes))) < 1e-12
    assert abs(np.vdot(b.state, o.state)) == pytest.approx(1.0, abs=1e-12)


def test_without_alpha_state_is_separable():
    b = bell_state_preparation(bell_network(alpha=False))
    assert abs(b.witness - 0.5) < 1e-10
    assert np.count_nonzero(np.abs(b.state) > 1e-9) == 1


def test_perturbed_central_coupler_lowers_witness():
    net = bell_network(cnot_network(etas=(1 / 3, 0.4, 1 / 3)))
    b, o = bell_state_preparation(net), oracle_bell_amplitudes(net)
    assert b.witness < 1 - 1e-3
    assert abs(b.witness - o.witness) < 1e-12


def test_verbatim_signs_calibrated_on_ideal_state():
    assert calibrate_verbatim_signs() == an.VERBATIM_SIGNS
    b = bell_state_preparation()
    assert an.fidelity_bound(b.zz, b.xx, "paper_verbatim").bound == pytest.approx(np.sqrt(2))


def test_perturbed_profile_reduces_similarity_and_fidelity():
    ideal = preset("cnot_truth_table", "ideal")
    bent = ideal.with_(network=NetworkSpec("cnot", **PERTURBED_COUPLERS))
    s_ideal = an.similarity(predicted_table(ideal), an.IDEAL_CNOT_TABLE)
    s_bent = an.similarity(predicted_table(bent), an.IDEAL_CNOT_TABLE)
    assert s_ideal == pytest.approx(1.0, abs=1e-12) and s_bent < s_ideal
    assert bell_state_preparation(bell_network(cnot_network(**PERTURBED_COUPLERS))).witness < 1.0


def test_predicted_table_ideal():
    assert np.allclose(predicted_table(preset("cnot_truth_table", "ideal")), an.IDEAL_CNOT_TABLE, atol=1e-9)


# -- runs -------------------------------------------------------------------

def test_hbt_ideal_below_bound():
    r = run(preset("hbt", "ideal", seed=1))
    m = r.metrics["g2_zero"]
    assert m.value + r.value("g2_zero_err") < 0.02
    assert m.n >= 0


def test_hom_visibilities():
    ideal = run(preset("hom", "ideal", seed=2))
    assert ideal.value("visibility") > 0.98
    cal = run(preset("hom", "calibrated", seed=2))
    assert abs(cal.value("visibility") - 0.85) < 0.05
    assert abs(cal.value("visibility_model") - 0.85) < 0.005


def test_noise_free_cnot_run():
    cfg = preset("cnot_truth_table", "ideal", seed=3)
    r = run(cfg.with_(duration=duration_for_pairs(cfg, 1000)))
    assert r.value("similarity") >= 0.99
    assert all(r.metrics[f"pairs_{s}"].n >= 800 for s in ("00", "01", "10", "11"))
    assert all(m.n >= 0 for m in r.metrics.values())


def test_background_correction_matches_noise_free_run():
    noisy = preset("cnot_truth_table", "calibrated", seed=4)
    noisy = noisy.with_(duration=duration_for_pairs(noisy, 2000))
    clean = noisy.with_(detectors=replace(noisy.detectors, dark_rate=0.0))
    rn, rc = run(noisy), run(clean)
    pn = np.array(rn.tables["truth_table"]["table"]["p"])
    pc = np.array(rc.tables["truth_table"]["table"]["p"])
    for k, s in enumerate(("00", "01", "10", "11")):
        counts = an.CountTable(an.CELLS, rn.tables["truth_table"]["counts"][s]["raw"],
                               rn.tables["truth_table"]["counts"][s]["background"])
        for cell in range(4):
            signs = np.eye(4)[cell]
            lo, hi = an.bootstrap_expectation(counts, signs, n_resamples=300, seed=cell)
            assert abs(pn[k, cell] - pc[k, cell]) <= 2 * max((hi - lo) / 2, 1e-3) + 1e-9, (s, cell)


def test_noise_free_bell_run():
    cfg = preset("bell_zz", "ideal", seed=5)
    r = run_bell(cfg.with_(duration=duration_for_pairs(cfg, 1000)))
    assert r.value("fidelity_textbook_witness") >= 0.95
    curve = r.curves["fidelity"]
    vals = [v for v, ok in zip(curve["textbook_witness"], curve["populated"]) if ok]
    assert vals and min(vals) > 0.95


def test_sagnac_delay_shifts_loop_detectors():
    cfg = preset("bell_zz", "ideal", seed=6, duration=2e9)
    log = simulate(cfg)["zz"]
    loop = [cfg.channels.detectors[o] for o in CONTROL_RAILS[1]]
    t = log.times_ns
    on_loop = np.isin(log.detector, loop)
    assert np.all(np.mod(t[on_loop], 1000.0) >= 25.0 - 1e-6)
    assert np.all(np.mod(t[~on_loop], 1000.0) <= 400.0)


def test_run_is_deterministic():
    cfg = preset("cnot_truth_table", "calibrated", seed=7, duration=2e9)
    assert run(cfg).to_json() == run(cfg).to_json()


def test_report_json_and_files(tmp_path):
    r = run(preset("hom", "calibrated", seed=8))
    d = json.loads(r.to_json())
    assert all("n" in m for m in d["metrics"].values())
    paths = write_report(r, tmp_path, "hom")
    assert sorted(p.name for p in paths) == ["hom-coincidences.csv", "hom.json"]
    assert json.loads((tmp_path / "hom.json").read_text())["files"] == ["hom-coincidences.csv", "hom.json"]


def test_curve_csv_layout():
    text = curve_csv({"x": [1, 2], "y": [None, 0.5], "label": "ignored"})
    assert text == "x,y\n1,\n2,0.5\n"


def test_analyze_rejects_empty_logs():
    cfg = preset("hbt")
    with pytest.raises(an.EmptyLogError):
        analyze(cfg, {"single": EventLog.from_events([])})


def test_figure_config_checks_kind():
    with pytest.raises(ConfigError):
        figure_config("9z")
    with pytest.raises(ConfigError):
        figure_config("1d", config=preset("hom"))
    assert figure_config("3e", seed=4, config=preset("bell_xx")).seed == 4


def test_dark_rate_calibration_reproduces_recorded_value():
    rate = calibrate_dark_rate()
    assert abs(rate - DARK_RATE_HZ) < 100.0
