"""End-to-end experiment runs: simulate, route through the chip, detect, analyse.

Each kind reproduces one measurement: ``hbt`` (g2 through the three-way
splitter), ``hom`` (two-photon interference at a balanced coupler),
``cnot_truth_table`` (four input settings), ``bell_zz`` and ``bell_xx``
(Bell-state correlations read out through the Sagnac loop).
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis as an
from .calibration import DARK_RATE_HZ, HOM_OVERLAP, MISMATCH_PROBABILITY
from .config import (ConfigError, ExperimentConfig, NetworkSpec,
                     PhotonConfig, RoutingConfig, SagnacConfig, config_hash)
from .eventlog import EventLog
from .optics import (CONTROL_RAILS, TARGET_RAILS, ModeNetwork, bell_network, compile_network,
                     post_selected_operator, sagnac_elements, sagnac_unitary)
from .source import (LONG, SHORT, ChannelMap, ChipHits, DetectorConfig, detect, expected_pair_rate,
                     pair_router, simulate_emissions)
from .temporal import (JointDensity, coincidence_vs_tau, default_envelope, detuning_for_overlap,
                       hom_visibility, sample_single, two_photon_density)

log = logging.getLogger(__name__)

GATE_DETECTORS = {"A'": 1, "D'": 2, "C'": 3, "F'": 4, "B'": 5, "E'": 6}
CONTROL_DETECTORS = (1, 2)
TARGET_DETECTORS = (3, 4)
HBT_DETECTORS = {"D'": 1, "E'": 2, "F'": 3}
HOM_DETECTORS = {"B'": 1, "C'": 2}

DEFAULT_DURATION = {"hbt": 1e9, "hom": 2e9, "cnot_truth_table": 2e10, "bell_zz": 2e10, "bell_xx": 2e10}


# ---------------------------------------------------------------------------
# presets

def preset(kind: str, noise: str = "calibrated", seed: int = 0, duration: float | None = None) -> ExperimentConfig:
    """Configuration for one measurement with the ideal or the calibrated noise profile."""
    if noise not in ("ideal", "calibrated"):
        raise ConfigError(f"unknown noise profile {noise!r}")
    cal = noise == "calibrated"
    det = DetectorConfig(dark_rate=DARK_RATE_HZ if cal else 0.0)
    common = dict(kind=kind, seed=seed, duration=duration or DEFAULT_DURATION.get(kind, 1e9), detectors=det)
    if kind == "hbt":
        return ExperimentConfig(**common, channels=ChannelMap(dict(HBT_DETECTORS), {"single": "F"}),
                                network=NetworkSpec("hbt"), routing=RoutingConfig(pairing=False))
    if kind == "hom":
        return ExperimentConfig(**common, channels=ChannelMap(dict(HOM_DETECTORS), {"long": "A", "short": "D"}),
                                photons=PhotonConfig(overlap=HOM_OVERLAP if cal else 1.0, polarization="both"),
                                network=NetworkSpec("hom"), routing=RoutingConfig(settings=()))
    gate = dict(channels=ChannelMap(dict(GATE_DETECTORS), {"long": "control", "short": "target"}),
                photons=PhotonConfig(mismatch_probability=MISMATCH_PROBABILITY if cal else 0.0))
    if kind == "cnot_truth_table":
        return ExperimentConfig(**common, **gate, network=NetworkSpec("cnot"))
    if kind in ("bell_zz", "bell_xx"):
        element = "beta" if kind == "bell_zz" else "delta"
        return ExperimentConfig(**common, **gate, network=NetworkSpec("bell"),
                                routing=RoutingConfig(settings=("00",)), sagnac=SagnacConfig(element))
    raise ConfigError(f"unknown kind {kind!r}")


def bell_pair(cfg: ExperimentConfig) -> tuple[ExperimentConfig, ExperimentConfig]:
    """The ZZ and XX versions of a Bell configuration (they differ only in the Sagnac stanza)."""
    if cfg.sagnac is None:
        raise ConfigError("not a Bell configuration")
    zz = replace(cfg, kind="bell_zz", sagnac=replace(cfg.sagnac, element="beta"))
    xx = replace(cfg, kind="bell_xx", sagnac=replace(cfg.sagnac, element="delta"))
    return zz, xx


# ---------------------------------------------------------------------------
# physical model pieces

def settings_of(cfg: ExperimentConfig) -> tuple[str, ...]:
    if cfg.kind == "hbt":
        return ("single",)
    if cfg.kind == "hom":
        pol = cfg.photons.polarization
        return ("parallel", "orthogonal") if pol == "both" else (pol,)
    if cfg.kind.startswith("bell"):
        return (cfg.sagnac.basis,)
    return tuple(cfg.routing.settings)


def packets(cfg: ExperimentConfig):
    """Wavepackets of the delayed and the direct photon."""
    base = default_envelope(cfg.source.envelope_support)
    if cfg.photons.overlap < 1.0:
        return base, base.with_(detuning=detuning_for_overlap(cfg.photons.overlap, base))
    return base, base


def effective_unitary(cfg: ExperimentConfig, net: ModeNetwork | None = None) -> np.ndarray:
    net = net or cfg.network.build()
    if cfg.sagnac is not None:
        return sagnac_unitary(net, cfg.sagnac.element)
    return compile_network(net)


def sagnac_outputs(element: str) -> tuple[str, str]:
    return sagnac_elements()[element][1]


def channel_map(cfg: ExperimentConfig) -> ChannelMap:
    """The configured channel map plus the extra loss of the Sagnac loop."""
    cm = cfg.channels
    if cfg.sagnac is None:
        return cm
    loss = dict(cm.loss_db)
    for out in sagnac_outputs(cfg.sagnac.element):
        loss[out] = cm.loss(out) + cfg.sagnac.extra_loss
    return replace(cm, loss_db=loss)


def input_modes(cfg: ExperimentConfig, net: ModeNetwork, setting: str) -> tuple[int, int]:
    """Chip input of the (delayed, direct) photon for one setting."""
    routes = cfg.channels.inputs
    if cfg.kind == "hom":
        return net.index(routes["long"]), net.index(routes["short"])
    bits = "00" if cfg.kind.startswith("bell") else setting
    qubit = {"control": net.index(CONTROL_RAILS[0][int(bits[0])]),
             "target": net.index(TARGET_RAILS[0][int(bits[1])])}
    return qubit[routes["long"]], qubit[routes["short"]]


def pair_densities(cfg: ExperimentConfig, U: np.ndarray, modes: tuple[int, int],
                   orthogonal: bool = False) -> list[tuple[float, JointDensity]]:
    """Mixture of joint densities for one pair: (weight, density) terms."""
    pl, ps = packets(cfg)
    cross = two_photon_density(U, modes, (pl, ps.with_(polarization="V")))
    if orthogonal:
        return [(1.0, cross)]
    q = cfg.photons.mismatch_probability
    terms = []
    if q < 1.0:
        terms.append((1.0 - q, two_photon_density(U, modes, (pl, ps))))
    if q > 0.0:
        terms.append((q, cross))
    return terms


def _route_pairs(inj, terms, rng):
    n = inj.n_pairs
    which = rng.choice(len(terms), size=n, p=[w for w, _ in terms]) if len(terms) > 1 else np.zeros(n, int)
    parts = []
    for k, (_, dens) in enumerate(terms):
        sel = which == k
        m = int(sel.sum())
        if m == 0:
            continue
        i, j, t1, t2 = dens.sampler().sample(m, rng)
        T = inj.pair_time[sel]
        parts.append((np.concatenate([i, j]), np.concatenate([T + t1, T + t2])))
    return parts


def _route_singles(inj, U, modes, pks, rng):
    parts = []
    for arm, (mode, pk) in enumerate(zip(modes, pks)):
        sel = inj.single_arm == (LONG, SHORT)[arm]
        m = int(sel.sum())
        if m == 0:
            continue
        out, t = sample_single(U, mode, pk, m, rng)
        parts.append((out, inj.single_time[sel] + t))
    return parts


def simulate(cfg: ExperimentConfig) -> dict[str, EventLog]:
    """One event log per setting; a pure function of the configuration."""
    net = cfg.network.build()
    U = effective_unitary(cfg, net)
    cmap = channel_map(cfg)
    h = config_hash(cfg)
    settings = settings_of(cfg)
    root = np.random.SeedSequence(int(cfg.seed))
    shared, *children = root.spawn(1 + len(settings))
    pl, ps = packets(cfg)
    logs = {}
    for setting, child in zip(settings, children):
        e_seq, r_seq, d_seq = child.spawn(3)
        if cfg.kind == "hom":
            e_seq = shared
        meta = {"config_hash": h, "seed": cfg.seed, "kind": cfg.kind, "setting": setting}
        em = simulate_emissions(cfg.source, cfg.duration, np.random.default_rng(e_seq))
        rng = np.random.default_rng(r_seq)
        if cfg.kind == "hbt":
            modes, t = sample_single(U, net.index(cfg.channels.inputs["single"]), pl, len(em), rng)
            parts = [(modes, em.slot_time + t)]
        else:
            inj = pair_router(em, cfg.routing.delay)
            modes = input_modes(cfg, net, setting)
            terms = pair_densities(cfg, U, modes, orthogonal=setting == "orthogonal")
            short = ps.with_(polarization="V") if setting == "orthogonal" else ps
            parts = _route_pairs(inj, terms, rng) + _route_singles(inj, U, modes, (pl, short), rng)
        hits = ChipHits.concat(net.output_labels, parts)
        if cfg.sagnac is not None:
            delayed = [net.output_index(o) for o in sagnac_outputs(cfg.sagnac.element)]
            hits.time_ns[np.isin(hits.mode, delayed)] += cfg.sagnac.loop_delay
        logs[setting] = detect(hits, cfg.detectors, cmap, cfg.duration, np.random.default_rng(d_seq), meta)
    return logs


# ---------------------------------------------------------------------------
# analytic expectations

def predicted_cells(cfg: ExperimentConfig, setting: str, detected: bool = True) -> np.ndarray:
    """Expected control/target coincidence probability per cell for one injected pair.

    Includes the loss and detection efficiency of each output when
    ``detected``; ignores dark counts.
    """
    net = cfg.network.build()
    U = effective_unitary(cfg, net)
    cmap = channel_map(cfg)
    co = [net.output_index(x) for x in CONTROL_RAILS[1]]
    to = [net.output_index(x) for x in TARGET_RAILS[1]]
    eff = np.array([cmap.transmission(lbl) * cfg.detectors.quantum_efficiency if detected else 1.0
                    for lbl in net.output_labels])
    cells = np.zeros(4)
    for w, dens in pair_densities(cfg, U, input_modes(cfg, net, setting)):
        tot = dens.totals()
        for c in range(2):
            for t in range(2):
                i, j = sorted((co[c], to[t]))
                cells[2 * c + t] += w * tot[(i, j)] * eff[i] * eff[j]
    return cells


def predicted_table(cfg: ExperimentConfig) -> np.ndarray:
    """Row-normalised truth table (or outcome distribution) the model converges to."""
    rows = [predicted_cells(cfg, s, detected=False) for s in settings_of(cfg)]
    return np.array([r / r.sum() for r in rows])


def duration_for_pairs(cfg: ExperimentConfig, pairs: int, margin: float = 1.15) -> float:
    """Run length (ns) expected to give ``pairs`` detected coincidences per setting."""
    p = min(predicted_cells(cfg, s).sum() for s in settings_of(cfg))
    ns = pairs / (expected_pair_rate(cfg.source) * p) * margin
    return float(math.ceil(ns / 1e6) * 1e6)


@dataclass(frozen=True)
class BellCheck:
    amplitudes: np.ndarray              # post-selected, over 00, 01, 10, 11

    @property
    def success_probability(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def state(self) -> np.ndarray:
        return self.amplitudes / np.sqrt(self.success_probability)

    @property
    def fidelity(self) -> float:
        psi_plus = np.array([0, 1, 1, 0]) / np.sqrt(2)
        return float(abs(np.vdot(psi_plus, self.state)) ** 2)

    @property
    def zz(self) -> float:
        return float(an.ZZ_SIGNS @ np.abs(self.state) ** 2)

    @property
    def xx(self) -> float:
        H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        return float(an.ZZ_SIGNS @ np.abs(np.kron(H, H) @ self.state) ** 2)

    @property
    def witness(self) -> float:
        return an.fidelity_bound(self.zz, self.xx).bound


def bell_state_preparation(network: ModeNetwork | None = None) -> BellCheck:
    """Post-selected two-qubit state for control in C0 and target in T0.

    The measurement-basis coupler (stages named "beta") is removed first.
    """
    net = (network if network is not None else bell_network()).without("beta")
    op = post_selected_operator(net, CONTROL_RAILS, TARGET_RAILS)
    return BellCheck(op.matrix[:, 0].copy())


def calibrate_verbatim_signs() -> dict[str, float]:
    """Outcome-to-eigenvalue signs maximising the verbatim bound on the ideal simulated state."""
    b = bell_state_preparation()
    best = max(((sz, sx) for sz in (1.0, -1.0) for sx in (1.0, -1.0)),
               key=lambda s: (-s[0] * b.zz - s[1] * b.xx))
    return {"zz": best[0], "xx": best[1]}


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class Metric:
    value: float
    n: int
    interval: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "n", int(self.n))
        if self.interval is not None:
            object.__setattr__(self, "interval", tuple(float(x) for x in self.interval))

    def to_dict(self) -> dict:
        v = None if not np.isfinite(self.value) else float(self.value)
        return {"value": v, "n": int(self.n),
                "interval": None if self.interval is None else [float(x) for x in self.interval]}


@dataclass
class RunReport:
    kind: str
    config_hash: str
    seed: int
    events: dict
    metrics: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def value(self, name: str) -> float:
        return self.metrics[name].value

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config_hash": self.config_hash, "seed": int(self.seed),
                "events": {k: int(v) for k, v in self.events.items()},
                "metrics": {k: m.to_dict() for k, m in self.metrics.items()},
                "curves": self.curves, "tables": self.tables, "files": list(self.files)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _clean(values) -> list:
    return [None if v is None or not np.isfinite(v) else float(v) for v in np.asarray(values, dtype=float)]


def sidebands(cfg: ExperimentConfig) -> tuple[an.Window, ...]:
    return an.default_sidebands(cfg.source.rep_period, cfg.source.envelope_support, cfg.analysis.sidebands)


def _reach(cfg: ExperimentConfig) -> float:
    sb = sidebands(cfg)
    return max([abs(w.lo) for w in sb] + [abs(w.hi) for w in sb] + [cfg.analysis.window])


def _boot_seed(cfg: ExperimentConfig, tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(cfg.seed), 0xB0075, tag])


def compensated(cfg: ExperimentConfig, log_: EventLog, basis: str) -> EventLog:
    """Remove the Sagnac loop delay from the detectors behind the loop used for ``basis``."""
    if cfg.sagnac is None:
        return log_
    element = {"zz": "beta", "xx": "delta"}[basis]
    dets = [cfg.channels.detectors[o] for o in sagnac_outputs(element) if o in cfg.channels.detectors]
    return log_.shifted({d: int(round(cfg.sagnac.loop_delay * 1000)) for d in dets})


def analyze(cfg: ExperimentConfig, logs: dict[str, EventLog]) -> RunReport:
    """Kind-specific statistics from event logs keyed by setting."""
    if not logs or all(len(v) == 0 for v in logs.values()):
        raise an.EmptyLogError("empty event log")
    report = RunReport(cfg.kind, config_hash(cfg), int(cfg.seed), {k: len(v) for k, v in logs.items()})
    {"hbt": _analyze_hbt, "hom": _analyze_hom, "cnot_truth_table": _analyze_cnot,
     "bell_zz": _analyze_bell, "bell_xx": _analyze_bell}[cfg.kind](cfg, logs, report)
    return report


def decay_lag(h: an.CoincidenceHistogram, level: float = 0.5) -> float:
    """Smallest positive lag where g2 falls below ``level``."""
    pos = h.centers > 0
    x, y = h.centers[pos], h.g2[pos]
    below = np.flatnonzero(y < level)
    return float(x[below[0]]) if below.size else float("nan")


def _analyze_hbt(cfg, logs, report):
    a = cfg.analysis
    if "single" not in logs:
        raise KeyError("hbt analysis needs the 'single' log")
    dets = sorted(set(cfg.channels.detectors.values()))
    h = an.g2_histogram(logs["single"], dets, a.g2_bin, a.g2_max_lag, a.g2_fit_span)
    z = int(np.argmin(np.abs(h.centers)))
    n0 = int(h.counts[z])
    report.metrics["g2_zero"] = Metric(h.g2_zero, n0, (h.g2_zero - h.g2_zero_err, h.g2_zero + h.g2_zero_err))
    report.metrics["g2_zero_err"] = Metric(h.g2_zero_err, n0)
    report.metrics["g2_normalization"] = Metric(h.normalization, int(h.counts.sum()))
    report.metrics["half_decay_lag_ns"] = Metric(decay_lag(h), int(h.counts.sum()))
    report.curves["g2"] = {"lag_ns": h.centers.tolist(), "g2": _clean(h.g2), "counts": h.counts.tolist()}


def _analyze_hom(cfg, logs, report):
    a = cfg.analysis
    sb = sidebands(cfg)
    d1, d2 = (cfg.channels.detectors[o] for o in sorted(cfg.channels.detectors))
    # visibility integrates the whole two-photon support; a narrower window
    # would drop the large-|tau| tail where distinguishable pairs pile up
    reach = max(a.window, cfg.source.envelope_support)
    w = an.Window(0.0, reach)
    edges = np.arange(-reach, reach + a.tau_bin / 2, a.tau_bin)
    centers = (edges[:-1] + edges[1:]) / 2
    signal, curves = {}, {"tau_ns": centers.tolist()}
    for pol, lg in logs.items():
        c = an.coincidence_pairs(lg, (d1,), (d2,), an.Window(0.0, _reach(cfg)))
        ct = an.count_table(c, w, sb, labels=("pair",))
        signal[pol] = (ct.raw[0], ct.background[0])
        report.metrics[f"coincidences_{pol}"] = Metric(ct.raw[0] - ct.background[0], int(ct.raw[0]))
        curves[f"counts_{pol}"] = np.histogram(c.dtau, bins=edges)[0].tolist()
    if {"parallel", "orthogonal"} <= set(signal):
        (rp, bp), (ro, bo) = signal["parallel"], signal["orthogonal"]
        npar, nort = rp - bp, ro - bo
        V = 1.0 - npar / nort if nort > 0 else float("nan")
        sig = math.sqrt(rp / nort**2 + npar**2 * ro / nort**4) if nort > 0 else float("nan")
        report.metrics["visibility"] = Metric(V, int(ro), (V - sig, V + sig))
        net = cfg.network.build()
        U = compile_network(net)
        modes = input_modes(cfg, net, "parallel")
        pl, ps = packets(cfg)
        dp = two_photon_density(U, modes, (pl, ps))
        do = two_photon_density(U, modes, (pl, ps.with_(polarization="V")))
        pair = (0, 1)
        taus, cp = coincidence_vs_tau(dp, pair)
        _, co = coincidence_vs_tau(do, pair)
        report.metrics["visibility_model"] = Metric(hom_visibility(cp, co, taus), 0)
        scale = nort / max(np.trapezoid(co, taus), 1e-300)
        idx = np.digitize(taus, edges) - 1
        ok = (idx >= 0) & (idx < len(centers))
        for name, C in (("model_parallel", cp), ("model_orthogonal", co)):
            binned = np.bincount(idx[ok], weights=C[ok], minlength=len(centers)) * dp.dt * scale
            curves[name] = binned.tolist()
    report.curves["coincidences"] = curves


def _truth_table_curve(tt: an.TruthTable, ideal: np.ndarray) -> dict:
    rows = {"input": [], "outcome": [], "probability": [], "ideal": [], "raw": [], "background": []}
    for r, s in enumerate(tt.settings):
        for k, lbl in enumerate(an.CELLS):
            rows["input"].append(s)
            rows["outcome"].append(lbl)
            rows["probability"].append(float(tt.table.p[r, k]))
            rows["ideal"].append(float(ideal[r, k]))
            rows["raw"].append(float(tt.counts[s].raw[k]))
            rows["background"].append(float(tt.counts[s].background[k]))
    return rows


def _analyze_cnot(cfg, logs, report):
    a = cfg.analysis
    sb = sidebands(cfg)
    settings = settings_of(cfg)
    ideal = an.IDEAL_CNOT_TABLE[[int(s, 2) for s in settings]]
    coinc = {s: an.coincidence_pairs(logs[s], CONTROL_DETECTORS, TARGET_DETECTORS, an.Window(0.0, _reach(cfg)))
             for s in settings}
    tt = an.truth_table_from_coincidences(coinc, an.Window(0.0, a.window), sb, settings)
    S = tt.similarity(ideal)
    iv = an.bootstrap_similarity([tt.counts[s] for s in settings], ideal, a.bootstrap, _boot_seed(cfg, 1)) \
        if a.bootstrap else None
    report.metrics["similarity"] = Metric(S, tt.pairs, iv)
    for s in settings:
        report.metrics[f"pairs_{s}"] = Metric(tt.counts[s].total, int(tt.counts[s].total))
    report.tables["truth_table"] = tt.to_dict()
    report.curves["truth_table"] = _truth_table_curve(tt, ideal)
    curve = an.similarity_vs_delay(coinc, a.sweep(), a.similarity_half_width, sb, ideal, settings)
    report.curves["similarity"] = {"center_ns": curve.centers.tolist(), "similarity": _clean(curve.values),
                                   "pairs": curve.pairs.tolist()}
    report.tables["similarity_excluded"] = list(curve.excluded)


def _analyze_bell(cfg, logs, report):
    a = cfg.analysis
    sb = sidebands(cfg)
    w = an.Window(0.0, a.window)
    coinc, tables = {}, {}
    corr = {"basis": [], "outcome": [], "probability": [], "raw": [], "background": []}
    for tag, basis in enumerate(("zz", "xx")):
        if basis not in logs:
            continue
        lg = compensated(cfg, logs[basis], basis)
        coinc[basis] = an.coincidence_pairs(lg, CONTROL_DETECTORS, TARGET_DETECTORS, an.Window(0.0, _reach(cfg)))
        ct = an.background_correct(an.count_table(coinc[basis], w, sb))
        p = an.mle_normalize(ct)
        e = an.pauli_expectation(p)
        iv = an.bootstrap_expectation(ct, an.ZZ_SIGNS, a.bootstrap, _boot_seed(cfg, 10 + tag)) if a.bootstrap else None
        report.metrics[basis] = Metric(e, int(ct.total), iv)
        tables[basis] = ct
        report.tables[f"{basis}_distribution"] = {**p.to_dict(), **ct.to_dict()}
        for k, lbl in enumerate(an.CELLS):
            corr["basis"].append(basis)
            corr["outcome"].append(lbl)
            corr["probability"].append(float(p.p[0, k]))
            corr["raw"].append(float(ct.raw[k]))
            corr["background"].append(float(ct.background[k]))
    if not coinc:
        raise KeyError("Bell analysis needs a 'zz' or 'xx' log")
    report.curves["correlations"] = corr
    if len(coinc) < 2:
        return
    zz, xx = report.metrics["zz"].value, report.metrics["xx"].value
    n = min(tables["zz"].total, tables["xx"].total)
    for k, conv in enumerate(("textbook_witness", "paper_verbatim")):
        fb = an.fidelity_bound(float(np.clip(zz, -1, 1)), float(np.clip(xx, -1, 1)), conv)
        iv = an.bootstrap_fidelity(tables["zz"], tables["xx"], conv, a.bootstrap, _boot_seed(cfg, 20 + k)) \
            if a.bootstrap else None
        report.metrics[f"fidelity_{conv}"] = Metric(fb.bound, int(n), iv)
    curve = an.fidelity_vs_delay(coinc["zz"], coinc["xx"], a.sweep(a.fidelity_step), a.fidelity_half_width, sb,
                                 a.min_pairs, "textbook_witness")
    report.curves["fidelity"] = {"center_ns": curve.centers.tolist(),
                                 "textbook_witness": _clean(curve.values),
                                 "paper_verbatim": _clean(curve.extra["paper_verbatim"]),
                                 "pairs": curve.pairs.tolist(),
                                 "background": curve.background.tolist(),
                                 "flagged": [bool(c in curve.flagged) for c in curve.centers],
                                 "populated": curve.populated(a.min_pairs, a.min_significance).tolist()}
    populated = curve.populated(a.min_pairs, a.min_significance)
    spread = float(np.ptp(curve.values[populated])) if populated.any() else float("nan")
    report.metrics["fidelity_spread"] = Metric(spread, int(populated.sum()))


def run(cfg: ExperimentConfig) -> RunReport:
    return analyze(cfg, simulate(cfg))


def run_bell(cfg: ExperimentConfig) -> RunReport:
    """Both Sagnac configurations and the fidelity bounds combining them."""
    zz, xx = bell_pair(cfg)
    logs = {**simulate(zz), **simulate(xx)}
    return analyze(zz, logs)


# ---------------------------------------------------------------------------
# calibration

def hbt_g2_zero(dark_rate: float, seed: int = 2024, duration: float = 4e9) -> float:
    cfg = preset("hbt", "ideal", seed, duration)
    cfg = replace(cfg, detectors=replace(cfg.detectors, dark_rate=dark_rate))
    return run(cfg).value("g2_zero")


def calibrate_dark_rate(target: float = 0.15, seed: int = 2024, duration: float = 4e9,
                        lo: float = 0.0, hi: float = 20_000.0, tol: float = 50.0) -> float:
    """Dark-count rate (Hz) at which the simulated HBT g2(0) equals ``target``; bisection."""
    if hbt_g2_zero(hi, seed, duration) < target:
        raise ValueError("upper bracket does not reach the target g2(0)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hbt_g2_zero(mid, seed, duration) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# figures and file output

FIGURES = {
    "1d": ("hbt", ("g2",)),
    "1e": ("hom", ("coincidences",)),
    "2b": ("cnot_truth_table", ("truth_table",)),
    "2c": ("cnot_truth_table", ("similarity",)),
    "3ab": ("bell_zz", ("correlations",)),
    "3e": ("bell_zz", ("fidelity",)),
}

HEADLINE = {"1d": "g2_zero", "1e": "visibility", "2b": "similarity", "2c": "similarity",
            "3ab": "fidelity_textbook_witness", "3e": "fidelity_spread"}


def figure_config(name: str, seed: int = 0, duration: float | None = None,
                  config: ExperimentConfig | None = None) -> ExperimentConfig:
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; expected one of {sorted(FIGURES)}")
    kind = FIGURES[name][0]
    cfg = config if config is not None else preset(kind, "calibrated", seed)
    if cfg.kind != kind and not (kind.startswith("bell") and cfg.kind.startswith("bell")):
        raise ConfigError(f"figure {name} needs a {kind} config, got {cfg.kind}")
    changes = {"seed": seed}
    if duration is not None:
        changes["duration"] = duration
    return replace(cfg, **changes)


def figure(name: str, seed: int = 0, duration: float | None = None,
           config: ExperimentConfig | None = None) -> RunReport:
    """Report holding the data of one figure; a pure function of (config, seed)."""
    cfg = figure_config(name, seed, duration, config)
    report = run_bell(cfg) if cfg.kind.startswith("bell") else run(cfg)
    keep = FIGURES[name][1]
    report.curves = {k: v for k, v in report.curves.items() if k in keep}
    return report


def curve_csv(curve: dict) -> str:
    cols = [k for k, v in curve.items() if isinstance(v, list)]
    n = max((len(curve[c]) for c in cols), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i in range(n):
        w.writerow(["" if curve[c][i] is None else curve[c][i] for c in cols])
    return buf.getvalue()


def write_report(report: RunReport, out: str | Path, stem: str, formats=("json", "csv")) -> list[Path]:
    """Write ``<stem>.json`` and one ``<stem>-<curve>.csv`` per curve; returns the paths."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    if "csv" in formats:
        names += [f"{stem}-{k}.csv" for k in sorted(report.curves)]
    if "json" in formats:
        names.append(f"{stem}.json")
    report.files = sorted(names)
    paths = []
    if "csv" in formats:
        for k in sorted(report.curves):
            p = out / f"{stem}-{k}.csv"
            p.write_text(curve_csv(report.curves[k]))
            paths.append(p)
    if "json" in formats:
        p = out / f"{stem}.json"
        p.write_text(report.to_json())
        paths.append(p)
    return paths
