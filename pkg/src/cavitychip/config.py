"""Declarative experiment configuration stored as YAML with explicit units.

Quantities carry unit suffixes (``"1000.0 ns"``, ``"3.3 dB"``, ``"5000.0 Hz"``,
``"0.0 rad/ns"``). Values are written with ``repr`` so a file read back
reproduces the exact floats.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .optics import (CouplerElement, ModeNetwork, PhaseShifter, bell_network, cnot_network,
                     hbt_network, hom_network)
from .source import ChannelMap, DetectorConfig, SourceConfig


class ConfigError(ValueError):
    pass


KINDS = ("hbt", "hom", "cnot_truth_table", "bell_zz", "bell_xx")
GATE_SETTINGS = ("00", "01", "10", "11")

_SCALE = {
    "ns": {"ps": 1e-3, "ns": 1.0, "us": 1e3, "ms": 1e6, "s": 1e9},
    "Hz": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6},
    "dB": {"dB": 1.0},
    "rad/ns": {"rad/ns": 1.0},
}


def format_quantity(value: float, unit: str) -> str:
    return f"{float(value)!r} {unit}"


def parse_quantity(text, unit: str) -> float:
    """Parse ``"<number> <unit>"`` and convert to ``unit``."""
    if not isinstance(text, str):
        raise ConfigError(f"quantity {text!r} needs an explicit unit ({unit})")
    num, _, u = text.strip().partition(" ")
    u = u.strip()
    table = _SCALE[unit]
    if u not in table:
        raise ConfigError(f"unit {u!r} in {text!r} is not convertible to {unit}")
    try:
        return float(num) * table[u] if table[u] != 1.0 else float(num)
    except ValueError as exc:
        raise ConfigError(f"bad number in {text!r}") from exc


# ---------------------------------------------------------------------------
# stanzas

@dataclass(frozen=True)
class PhotonConfig:
    """Mutual distinguishability of the two photons of a pair.

    ``overlap`` is the target |<xi1|xi2>|^2 realised by a relative carrier
    detuning. ``mismatch_probability`` is the chance that a pair enters
    with orthogonal polarizations. ``polarization`` picks parallel,
    orthogonal or both (two runs sharing one emission record).
    """

    overlap: float = 1.0
    mismatch_probability: float = 0.0
    polarization: str = "parallel"

    def __post_init__(self):
        if not 0.0 < self.overlap <= 1.0:
            raise ConfigError("overlap must lie in (0, 1]")
        if not 0.0 <= self.mismatch_probability <= 1.0:
            raise ConfigError("mismatch probability must lie in [0, 1]")
        if self.polarization not in ("parallel", "orthogonal", "both"):
            raise ConfigError(f"unknown polarization mode {self.polarization!r}")


@dataclass(frozen=True)
class RoutingConfig:
    """How photons reach the chip.

    With ``pairing`` the polarising splitter and delay line form pairs and
    ``channels.inputs`` maps the ``long`` and ``short`` arm to a chip input
    (or, for gate kinds, to the qubit "control" or "target"). Without it
    every photon enters ``channels.inputs["single"]``. ``settings`` lists
    the gate input bits, control first.
    """

    pairing: bool = True
    delay: float = 1000.0
    settings: tuple = GATE_SETTINGS


@dataclass(frozen=True)
class SagnacConfig:
    """Fibre loop sending one photon back through a chip element before detection."""

    element: str = "beta"
    loop_delay: float = 25.0
    extra_loss: float = 3.3

    def __post_init__(self):
        if self.element not in ("beta", "delta"):
            raise ConfigError(f"unknown Sagnac element {self.element!r}")

    @property
    def basis(self) -> str:
        return {"beta": "zz", "delta": "xx"}[self.element]


@dataclass(frozen=True)
class AnalysisConfig:
    window: float = 200.0
    sidebands: int = 5
    similarity_half_width: float = 30.0
    fidelity_half_width: float = 50.0
    fidelity_step: float = 100.0
    sweep_start: float = -400.0
    sweep_stop: float = 400.0
    sweep_step: float = 10.0
    min_pairs: int = 20
    min_significance: float = 3.0
    bootstrap: int = 1000
    g2_bin: float = 1000.0
    g2_max_lag: float = 100_000.0
    g2_fit_span: float = 10_000.0
    tau_bin: float = 10.0
    convention: str = "textbook_witness"

    def __post_init__(self):
        if self.convention not in ("textbook_witness", "paper_verbatim"):
            raise ConfigError(f"unknown convention {self.convention!r}")

    def sweep(self, step: float | None = None) -> np.ndarray:
        step = step or self.sweep_step
        n = int(round((self.sweep_stop - self.sweep_start) / step))
        return self.sweep_start + step * np.arange(n + 1)


@dataclass(frozen=True)
class NetworkSpec:
    """A preset chip configuration, or an inline stage list when ``preset`` is "inline"."""

    preset: str = "cnot"
    etas: tuple | None = None
    phis: tuple | None = None
    balanced: tuple | None = None
    alpha: bool = True
    inline: dict | None = None

    def build(self) -> ModeNetwork:
        if self.preset == "inline":
            if not self.inline:
                raise ConfigError("inline network needs a stage list")
            return network_from_dict(self.inline)
        kw = {}
        if self.etas is not None:
            kw["etas"] = tuple(self.etas)
        if self.phis is not None:
            kw["phis"] = tuple(self.phis)
        if self.balanced is not None:
            kw["balanced"] = tuple(self.balanced)
        if self.preset == "cnot":
            return cnot_network(**kw)
        if self.preset == "bell":
            return bell_network(cnot_network(**kw), alpha=self.alpha)
        if self.preset == "hbt":
            return hbt_network()
        if self.preset == "hom":
            return hom_network(self.etas[0] if self.etas else 0.5)
        raise ConfigError(f"unknown network preset {self.preset!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    duration: float = 1e9
    source: SourceConfig = field(default_factory=SourceConfig)
    detectors: DetectorConfig = field(default_factory=DetectorConfig)
    channels: ChannelMap = field(default_factory=ChannelMap)
    photons: PhotonConfig = field(default_factory=PhotonConfig)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    sagnac: SagnacConfig | None = None

    def __post_init__(self):
        validate(self)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown kind {cfg.kind!r}; expected one of {KINDS}")
    if cfg.duration <= 0:
        raise ConfigError("duration must be positive")
    if not 0 <= int(cfg.seed) < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    net = cfg.network.build()
    outs = set(net.output_labels)
    for label in cfg.channels.detectors:
        if label not in outs:
            raise ConfigError(f"detector on unknown output {label!r}")
    r, routes = cfg.routing, cfg.channels.inputs
    if cfg.kind == "hbt":
        if r.pairing:
            raise ConfigError("hbt sends single photons; set routing.pairing to false")
        if routes.get("single") not in net.labels:
            raise ConfigError(f"routing input {routes.get('single')!r} is not a network input")
        return
    if not r.pairing:
        raise ConfigError(f"{cfg.kind} needs paired photons")
    if cfg.kind == "hom":
        for arm in ("long", "short"):
            if routes.get(arm) not in net.labels:
                raise ConfigError(f"{arm} arm input {routes.get(arm)!r} is not a network input")
        return
    if {routes.get("long"), routes.get("short")} != {"control", "target"}:
        raise ConfigError("gate kinds route the two arms to 'control' and 'target'")
    for s in r.settings:
        if s not in GATE_SETTINGS:
            raise ConfigError(f"unknown input setting {s!r}")
    if cfg.kind.startswith("bell"):
        if cfg.sagnac is None:
            raise ConfigError(f"{cfg.kind} needs a sagnac stanza")
        if cfg.sagnac.basis != cfg.kind[-2:]:
            raise ConfigError(f"{cfg.kind} measures {cfg.kind[-2:]} but the Sagnac loop selects "
                              f"{cfg.sagnac.basis}")
    elif cfg.sagnac is not None:
        raise ConfigError(f"{cfg.kind} takes no sagnac stanza")


# ---------------------------------------------------------------------------
# networks as plain data

def network_to_dict(net: ModeNetwork) -> dict:
    stages = []
    for st in net.stages:
        if isinstance(st, CouplerElement):
            stages.append({"coupler": [net.labels[st.mode_a], net.labels[st.mode_b]],
                           "eta": float(st.eta), "phi": float(st.phi), "name": st.name})
        else:
            stages.append({"phase": net.labels[st.mode], "value": float(st.phase), "name": st.name})
    return {"inputs": list(net.labels), "outputs": list(net.output_labels), "stages": stages}


def network_from_dict(d: dict) -> ModeNetwork:
    labels = tuple(d["inputs"])
    idx = {lbl: k for k, lbl in enumerate(labels)}
    stages = []
    for st in d.get("stages", []):
        try:
            if "coupler" in st:
                a, b = st["coupler"]
                stages.append(CouplerElement(idx[a], idx[b], float(st["eta"]), float(st.get("phi", 0.0)),
                                             st.get("name", "")))
            elif "phase" in st:
                stages.append(PhaseShifter(idx[st["phase"]], float(st["value"]), st.get("name", "")))
            else:
                raise ConfigError(f"stage {st} is neither a coupler nor a phase shifter")
        except KeyError as exc:
            raise ConfigError(f"stage {st} names an unknown mode {exc}") from exc
    return ModeNetwork(len(labels), tuple(stages), labels, tuple(d.get("outputs", ())))


# ---------------------------------------------------------------------------
# (de)serialisation

_UNITS = {
    SourceConfig: {"rep_period": "ns", "atom_rate": "Hz", "transit_max": "ns", "transit_mean": "ns",
                   "envelope_support": "ns"},
    DetectorConfig: {"dark_rate": "Hz", "resolution": "ns", "dead_time": "ns"},
    RoutingConfig: {"delay": "ns"},
    SagnacConfig: {"loop_delay": "ns", "extra_loss": "dB"},
    AnalysisConfig: {k: "ns" for k in ("window", "similarity_half_width", "fidelity_half_width",
                                       "sweep_start", "sweep_stop", "sweep_step", "fidelity_step", "g2_bin",
                                       "g2_max_lag", "g2_fit_span", "tau_bin")},
    ExperimentConfig: {"duration": "ns"},
}


def _plain(v):
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _frozen(v):
    if isinstance(v, list):
        return tuple(_frozen(x) for x in v)
    return v


def _dump(obj) -> dict:
    if isinstance(obj, ChannelMap):
        return {"detectors": {k: int(v) for k, v in obj.detectors.items()},
                "inputs": dict(obj.inputs),
                "loss": {k: format_quantity(v, "dB") for k, v in obj.loss_db.items()},
                "default_loss": format_quantity(obj.default_loss_db, "dB")}
    units = _UNITS.get(type(obj), {})
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if is_dataclass(v):
            out[f.name] = _dump(v)
        elif f.name in units:
            out[f.name] = format_quantity(v, units[f.name])
        else:
            out[f.name] = _plain(v)
    return out


_NESTED = {"source": SourceConfig, "detectors": DetectorConfig, "channels": ChannelMap,
           "photons": PhotonConfig, "network": NetworkSpec, "routing": RoutingConfig,
           "analysis": AnalysisConfig, "sagnac": SagnacConfig}


def _load(cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} stanza must be a mapping")
    if cls is ChannelMap:
        extra = set(data) - {"detectors", "inputs", "loss", "default_loss"}
        if extra:
            raise ConfigError(f"unknown channel keys {sorted(extra)}")
        return ChannelMap({str(k): int(v) for k, v in (data.get("detectors") or {}).items()},
                          dict(data.get("inputs") or {}),
                          {str(k): parse_quantity(v, "dB") for k, v in (data.get("loss") or {}).items()},
                          parse_quantity(data.get("default_loss", "3.3 dB"), "dB"))
    units = _UNITS.get(cls, {})
    names = {f.name for f in fields(cls)}
    extra = set(data) - names
    if extra:
        raise ConfigError(f"unknown {cls.__name__} keys {sorted(extra)}")
    kw = {}
    for k, v in data.items():
        if cls is ExperimentConfig and k in _NESTED:
            kw[k] = None if v is None else _load(_NESTED[k], v)
        elif k in units:
            kw[k] = parse_quantity(v, units[k])
        elif cls is NetworkSpec and k == "inline":
            kw[k] = v
        else:
            kw[k] = _frozen(v)
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return _dump(cfg)


def config_from_dict(d: dict) -> ExperimentConfig:
    if "kind" not in d:
        raise ConfigError("config needs a kind")
    return _load(ExperimentConfig, d)


def dumps(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True, default_flow_style=False, allow_unicode=True)


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return config_from_dict(data)


def load(path: str | Path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def save(path: str | Path, cfg: ExperimentConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(cfg))
    return path


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dumps(cfg).encode()).hexdigest()[:16]
