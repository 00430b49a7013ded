"""Monte-Carlo model of the intermittent atom-cavity source and the click detectors.

Atoms cross the cavity as a Poisson process. While at least one atom is
coupled, every ``rep_period`` slot emits a photon with probability
``emission_efficiency``. A polarising beam splitter sends H photons down a
delay line one period long, so an H photon followed by a V photon reach the
chip together.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eventlog import EventLog

H, V = 0, 1
LONG, SHORT = 0, 1


@dataclass(frozen=True)
class SourceConfig:
    rep_period: float = 1000.0          # ns
    emission_efficiency: float = 0.60
    atom_rate: float = 5000.0           # atoms per second
    transit_max: float = 60000.0        # ns
    transit_distribution: str = "uniform"
    transit_mean: float = 30000.0       # ns, exponential law only
    envelope_support: float = 400.0     # ns

    def __post_init__(self):
        if not 0.0 <= self.emission_efficiency <= 1.0:
            raise ValueError("emission efficiency must lie in [0, 1]")
        if self.rep_period <= 0:
            raise ValueError("rep_period must be positive")
        if self.transit_distribution not in ("uniform", "exponential"):
            raise ValueError(f"unknown transit distribution {self.transit_distribution!r}")


@dataclass(frozen=True)
class DetectorConfig:
    quantum_efficiency: float = 0.70
    dark_rate: float = 0.0              # counts per second per detector
    resolution: float = 0.080           # ns
    dead_time: float = 0.0              # ns

    def __post_init__(self):
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValueError("quantum efficiency must lie in [0, 1]")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.dark_rate < 0 or self.dead_time < 0:
            raise ValueError("dark rate and dead time must be non-negative")


@dataclass(frozen=True)
class ChannelMap:
    """Chip inputs per photon route, detector per chip output, and lumped losses.

    ``loss_db`` overrides ``default_loss_db`` for individual outputs. All loss
    between source and detector is lumped here.
    """

    detectors: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    loss_db: dict = field(default_factory=dict)
    default_loss_db: float = 3.3

    def __post_init__(self):
        if self.default_loss_db < 0 or any(v < 0 for v in self.loss_db.values()):
            raise ValueError("losses must be non-negative")

    def loss(self, output: str) -> float:
        return float(self.loss_db.get(output, self.default_loss_db))

    def transmission(self, output: str) -> float:
        return 10.0 ** (-self.loss(output) / 10.0)


@dataclass(eq=False)
class Emissions:
    slot_time: np.ndarray               # ns
    polarization: np.ndarray            # H or V
    rep_period: float = 1000.0
    transits: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __len__(self) -> int:
        return int(self.slot_time.size)

    def as_list(self) -> list[tuple[float, str]]:
        return [(float(t), "HV"[p]) for t, p in zip(self.slot_time, self.polarization)]

    def consecutive_count(self) -> int:
        """Number of emissions whose next slot also emitted."""
        k = np.round(self.slot_time / self.rep_period).astype(np.int64)
        return int(np.count_nonzero(np.diff(k) == 1))


def draw_transits(cfg: SourceConfig, duration: float, rng: np.random.Generator) -> np.ndarray:
    """(start, length) in ns for every atom that overlaps [0, duration)."""
    lookback = cfg.transit_max if cfg.transit_distribution == "uniform" else 10 * cfg.transit_mean
    span = duration + lookback
    n = rng.poisson(cfg.atom_rate * span * 1e-9)
    start = rng.uniform(-lookback, duration, n)
    if cfg.transit_distribution == "uniform":
        length = rng.uniform(0.0, cfg.transit_max, n)
    else:
        length = rng.exponential(cfg.transit_mean, n)
    order = np.argsort(start, kind="stable")
    return np.column_stack([start[order], length[order]])


def merge_intervals(transits: np.ndarray) -> np.ndarray:
    """Union of (start, length) intervals as sorted, disjoint (start, end) rows."""
    tr = np.asarray(transits, dtype=float).reshape(-1, 2)
    if len(tr) == 0:
        return np.empty((0, 2))
    order = np.argsort(tr[:, 0], kind="stable")
    a, b = tr[order, 0], tr[order, 0] + tr[order, 1]
    reach = np.maximum.accumulate(b)
    new = np.ones(len(a), dtype=bool)
    new[1:] = a[1:] > reach[:-1]
    starts = a[new]
    ends = reach[np.r_[np.flatnonzero(new)[1:] - 1, len(a) - 1]]
    return np.column_stack([starts, ends])


def _first_slot_at_or_after(t: np.ndarray, rep_period: float) -> np.ndarray:
    # the division can round across a slot boundary, so settle it by comparing slot times
    k = np.ceil(t / rep_period).astype(np.int64)
    k += k * rep_period < t
    k -= (k - 1) * rep_period >= t
    return k


def active_slot_indices(transits: np.ndarray, rep_period: float, n_slots: int) -> np.ndarray:
    """Sorted indices k with k*rep_period inside at least one transit."""
    merged = merge_intervals(transits)
    if len(merged) == 0:
        return np.empty(0, dtype=np.int64)
    lo = np.clip(_first_slot_at_or_after(merged[:, 0], rep_period), 0, n_slots)
    hi = np.clip(_first_slot_at_or_after(merged[:, 1], rep_period), 0, n_slots)
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    n = hi - lo
    return np.repeat(lo, n) + (np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n))


def active_slots(transits: np.ndarray, rep_period: float, n_slots: int) -> np.ndarray:
    """Boolean mask form of :func:`active_slot_indices`."""
    mask = np.zeros(n_slots, dtype=bool)
    mask[active_slot_indices(transits, rep_period, n_slots)] = True
    return mask


def duty_cycle(cfg: SourceConfig) -> float:
    """Long-run fraction of time with at least one atom coupled."""
    mean = cfg.transit_max / 2 if cfg.transit_distribution == "uniform" else cfg.transit_mean
    return float(1.0 - np.exp(-cfg.atom_rate * mean * 1e-9))


def expected_pair_rate(cfg: SourceConfig) -> float:
    """Approximate simultaneous pairs per ns (two active slots, H then V)."""
    return duty_cycle(cfg) * cfg.emission_efficiency**2 * 0.25 / cfg.rep_period


def simulate_emissions(cfg: SourceConfig, duration: float, seed=None, transits=None) -> Emissions:
    """Slot times and polarizations of every photon the cavity emits in [0, duration).

    ``transits`` replaces the random atom arrivals with explicit
    ``(start, length)`` intervals in ns.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_slots = int(np.floor(duration / cfg.rep_period))
    if transits is None:
        transits = draw_transits(cfg, duration, rng)
    else:
        transits = np.asarray(transits, dtype=float).reshape(-1, 2)
    active = active_slot_indices(transits, cfg.rep_period, n_slots)
    k = active[rng.random(active.size) < cfg.emission_efficiency]
    pol = rng.integers(0, 2, size=k.size).astype(np.int8)
    return Emissions(k * cfg.rep_period, pol, cfg.rep_period, transits)


@dataclass(eq=False)
class Injections:
    """Photons as they reach the chip: simultaneous pairs and lone photons."""

    pair_time: np.ndarray               # ns, chip arrival of both photons
    single_time: np.ndarray             # ns
    single_arm: np.ndarray              # LONG or SHORT

    @property
    def n_pairs(self) -> int:
        return int(self.pair_time.size)


def pair_router(emissions: Emissions, delay: float = 1000.0) -> Injections:
    """Send H photons through the delay line and V photons straight on.

    A pair forms when a delayed photon and a direct photon arrive at the chip
    at the same time; with ``delay`` equal to the repetition period this is
    an H emission followed by a V emission in the next slot.
    """
    t = np.asarray(emissions.slot_time, dtype=float)
    pol = np.asarray(emissions.polarization)
    arm = np.where(pol == H, LONG, SHORT)
    arrival = np.where(arm == LONG, t + delay, t)
    key = np.round(arrival * 1000.0).astype(np.int64)
    long_keys = key[arm == LONG]
    short_keys = key[arm == SHORT]
    paired = np.intersect1d(long_keys, short_keys, assume_unique=True)
    in_pair = np.isin(key, paired)
    single = ~in_pair
    order = np.argsort(arrival[single], kind="stable")
    return Injections(paired / 1000.0, arrival[single][order], arm[single][order])


@dataclass(eq=False)
class ChipHits:
    """Photons leaving chip outputs, with their (pre-detection) arrival times."""

    outputs: tuple
    mode: np.ndarray
    time_ns: np.ndarray

    @classmethod
    def concat(cls, outputs, parts) -> "ChipHits":
        parts = [p for p in parts if p is not None]
        if not parts:
            return cls(tuple(outputs), np.empty(0, np.int64), np.empty(0))
        return cls(tuple(outputs), np.concatenate([p[0] for p in parts]).astype(np.int64),
                   np.concatenate([p[1] for p in parts]).astype(float))


def detect(hits: ChipHits, det: DetectorConfig, cmap: ChannelMap, duration: float, seed=None,
           meta=None) -> EventLog:
    """Apply loss, quantum efficiency, time quantisation, dark counts and dead time."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    res_ps = int(round(det.resolution * 1000))
    det_ids, times = [], []

    survive = np.zeros(len(hits.mode), dtype=bool)
    det_of_mode = np.full(len(hits.outputs), -1, dtype=np.int64)
    p_of_mode = np.zeros(len(hits.outputs))
    for m, label in enumerate(hits.outputs):
        if label in cmap.detectors:
            det_of_mode[m] = cmap.detectors[label]
            p_of_mode[m] = cmap.transmission(label) * det.quantum_efficiency
    if len(hits.mode):
        survive = (det_of_mode[hits.mode] >= 0) & (rng.random(len(hits.mode)) < p_of_mode[hits.mode])
    det_ids.append(det_of_mode[hits.mode[survive]])
    times.append(hits.time_ns[survive])

    for d in sorted(set(cmap.detectors.values())):
        n = rng.poisson(det.dark_rate * duration * 1e-9)
        det_ids.append(np.full(n, d, dtype=np.int64))
        times.append(rng.uniform(0.0, duration, n))

    d = np.concatenate(det_ids)
    t_ps = np.floor(np.concatenate(times) * 1000.0 / res_ps).astype(np.int64) * res_ps
    order = np.lexsort((d, t_ps))
    d, t_ps = d[order], t_ps[order]
    if det.dead_time > 0:
        keep = _dead_time_mask(d, t_ps, int(round(det.dead_time * 1000)))
        d, t_ps = d[keep], t_ps[keep]
    return EventLog(d, t_ps, meta or {})


def _dead_time_mask(d: np.ndarray, t_ps: np.ndarray, dead_ps: int) -> np.ndarray:
    keep = np.ones(len(d), dtype=bool)
    for det_id in np.unique(d):
        idx = np.flatnonzero(d == det_id)
        last = None
        for i in idx:
            if last is not None and t_ps[i] - last < dead_ps:
                keep[i] = False
            else:
                last = t_ps[i]
    return keep
