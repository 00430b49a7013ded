"""Statistics from time-tagged event logs.

Covers the second-order correlation histogram, control/target coincidence
tables with accidental-background correction, maximum-likelihood
normalisation, the truth-table similarity, Pauli correlations and the Bell
fidelity bounds, all optionally restricted to a window of detection-time
difference.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .eventlog import EventLog

log = logging.getLogger(__name__)

CELLS = ("00", "01", "10", "11")
ZZ_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])

IDEAL_CNOT_TABLE = np.array([[1.0, 0.0, 0.0, 0.0],
                             [0.0, 1.0, 0.0, 0.0],
                             [0.0, 0.0, 0.0, 1.0],
                             [0.0, 0.0, 1.0, 0.0]])


class EmptyLogError(ValueError):
    pass


# ---------------------------------------------------------------------------
# g2

@dataclass(eq=False)
class CoincidenceHistogram:
    bin_width: float
    centers: np.ndarray                 # ns
    counts: np.ndarray
    normalization: float                # uncorrelated counts per bin

    @property
    def g2(self) -> np.ndarray:
        return self.counts / self.normalization

    def _zero(self) -> int:
        return int(np.argmin(np.abs(self.centers)))

    @property
    def g2_zero(self) -> float:
        return float(self.g2[self._zero()])

    @property
    def g2_zero_err(self) -> float:
        # one-sigma Poisson error, floored at one count
        return float(np.sqrt(max(self.counts[self._zero()], 1.0)) / self.normalization)

    def to_dict(self) -> dict:
        return {"bin_width_ns": self.bin_width, "lag_ns": self.centers.tolist(),
                "counts": self.counts.tolist(), "normalization": self.normalization,
                "g2": self.g2.tolist(), "g2_zero": self.g2_zero, "g2_zero_err": self.g2_zero_err}


def _cross_lags(t: np.ndarray, d: np.ndarray, max_lag: float) -> np.ndarray:
    """t_j - t_i over all click pairs on distinct detectors, ordered so j has the larger id."""
    out = []
    for s in range(1, len(t)):
        dt = t[s:] - t[:-s]
        close = dt <= max_lag
        if not close.any():
            break
        m = close & (d[s:] != d[:-s])
        sign = np.where(d[s:][m] > d[:-s][m], 1.0, -1.0)
        out.append(sign * dt[m])
    return np.concatenate(out) if out else np.empty(0)


def g2_histogram(events: EventLog, detectors, bin_width: float = 1000.0, max_lag: float = 100_000.0,
                 fit_span: float = 10_000.0) -> CoincidenceHistogram:
    """Cross-correlation of clicks on distinct detectors, binned by lag.

    Bins are centred on multiples of ``bin_width`` so that with the default
    width each bin holds one repetition slot. The normalisation is a
    quadratic fit to the bins with 0 < |lag| <= ``fit_span``, extrapolated
    to zero lag; that is the count expected for uncorrelated photons within
    one atom transit.
    """
    ev = events.select(detectors)
    if len(set(detectors)) < 2:
        raise ValueError("g2 needs at least two detectors")
    if len(ev) == 0:
        raise EmptyLogError("empty event log")
    K = int(np.floor(max_lag / bin_width))
    edges = (np.arange(-K, K + 2) - 0.5) * bin_width
    lags = _cross_lags(ev.times_ns, ev.detector, edges[-1])
    counts, _ = np.histogram(lags, bins=edges)
    centers = np.arange(-K, K + 1) * bin_width
    counts = counts.astype(float)

    side = (np.abs(centers) > 0) & (np.abs(centers) <= fit_span)
    x = np.abs(centers[side])
    if len(np.unique(x)) >= 4:
        norm = float(np.polyval(np.polyfit(x, counts[side], 2), 0.0))
    elif side.any():
        norm = float(counts[side].mean())
    else:
        norm = float(counts.max())
    if norm <= 0:
        norm = float(max(counts.max(), 1.0))
    return CoincidenceHistogram(bin_width, centers, counts, norm)


# ---------------------------------------------------------------------------
# coincidences

@dataclass(frozen=True)
class Window:
    """Acceptance interval for the signed detection-time difference (ns)."""

    center: float = 0.0
    half_width: float = 200.0

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    @property
    def width(self) -> float:
        return 2 * self.half_width

    def contains(self, dtau: np.ndarray) -> np.ndarray:
        return (dtau >= self.lo) & (dtau <= self.hi)


def _as_window(window) -> Window:
    if isinstance(window, Window):
        return window
    lo, hi = window
    return Window((lo + hi) / 2, (hi - lo) / 2)


def default_sidebands(rep_period: float = 1000.0, support: float = 400.0, count: int = 5) -> tuple[Window, ...]:
    """Gaps between repetition slots where only flat accidentals land.

    True pairs sit at |dtau| <= support; photons from neighbouring slots sit
    within ``support`` of multiples of ``rep_period``.
    """
    gap = rep_period - 2 * support
    if gap <= 0:
        raise ValueError("wave packets fill the whole repetition period")
    out = []
    for k in range(count):
        c = k * rep_period + rep_period / 2
        out += [Window(c, gap / 2), Window(-c, gap / 2)]
    return tuple(sorted(out, key=lambda w: w.center))


@dataclass(eq=False)
class Coincidences:
    """Click pairs with one click in each channel set.

    ``dtau`` is t_target - t_control; the bits index the detectors within
    their set.
    """

    control_bit: np.ndarray
    target_bit: np.ndarray
    dtau: np.ndarray
    n_target: int = 2

    def __len__(self) -> int:
        return int(self.dtau.size)

    @property
    def cell(self) -> np.ndarray:
        return self.control_bit * self.n_target + self.target_bit

    def labels(self) -> list[tuple[str, float]]:
        return [(f"{c}{t}", float(x)) for c, t, x in zip(self.control_bit, self.target_bit, self.dtau)]

    def counts(self, window, n_cells: int | None = None) -> np.ndarray:
        w = _as_window(window)
        n_cells = n_cells or 2 * self.n_target
        return np.bincount(self.cell[w.contains(self.dtau)], minlength=n_cells).astype(float)


def coincidence_pairs(events: EventLog, control: Sequence[int], target: Sequence[int],
                      window=Window(0.0, 200.0)) -> Coincidences:
    """All (control click, target click) pairs with t_target - t_control in ``window``."""
    control, target = tuple(control), tuple(target)
    if set(control) & set(target):
        raise ValueError("control and target channel sets overlap")
    w = _as_window(window)
    t = events.times_ns
    cm = np.isin(events.detector, control)
    tm = np.isin(events.detector, target)
    tc, dc = t[cm], events.detector[cm]
    tt, dt_ = t[tm], events.detector[tm]
    cbit = np.searchsorted(np.array(sorted(control)), dc)
    cbit = np.array([control.index(x) for x in sorted(control)])[cbit] if len(dc) else cbit
    tbit = np.array([target.index(x) for x in sorted(target)])[np.searchsorted(np.array(sorted(target)), dt_)] \
        if len(dt_) else np.empty(0, dtype=np.int64)
    lo = np.searchsorted(tt, tc + w.lo, side="left")
    hi = np.searchsorted(tt, tc + w.hi, side="right")
    n = hi - lo
    ci = np.repeat(np.arange(len(tc)), n)
    offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    ti = np.repeat(lo, n) + offs
    return Coincidences(cbit[ci].astype(np.int64), tbit[ti].astype(np.int64), tt[ti] - tc[ci], len(target))


# ---------------------------------------------------------------------------
# tables

@dataclass(eq=False)
class CountTable:
    """Raw coincidence counts over a labelled outcome basis plus expected accidentals."""

    labels: tuple
    raw: np.ndarray
    background: np.ndarray
    window: str = ""
    corrected: np.ndarray | None = None
    flagged: tuple = ()

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=float)
        self.background = np.zeros_like(self.raw) if self.background is None \
            else np.asarray(self.background, dtype=float)
        if np.any(self.raw < 0) or np.any(self.background < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> float:
        return float(self.raw.sum())

    def to_dict(self) -> dict:
        d = {"labels": list(self.labels), "raw": self.raw.tolist(),
             "background": self.background.tolist(), "window": self.window}
        if self.corrected is not None:
            d["corrected"] = self.corrected.tolist()
            d["flagged"] = list(self.flagged)
        return d


@dataclass(eq=False)
class ProbabilityTable:
    """Rows of outcome probabilities; every row sums to one."""

    labels: tuple
    p: np.ndarray
    rows: tuple = ("",)

    def __post_init__(self):
        self.p = np.atleast_2d(np.asarray(self.p, dtype=float))
        if np.any(self.p < 0):
            raise ValueError("probabilities must be non-negative")
        if not np.allclose(self.p.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("each row must sum to one")

    def row(self, k: int = 0) -> np.ndarray:
        return self.p[k]

    def to_dict(self) -> dict:
        return {"rows": list(self.rows), "labels": list(self.labels), "p": self.p.tolist()}


def count_table(coinc: Coincidences, window, sidebands: Sequence[Window] = (), labels=CELLS) -> CountTable:
    w = _as_window(window)
    raw = coinc.counts(w, len(labels))
    if sidebands:
        side = sum(coinc.counts(s, len(labels)) for s in sidebands)
        width = sum(s.width for s in sidebands)
        bg = side * (w.width / width)
    else:
        bg = np.zeros(len(labels))
    return CountTable(tuple(labels), raw, bg, f"[{w.lo:g}, {w.hi:g}] ns")


def background_correct(table: CountTable) -> CountTable:
    """Cell-wise raw minus background; cells where background exceeds raw are flagged."""
    corrected = table.raw - table.background
    flagged = tuple(table.labels[i] for i in np.flatnonzero(corrected < 0))
    if flagged:
        log.info("background exceeds raw counts in cells %s (%s)", flagged, table.window)
    return CountTable(table.labels, table.raw, table.background, table.window, corrected, flagged)


def _em(n: np.ndarray, b: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """EM for cell probabilities p under the multinomial model pi = f*p + b/N.

    ``n`` and ``b`` broadcast over leading batch axes; the last axis is the
    outcome basis. The signal fraction f is fixed at 1 - sum(b)/N.
    """
    n = np.asarray(n, dtype=float)
    b = np.broadcast_to(np.asarray(b, dtype=float), n.shape)
    N = n.sum(axis=-1, keepdims=True)
    if np.any(N <= 0):
        raise ValueError("all-zero counts")
    if not np.any(b):
        return n / N
    beta = b / N
    f = np.maximum(1.0 - beta.sum(axis=-1, keepdims=True), 1.0 / (N + 1.0))
    p = np.full(n.shape, 1.0 / n.shape[-1])
    ll = np.full(N.shape, -np.inf)
    active = np.ones(N.shape[:-1], dtype=bool)
    for _ in range(max_iter):
        pi = f * p + beta
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(pi > 0, f * p / pi, 0.0)
            w = n * r
            p_new = w / w.sum(axis=-1, keepdims=True)
            ll_new = np.sum(np.where(n > 0, n * np.log(f * p_new + beta), 0.0), axis=-1, keepdims=True)
        p = np.where(active[..., None], p_new, p)
        done = np.abs(ll_new - ll)[..., 0] < tol
        ll = np.where(active[..., None], ll_new, ll)
        active &= ~done
        if not active.any():
            break
    return p


def mle_normalize(table: CountTable, tol: float = 1e-10, max_iter: int = 100_000) -> ProbabilityTable:
    """Maximum-likelihood probabilities given raw counts and known background.

    With zero background this is exactly counts / total.
    """
    if table.total <= 0:
        raise ValueError("all-zero counts")
    p = _em(table.raw, table.background, tol, max_iter)
    if np.any(table.background):
        p = p / p.sum()
    return ProbabilityTable(table.labels, p)


def similarity(p, q) -> float:
    """sum(sqrt(p_i q_i)) / sqrt(sum(p_i) * sum(q_i)) over every cell."""
    if isinstance(p, ProbabilityTable) and isinstance(q, ProbabilityTable):
        if tuple(p.labels) != tuple(q.labels) or p.p.shape != q.p.shape:
            raise ValueError("tables are over different bases")
    pa = p.p if isinstance(p, ProbabilityTable) else np.asarray(p, dtype=float)
    qa = q.p if isinstance(q, ProbabilityTable) else np.asarray(q, dtype=float)
    if pa.shape != qa.shape:
        raise ValueError("tables are over different bases")
    return float(np.sum(np.sqrt(pa * qa)) / np.sqrt(pa.sum() * qa.sum()))


def _similarity_batch(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    axes = tuple(range(p.ndim - q.ndim, p.ndim))
    return np.sum(np.sqrt(p * q), axis=axes) / np.sqrt(p.sum(axis=axes) * q.sum())


# ---------------------------------------------------------------------------
# truth tables

@dataclass(eq=False)
class TruthTable:
    settings: tuple
    counts: dict                        # setting -> CountTable (background corrected)
    table: ProbabilityTable

    def similarity(self, ideal: np.ndarray = IDEAL_CNOT_TABLE) -> float:
        return similarity(self.table.p, ideal)

    @property
    def pairs(self) -> int:
        return int(sum(c.total for c in self.counts.values()))

    def to_dict(self) -> dict:
        return {"settings": list(self.settings), "table": self.table.to_dict(),
                "counts": {k: v.to_dict() for k, v in self.counts.items()}}


def truth_table_from_coincidences(coinc: Mapping[str, Coincidences], window=Window(0.0, 200.0),
                                  sidebands: Sequence[Window] = (), settings=CELLS) -> TruthTable:
    missing = [s for s in settings if s not in coinc]
    if missing:
        raise KeyError(f"missing input settings: {missing}")
    counts, rows = {}, []
    for s in settings:
        ct = background_correct(count_table(coinc[s], window, sidebands))
        counts[s] = ct
        rows.append(mle_normalize(ct).row())
    return TruthTable(tuple(settings), counts, ProbabilityTable(CELLS, np.array(rows), tuple(settings)))


def truth_table(events: Mapping[str, EventLog], control, target, window=Window(0.0, 200.0),
                sidebands: Sequence[Window] = (), settings=CELLS) -> TruthTable:
    """Per input setting: coincidences, background correction, MLE; rows stacked."""
    reach = max([abs(w.lo) for w in sidebands] + [abs(w.hi) for w in sidebands]
                + [abs(_as_window(window).lo), abs(_as_window(window).hi)])
    missing = [s for s in settings if s not in events]
    if missing:
        raise KeyError(f"missing input settings: {missing}")
    coinc = {s: coincidence_pairs(events[s], control, target, Window(0.0, reach)) for s in settings}
    return truth_table_from_coincidences(coinc, window, sidebands, settings)


@dataclass(eq=False)
class DelayCurve:
    centers: np.ndarray
    values: np.ndarray                  # NaN where the window was excluded
    pairs: np.ndarray                   # raw coincidences per window
    half_width: float
    excluded: tuple = ()
    flagged: tuple = ()
    extra: dict = field(default_factory=dict)
    background: np.ndarray | None = None    # expected accidentals per window

    def significance(self) -> np.ndarray:
        """Background-corrected coincidences over their Poisson error."""
        bg = np.zeros(self.pairs.shape) if self.background is None else self.background
        return (self.pairs - bg) / np.sqrt(np.maximum(self.pairs, 1))

    def populated(self, min_pairs: int = 0, min_significance: float = 0.0) -> np.ndarray:
        """Windows with an estimate, at least ``min_pairs`` coincidences and
        a background-corrected signal of at least ``min_significance`` sigma."""
        ok = np.isfinite(self.values) & (self.pairs >= min_pairs)
        if min_significance > 0:
            ok &= self.significance() >= min_significance
        return ok

    def to_dict(self) -> dict:
        d = {"center_ns": self.centers.tolist(),
             "value": [None if not np.isfinite(v) else float(v) for v in self.values],
             "pairs": self.pairs.tolist(), "half_width_ns": self.half_width,
             "excluded": list(self.excluded), "flagged": list(self.flagged)}
        d.update({k: [None if not np.isfinite(x) else float(x) for x in v] for k, v in self.extra.items()})
        return d


def similarity_vs_delay(coinc: Mapping[str, Coincidences], centers, half_width: float = 30.0,
                        sidebands: Sequence[Window] = (), ideal: np.ndarray = IDEAL_CNOT_TABLE,
                        settings=CELLS) -> DelayCurve:
    """Truth-table similarity re-estimated in sliding windows of detection-time difference.

    Windows where any input setting has no coincidences are excluded.
    """
    centers = np.asarray(centers, dtype=float)
    values = np.full(centers.shape, np.nan)
    pairs = np.zeros(centers.shape, dtype=np.int64)
    excluded = []
    for k, c in enumerate(centers):
        w = Window(float(c), half_width)
        n = [coinc[s].counts(w).sum() for s in settings]
        pairs[k] = int(sum(n))
        if min(n) == 0:
            excluded.append(float(c))
            continue
        values[k] = truth_table_from_coincidences(coinc, w, sidebands, settings).similarity(ideal)
    return DelayCurve(centers, values, pairs, half_width, tuple(excluded))


# ---------------------------------------------------------------------------
# Bell correlations

def pauli_expectation(p, signs=ZZ_SIGNS) -> float:
    """sum(s_i p_i) over the outcomes 00, 01, 10, 11."""
    pa = p.row() if isinstance(p, ProbabilityTable) else np.asarray(p, dtype=float)
    if pa.shape[-1] != 4:
        raise ValueError("need a four-outcome table")
    return float(np.dot(pa, np.asarray(signs, dtype=float)))


#: Outcome-to-eigenvalue sign per basis for the paper_verbatim convention.
#: Calibrated so the ideal simulated |psi+> maximises (-<ZZ> - <XX>)/sqrt(2);
#: see experiments.calibrate_verbatim_signs.
VERBATIM_SIGNS = {"zz": 1.0, "xx": -1.0}


@dataclass(frozen=True)
class FidelityBound:
    zz: float
    xx: float
    bound: float
    convention: str

    @property
    def entangled(self) -> bool:
        return self.bound > 0.5

    def to_dict(self) -> dict:
        return {"zz": self.zz, "xx": self.xx, "bound": self.bound,
                "convention": self.convention, "entangled": self.entangled}


def fidelity_bound(zz: float, xx: float, convention: str = "textbook_witness",
                   signs: Mapping[str, float] | None = None) -> FidelityBound:
    """Lower bound on the |psi+> fidelity from <Z(x)Z> and <X(x)X>.

    ``zz`` and ``xx`` use the standard mapping (rail 0 -> +1). The
    textbook witness is (<XX> - <ZZ>)/2. The paper_verbatim form evaluates
    (-<ZZ> - <XX>)/sqrt(2) after re-signing each correlation by ``signs``.
    """
    if abs(zz) > 1 + 1e-9 or abs(xx) > 1 + 1e-9:
        raise ValueError("expectation values must lie in [-1, 1]")
    if convention == "textbook_witness":
        return FidelityBound(zz, xx, 0.5 * (xx - zz), convention)
    if convention == "paper_verbatim":
        s = VERBATIM_SIGNS if signs is None else signs
        z, x = s["zz"] * zz, s["xx"] * xx
        return FidelityBound(z, x, (-z - x) / np.sqrt(2.0), convention)
    raise ValueError(f"unknown convention {convention!r}")


def correlations_from_coincidences(zz: Coincidences, xx: Coincidences, window, sidebands=()):
    """MLE outcome distributions and the two correlators in one window."""
    ctz = background_correct(count_table(zz, window, sidebands))
    ctx = background_correct(count_table(xx, window, sidebands))
    pz, px = mle_normalize(ctz), mle_normalize(ctx)
    return pz, px, pauli_expectation(pz), pauli_expectation(px), ctz, ctx


def fidelity_vs_delay(zz: Coincidences, xx: Coincidences, centers, half_width: float = 50.0,
                      sidebands: Sequence[Window] = (), min_pairs: int = 20,
                      convention: str = "textbook_witness") -> DelayCurve:
    """Fidelity bound per sliding window; windows under ``min_pairs`` are flagged."""
    centers = np.asarray(centers, dtype=float)
    values = np.full(centers.shape, np.nan)
    other = np.full(centers.shape, np.nan)
    pairs = np.zeros(centers.shape, dtype=np.int64)
    background = np.zeros(centers.shape)
    excluded, flagged = [], []
    alt = "paper_verbatim" if convention == "textbook_witness" else "textbook_witness"
    for k, c in enumerate(centers):
        w = Window(float(c), half_width)
        nz, nx = zz.counts(w).sum(), xx.counts(w).sum()
        pairs[k] = int(min(nz, nx))
        if nz == 0 or nx == 0:
            excluded.append(float(c))
            continue
        if min(nz, nx) < min_pairs:
            flagged.append(float(c))
        _, _, ezz, exx, ctz, ctx = correlations_from_coincidences(zz, xx, w, sidebands)
        background[k] = ctz.background.sum() if nz <= nx else ctx.background.sum()
        ezz, exx = float(np.clip(ezz, -1, 1)), float(np.clip(exx, -1, 1))
        values[k] = fidelity_bound(ezz, exx, convention).bound
        other[k] = fidelity_bound(ezz, exx, alt).bound
    return DelayCurve(centers, values, pairs, half_width, tuple(excluded), tuple(flagged), {alt: other},
                      background)


# ---------------------------------------------------------------------------
# uncertainty

def _resample(tables: Sequence[CountTable], n: int, rng: np.random.Generator) -> np.ndarray:
    out = []
    for t in tables:
        N = int(round(t.total))
        probs = t.raw / t.raw.sum()
        out.append(rng.multinomial(N, probs, size=n))
    return np.stack(out, axis=1).astype(float)      # (n, rows, cells)


def bootstrap_similarity(tables: Sequence[CountTable], ideal: np.ndarray = IDEAL_CNOT_TABLE,
                         n_resamples: int = 1000, seed=None, level: float = 0.6827) -> tuple[float, float]:
    """Multinomial bootstrap interval for the truth-table similarity."""
    rng = np.random.default_rng(seed)
    n = _resample(tables, n_resamples, rng)
    b = np.stack([t.background for t in tables])[None]
    p = _em(n, np.broadcast_to(b, n.shape))
    s = _similarity_batch(p, ideal)
    a = (1 - level) / 2
    return float(np.quantile(s, a)), float(np.quantile(s, 1 - a))


def bootstrap_expectation(table: CountTable, signs=ZZ_SIGNS, n_resamples: int = 1000, seed=None,
                          level: float = 0.6827) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    n = _resample([table], n_resamples, rng)[:, 0]
    p = _em(n, np.broadcast_to(table.background, n.shape))
    e = p @ np.asarray(signs, dtype=float)
    a = (1 - level) / 2
    return float(np.quantile(e, a)), float(np.quantile(e, 1 - a))


def bootstrap_fidelity(zz: CountTable, xx: CountTable, convention: str = "textbook_witness",
                       n_resamples: int = 1000, seed=None, level: float = 0.6827) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    n = _resample([zz, xx], n_resamples, rng)
    b = np.stack([zz.background, xx.background])[None]
    p = _em(n, np.broadcast_to(b, n.shape))
    ezz = p[:, 0] @ ZZ_SIGNS
    exx = p[:, 1] @ ZZ_SIGNS
    if convention == "textbook_witness":
        f = 0.5 * (exx - ezz)
    else:
        f = (-VERBATIM_SIGNS["zz"] * ezz - VERBATIM_SIGNS["xx"] * exx) / np.sqrt(2.0)
    a = (1 - level) / 2
    return float(np.quantile(f, a)), float(np.quantile(f, 1 - a))


# ---------------------------------------------------------------------------
# depolarised Bell states

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def depolarize(state: np.ndarray, lam: float) -> np.ndarray:
    """(1 - lam) |psi><psi| + lam I/4 for a two-qubit pure state."""
    psi = np.asarray(state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return (1 - lam) * np.outer(psi, psi.conj()) + lam * np.eye(4) / 4


def expectation(rho: np.ndarray, a: str, b: str) -> float:
    return float(np.real(np.trace(rho @ np.kron(PAULI[a], PAULI[b]))))


def threshold_crossing(x: np.ndarray, y: np.ndarray, level: float = 0.5) -> float:
    """First x where y falls through ``level`` (linear interpolation)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    below = np.flatnonzero(y <= level)
    if below.size == 0:
        return float("nan")
    k = below[0]
    if k == 0:
        return float(x[0])
    return float(x[k - 1] + (level - y[k - 1]) * (x[k] - x[k - 1]) / (y[k] - y[k - 1]))
