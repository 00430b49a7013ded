"""Two-photon interference resolved in detection time.

Wavepackets are sampled on a uniform time grid (ns). The amplitude that
enters every interference term is ``xi(t) * exp(1j * detuning * t)``.
Integrals use the trapezoidal rule on the grid.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .optics import is_unitary

DEFAULT_DT = 1.0
DEFAULT_WINDOW = 1000.0


def default_grid(window: float = DEFAULT_WINDOW, dt: float = DEFAULT_DT) -> np.ndarray:
    n = int(round(window / dt))
    return np.arange(-n, n + 1) * dt


@dataclass(frozen=True, eq=False)
class Wavepacket:
    times: np.ndarray
    envelope: np.ndarray
    support: float
    offset: float = 0.0
    polarization: str = "H"
    detuning: float = 0.0

    def __post_init__(self):
        if self.polarization not in ("H", "V"):
            raise ValueError(f"polarization must be 'H' or 'V', got {self.polarization!r}")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def amplitude(self) -> np.ndarray:
        return self.envelope * np.exp(1j * self.detuning * self.times)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.envelope) ** 2

    def norm(self) -> float:
        return float(np.trapezoid(self.intensity, self.times))

    def with_(self, **changes) -> "Wavepacket":
        return replace(self, **changes)


def default_envelope(T: float = 400.0, t0: float = 0.0, times: np.ndarray | None = None,
                     polarization: str = "H", detuning: float = 0.0) -> Wavepacket:
    """Half-sine envelope sqrt(2/T) sin(pi (t - t0) / T) on [t0, t0 + T]."""
    if T <= 0:
        raise ValueError("support must be positive")
    times = default_grid() if times is None else np.asarray(times, dtype=float)
    u = times - t0
    inside = (u >= 0) & (u <= T)
    xi = np.where(inside, np.sqrt(2.0 / T) * np.sin(np.pi * np.clip(u, 0, T) / T), 0.0)
    # renormalise so the trapezoid norm is exact on this grid
    xi = xi / np.sqrt(np.trapezoid(xi**2, times))
    return Wavepacket(times, xi.astype(complex), T, t0, polarization, detuning)


def _same_grid(a: Wavepacket, b: Wavepacket) -> None:
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise ValueError("wavepackets are sampled on different grids")


def overlap(a: Wavepacket, b: Wavepacket) -> complex:
    _same_grid(a, b)
    if a.polarization != b.polarization:
        return 0j
    return complex(np.trapezoid(np.conj(a.amplitude) * b.amplitude, a.times))


def detuning_for_overlap(overlap_sq: float, packet: Wavepacket) -> float:
    """Smallest relative detuning (rad/ns) giving |<a|b>|^2 = ``overlap_sq``."""
    if not 0.0 < overlap_sq <= 1.0:
        raise ValueError("target overlap must lie in (0, 1]")
    if overlap_sq == 1.0:
        return 0.0

    def f(d):
        return abs(overlap(packet, packet.with_(detuning=packet.detuning + d))) ** 2 - overlap_sq

    hi = 1e-3
    while f(hi) > 0:
        hi *= 1.5
        if hi > 10:
            raise ValueError("overlap target not reachable by detuning")
    return brentq(f, 0.0, hi, xtol=1e-14)


# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JointDensity:
    """P_ij(t1, t2) for a photon at output i at t1 and one at output j at t2.

    ``densities[(i, j)]`` is indexed ``[t1, t2]`` on ``times`` (i <= j). For
    i == j the full plane counts each unordered pair twice and carries the
    1/2 symmetry factor.
    """

    times: np.ndarray
    densities: dict

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(self.densities)

    def total(self, pair: tuple[int, int]) -> float:
        P = self.densities[tuple(pair)]
        return float(np.trapezoid(np.trapezoid(P, self.times, axis=1), self.times))

    def totals(self) -> dict[tuple[int, int], float]:
        return {p: self.total(p) for p in self.densities}

    def sampler(self) -> "PairSampler":
        return PairSampler(self)


def two_photon_density(U: np.ndarray, in_modes: tuple[int, int], packets: tuple[Wavepacket, Wavepacket],
                       out_modes=None) -> JointDensity:
    """Joint detection-time densities for one photon in each of ``in_modes``.

    Same polarization: amplitudes of the two orderings add. Orthogonal
    polarization: their probabilities add.
    """
    U = np.asarray(U, dtype=complex)
    if not is_unitary(U, 1e-9):
        raise ValueError("two_photon_density needs a unitary matrix")
    k, l = in_modes
    if k == l:
        raise ValueError("input modes must differ")
    pk, pl = packets
    _same_grid(pk, pl)
    nz = np.flatnonzero((np.abs(pk.envelope) > 0) | (np.abs(pl.envelope) > 0))
    lo, hi = max(nz[0] - 1, 0), min(nz[-1] + 2, len(pk.times))
    times = pk.times[lo:hi]
    ak, al = pk.amplitude[lo:hi], pl.amplitude[lo:hi]
    outs = range(U.shape[0]) if out_modes is None else out_modes
    coherent = pk.polarization == pl.polarization
    X = np.outer(ak, al)                       # photon k at t1, photon l at t2
    if not coherent:
        Ik, Il = np.abs(X) ** 2, np.abs(X.T) ** 2
    dens = {}
    for i, j in itertools.combinations_with_replacement(sorted(outs), 2):
        a, b = U[i, k] * U[j, l], U[i, l] * U[j, k]
        sym = 2.0 if i == j else 1.0
        if coherent:
            P = np.abs(a * X + b * X.T) ** 2
        else:
            P = abs(a) ** 2 * Ik + abs(b) ** 2 * Il
        dens[(i, j)] = P / sym
    return JointDensity(times, dens)


def coincidence_vs_tau(d: JointDensity, pair: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """C(tau) = integral of P_ij(t, t + tau) dt, for tau = t2 - t1 on the grid."""
    P = d.densities[tuple(pair)]
    n = P.shape[0]
    lags = np.arange(-(n - 1), n)
    C = np.array([np.trapezoid(np.diagonal(P, offset=k), dx=d.dt) if n - abs(k) > 1
                  else np.diagonal(P, offset=k).sum() * d.dt for k in lags])
    return lags * d.dt, C


def hom_visibility(c_parallel, c_orthogonal, taus=None) -> float:
    """V = 1 - (integral of C_parallel) / (integral of C_orthogonal)."""
    c_parallel = np.asarray(c_parallel, dtype=float)
    c_orthogonal = np.asarray(c_orthogonal, dtype=float)
    if c_parallel.ndim == 0:
        num, den = float(c_parallel), float(c_orthogonal)
    elif taus is None:
        num, den = np.trapezoid(c_parallel), np.trapezoid(c_orthogonal)
    else:
        num, den = np.trapezoid(c_parallel, taus), np.trapezoid(c_orthogonal, taus)
    if den == 0:
        raise ValueError("orthogonal-polarization coincidences integrate to zero")
    return float(1.0 - num / den)


def _permanent(M: np.ndarray) -> complex:
    n = M.shape[0]
    if n == 0:
        return 1.0 + 0j
    return complex(sum(np.prod([M[i, s[i]] for i in range(n)]) for s in itertools.permutations(range(n))))


def permanent_oracle(U: np.ndarray, n, m) -> float:
    """|Perm(U[m, n])|^2 / (prod n! prod m!) for indistinguishable photons.

    ``n`` and ``m`` are occupation tuples over the modes. Restricted to two
    photons, which is all this package needs.
    """
    n, m = tuple(int(x) for x in n), tuple(int(x) for x in m)
    if sum(n) != sum(m):
        return 0.0
    if sum(n) > 2:
        raise NotImplementedError("permanent oracle supports at most two photons")
    cols = [k for k, c in enumerate(n) for _ in range(c)]
    rows = [k for k, c in enumerate(m) for _ in range(c)]
    sub = np.asarray(U)[np.ix_(rows, cols)]
    norm = np.prod([math.factorial(c) for c in n]) * np.prod([math.factorial(c) for c in m])
    return float(abs(_permanent(sub)) ** 2 / norm)


# ---------------------------------------------------------------------------
# sampling

class PairSampler:
    """Draws (out_i, out_j, t1, t2) from a JointDensity.

    Grid cells carry mass P * dt^2; the sampled time is jittered uniformly
    inside the cell and clipped to the grid.
    """

    def __init__(self, d: JointDensity):
        self.times = d.times
        self.dt = d.dt
        self.pairs = np.array(d.pairs, dtype=int)
        flat = np.concatenate([d.densities[p].ravel() for p in d.pairs])
        self.cdf = np.cumsum(flat)
        self.cell = d.densities[d.pairs[0]].size
        self.side = d.densities[d.pairs[0]].shape[1]
        self.mass = float(self.cdf[-1] * self.dt**2)

    def sample(self, n: int, rng: np.random.Generator):
        idx = np.searchsorted(self.cdf, rng.random(n) * self.cdf[-1], side="right")
        idx = np.minimum(idx, self.cdf.size - 1)
        which, rem = np.divmod(idx, self.cell)
        r1, r2 = np.divmod(rem, self.side)
        jitter = (rng.random((2, n)) - 0.5) * self.dt
        lo, hi = self.times[0], self.times[-1]
        t1 = np.clip(self.times[r1] + jitter[0], lo, hi)
        t2 = np.clip(self.times[r2] + jitter[1], lo, hi)
        return self.pairs[which, 0], self.pairs[which, 1], t1, t2


def sample_single(U: np.ndarray, in_mode: int, packet: Wavepacket, n: int, rng: np.random.Generator):
    """Output mode and detection time for ``n`` lone photons entering ``in_mode``."""
    probs = np.abs(np.asarray(U)[:, in_mode]) ** 2
    probs = probs / probs.sum()
    modes = rng.choice(len(probs), size=n, p=probs)
    cdf = np.cumsum(packet.intensity)
    k = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    k = np.minimum(k, cdf.size - 1)
    t = packet.times[k] + (rng.random(n) - 0.5) * packet.dt
    t = np.clip(t, packet.offset, packet.offset + packet.support)
    return modes, t
