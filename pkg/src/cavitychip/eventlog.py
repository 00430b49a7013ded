"""Time-tagger event logs: one ``detector_id,timestamp_ps`` record per line.

The file starts with ``#`` header lines carrying ``key=value`` metadata
(config hash, seed, setting) followed by a column header.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

COLUMNS = "detector_id,timestamp_ps"


class DetectionEvent(NamedTuple):
    detector_id: int
    timestamp: int  # ps


@dataclass(eq=False)
class EventLog:
    detector: np.ndarray
    timestamp_ps: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detector = np.asarray(self.detector, dtype=np.int64)
        self.timestamp_ps = np.asarray(self.timestamp_ps, dtype=np.int64)
        if self.detector.shape != self.timestamp_ps.shape:
            raise ValueError("detector and timestamp arrays differ in length")
        self.meta = {str(k): str(v) for k, v in self.meta.items()}

    def __len__(self) -> int:
        return int(self.timestamp_ps.size)

    def __iter__(self):
        for d, t in zip(self.detector.tolist(), self.timestamp_ps.tolist()):
            yield DetectionEvent(d, t)

    def __eq__(self, other) -> bool:
        return (isinstance(other, EventLog) and np.array_equal(self.detector, other.detector)
                and np.array_equal(self.timestamp_ps, other.timestamp_ps) and self.meta == other.meta)

    @property
    def times_ns(self) -> np.ndarray:
        return self.timestamp_ps / 1000.0

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.timestamp_ps) >= 0))

    def select(self, detectors) -> "EventLog":
        mask = np.isin(self.detector, list(detectors))
        return EventLog(self.detector[mask], self.timestamp_ps[mask], dict(self.meta))

    def shifted(self, delays_ps: dict[int, int]) -> "EventLog":
        """Subtract a fixed delay from chosen detectors and re-sort."""
        t = self.timestamp_ps.copy()
        for det, d in delays_ps.items():
            t[self.detector == det] -= int(d)
        order = np.lexsort((self.detector, t))
        return EventLog(self.detector[order], t[order], dict(self.meta))

    @classmethod
    def from_events(cls, events, meta=None) -> "EventLog":
        events = list(events)
        d = [e[0] for e in events]
        t = [e[1] for e in events]
        return cls(np.array(d, dtype=np.int64), np.array(t, dtype=np.int64), dict(meta or {}))


def format_event_log(log: EventLog) -> str:
    buf = io.StringIO()
    for k in sorted(log.meta):
        buf.write(f"# {k}={log.meta[k]}\n")
    buf.write(COLUMNS + "\n")
    if len(log):
        np.savetxt(buf, np.column_stack([log.detector, log.timestamp_ps]), fmt="%d", delimiter=",")
    return buf.getvalue()


def write_event_log(path: str | Path, log: EventLog) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_event_log(log))
    return path


def parse_event_log(text: str) -> EventLog:
    meta = {}
    body = []
    seen_header = False
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        if not seen_header and line.replace(" ", "") == COLUMNS:
            seen_header = True
            continue
        body.append(line)
    if not body:
        return EventLog(np.empty(0, np.int64), np.empty(0, np.int64), meta)
    arr = np.loadtxt(body, delimiter=",", dtype=np.int64, ndmin=2)
    return EventLog(arr[:, 0], arr[:, 1], meta)


def read_event_log(path: str | Path) -> EventLog:
    return parse_event_log(Path(path).read_text())
