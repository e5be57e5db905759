"""Photon streams from routed emitters and g2 coincidence statistics.

Random numbers come from Philox-4x64 keyed by ``(seed, substream)``; raw
64-bit words are mapped to doubles here (top 53 bits) so the streams do not
depend on numpy's distribution code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import StatisticsError

DETECTOR_DEAD_TIME_S = 50e-9
MIN_PLATEAU_COUNTS = 100
_STREAMS_PER_SOURCE = 4  # emission, background, routing, jitter


@dataclass(frozen=True)
class EmitterSource:
    channel: str
    lifetime_ns: float
    signal_rate: float  # counts/s
    background_rate: float = 0.0

    def __post_init__(self):
        if not self.lifetime_ns > 0:
            raise ValueError("lifetime must be positive")
        if self.signal_rate < 0 or self.background_rate < 0:
            raise ValueError("rates must be >= 0")
        if self.signal_rate * self.lifetime_ns * 1e-9 >= 1.0:
            raise ValueError("signal rate must be below 1 / lifetime")

    @property
    def rho(self) -> float:
        total = self.signal_rate + self.background_rate
        return self.signal_rate / total if total > 0 else 0.0


@dataclass(frozen=True)
class PhotonRecord:
    detector: str
    timestamps: np.ndarray  # s, ascending

    def __len__(self):
        return self.timestamps.size


class CounterStream:
    """Philox-4x64 substream keyed by (seed, stream id)."""

    def __init__(self, seed: int, stream: int):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream id must be non-negative")
        key = (int(seed) & (2**64 - 1)) | ((int(stream) & (2**64 - 1)) << 64)
        self._bits = np.random.Philox(key=key)

    def raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(n)

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits of each word."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)

    def exponential(self, n: int, mean: float) -> np.ndarray:
        return -mean * np.log1p(-self.uniform(n))


def _renewal_times(stream: CounterStream, duration: float, mean_gap: float, dead: float = 0.0):
    """Event times in [0, duration) with gaps ``dead + Exp(mean_gap - dead)``."""
    rate = 1.0 / mean_gap
    chunks, t0 = [], 0.0
    while True:
        n = int(duration * rate * 1.1 + 10.0 * np.sqrt(duration * rate + 1.0) + 16)
        gaps = dead + stream.exponential(n, mean_gap - dead)
        times = t0 + np.cumsum(gaps)
        chunks.append(times[times < duration])
        if times[-1] >= duration:
            break
        t0 = times[-1]
    return np.concatenate(chunks)


def apply_dead_time(times: np.ndarray, dead: float) -> np.ndarray:
    """Non-paralyzable dead time: drop events within ``dead`` of the last kept one."""
    if times.size < 2 or dead <= 0:
        return times
    keep = np.ones(times.size, dtype=bool)
    for i in np.flatnonzero(np.diff(times) < dead) + 1:
        j = i - 1
        while not keep[j]:
            j -= 1
        if times[i] - times[j] < dead:
            keep[i] = False
    return times[keep]


def simulate_photon_streams(sources, routing: dict, detectors, duration_s: float, seed: int,
                            dead_time_s: float = DETECTOR_DEAD_TIME_S, jitter_s: float = 0.0):
    """Detected photons per detector.

    ``routing`` maps a source channel to the power fraction reaching each
    detector (missing mass is lost). Each source emits a renewal process with
    dead time equal to its lifetime plus Poisson background; every photon is
    routed independently.
    """
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    detectors = tuple(detectors)
    hits = {d: [] for d in detectors}
    for idx, src in enumerate(sources):
        base = idx * _STREAMS_PER_SOURCE
        fractions = np.array([routing.get(src.channel, {}).get(d, 0.0) for d in detectors])
        if np.any(fractions < 0) or fractions.sum() > 1.0 + 1e-12:
            raise ValueError(f"routing fractions for {src.channel!r} must be a sub-distribution")
        parts = []
        if src.signal_rate > 0:
            parts.append(_renewal_times(CounterStream(seed, base), duration_s,
                                        1.0 / src.signal_rate, src.lifetime_ns * 1e-9))
        if src.background_rate > 0:
            parts.append(_renewal_times(CounterStream(seed, base + 1), duration_s,
                                        1.0 / src.background_rate))
        if not parts:
            continue
        times = np.sort(np.concatenate(parts), kind="stable")
        u = CounterStream(seed, base + 2).uniform(times.size)
        which = np.searchsorted(np.cumsum(fractions), u, side="right")
        if jitter_s > 0:
            # Box-Muller from two uniform substreams
            j = CounterStream(seed, base + 3).uniform(2 * times.size)
            z = np.sqrt(-2.0 * np.log1p(-j[::2])) * np.cos(2.0 * np.pi * j[1::2])
            times = times + jitter_s * z
        for k, d in enumerate(detectors):
            hits[d].append(times[which == k])
    records = []
    for d in detectors:
        t = np.sort(np.concatenate(hits[d])) if hits[d] else np.empty(0)
        records.append(PhotonRecord(d, apply_dead_time(t, dead_time_s)))
    return records


@dataclass(frozen=True)
class G2Histogram:
    tau_s: np.ndarray  # bin centres
    counts: np.ndarray
    normalized: np.ndarray
    plateau: float  # mean counts per plateau bin
    plateau_counts: int


def g2_histogram(rec_a: PhotonRecord, rec_b: PhotonRecord, bin_width_s: float, tau_range_s: float,
                 plateau_from_s: float | None = None) -> G2Histogram:
    """Start-multistop cross-correlation histogram of ``t_b - t_a``.

    Bins are centred on multiples of ``bin_width_s`` up to ``+-tau_range_s``.
    Normalization uses bins with ``|tau| >= plateau_from_s`` (default half
    the range).
    """
    if not bin_width_s > 0:
        raise ValueError("bin width must be positive")
    nb = int(round(tau_range_s / bin_width_s))
    if nb < 2:
        raise ValueError("tau range must span at least two bins")
    half = (nb + 0.5) * bin_width_s
    ta, tb = rec_a.timestamps, rec_b.timestamps
    lo = np.searchsorted(tb, ta - half, side="left")
    hi = np.searchsorted(tb, ta + half, side="left")
    diffs = []
    span = hi - lo
    for m in range(int(span.max(initial=0))):
        sel = span > m
        diffs.append(tb[lo[sel] + m] - ta[sel])
    d = np.concatenate(diffs) if diffs else np.empty(0)
    edges = (np.arange(-nb, nb + 2) - 0.5) * bin_width_s
    counts, _ = np.histogram(d, bins=edges)
    tau = np.arange(-nb, nb + 1) * bin_width_s
    start = 0.5 * tau_range_s if plateau_from_s is None else plateau_from_s
    plateau_mask = np.abs(tau) >= start
    plateau_total = int(counts[plateau_mask].sum())
    if plateau_total < MIN_PLATEAU_COUNTS:
        raise StatisticsError(
            f"only {plateau_total} coincidences in the plateau; need {MIN_PLATEAU_COUNTS}")
    plateau = plateau_total / int(plateau_mask.sum())
    return G2Histogram(tau, counts, counts / plateau, plateau, plateau_total)


def g2_zero(hist: G2Histogram) -> tuple[float, float]:
    """Central-bin g2 and its Poisson standard error (plateau error included)."""
    c0 = int(hist.counts[hist.tau_s.size // 2])
    g = c0 / hist.plateau
    err = np.sqrt(max(c0, 1)) / hist.plateau
    err = float(np.hypot(err, g / np.sqrt(hist.plateau_counts)))
    return float(g), err


def expected_g2_zero(rho: float) -> float:
    return 1.0 - rho**2
