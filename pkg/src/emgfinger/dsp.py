"""EMG signal conditioning: bandpass, mains notch bank, sliding RMS, MVC normalization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import signal


class FilterDesignError(ValueError):
    """Raised for invalid band edges or filter orders."""


class StreamError(ValueError):
    """Raised when a stream call does not match the chain's channel state."""


@dataclass
class FilterChain:
    """Cascade of second-order sections with per-channel streaming state.

    One instance owns one stream: state persists between calls and is reset
    with reset(). sos rows are (b0, b1, b2, a0, a1, a2) with a0 == 1.
    """

    sample_rate: float
    sos: np.ndarray
    n_channels: int = 2
    _zi: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.sos = np.atleast_2d(np.asarray(self.sos, dtype=float))
        if self.sos.shape[1] != 6:
            raise FilterDesignError("sos rows must have 6 coefficients")

    def reset(self, n_channels: int | None = None) -> None:
        if n_channels is not None:
            self.n_channels = n_channels
        self._zi = np.zeros((self.sos.shape[0], 2, self.n_channels))

    def process_block(self, x: np.ndarray) -> np.ndarray:
        """Filter a (n_samples, n_channels) block, carrying state forward."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_channels:
            raise StreamError(
                f"expected {self.n_channels} channels, got {x.shape[1]}"
            )
        if self._zi is None:
            self.reset()
        y, self._zi = signal.sosfilt(self.sos, x, axis=0, zi=self._zi)
        return y

    def process_sample(self, sample: np.ndarray) -> np.ndarray:
        """Filter a single multichannel sample (streaming per-frame path)."""
        return self.process_block(np.asarray(sample, dtype=float)[None, :])[0]

    def is_stable(self) -> bool:
        """All section poles strictly inside the unit circle."""
        for sec in self.sos:
            poles = np.roots(sec[3:6])
            if np.any(np.abs(poles) >= 1.0):
                return False
        return True

    def frequency_response(self, freqs: np.ndarray) -> np.ndarray:
        """Complex response of the cascade at the given frequencies (Hz)."""
        w = 2 * np.pi * np.asarray(freqs, dtype=float) / self.sample_rate
        _, h = signal.sosfreqz(self.sos, worN=w)
        return h

    def to_json(self) -> str:
        sections = [
            {"b0": s[0], "b1": s[1], "b2": s[2], "a1": s[4], "a2": s[5]}
            for s in self.sos.tolist()
        ]
        return json.dumps(
            {"sample_rate": self.sample_rate, "sections": sections},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "FilterChain":
        doc = json.loads(text)
        sos = np.array(
            [
                [s["b0"], s["b1"], s["b2"], 1.0, s["a1"], s["a2"]]
                for s in doc["sections"]
            ]
        )
        return cls(sample_rate=float(doc["sample_rate"]), sos=sos)


def design_bandpass(
    sample_rate: float, low: float, high: float, order: int = 4
) -> FilterChain:
    """Butterworth bandpass of the given overall order, as an SOS cascade.

    `order` is the overall bandpass order; it must be even, and the cascade
    has order/2 biquad sections.
    """
    nyq = sample_rate / 2.0
    if not (0 < low < high < nyq):
        raise FilterDesignError(
            f"invalid band [{low}, {high}] for fs={sample_rate}"
        )
    if order < 2 or order % 2 != 0:
        raise FilterDesignError("bandpass order must be a positive even number")
    sos = signal.butter(
        order // 2, [low, high], btype="bandpass", fs=sample_rate, output="sos"
    )
    return FilterChain(sample_rate=sample_rate, sos=sos)


def design_notch_bank(
    sample_rate: float, base: float = 50.0, quality: float = 30.0
) -> FilterChain:
    """Cascade of biquad notches at every multiple of `base` below Nyquist.

    `quality` is the quality factor of the base-frequency notch; harmonics use
    the same absolute bandwidth (base/quality), so high-order notches stay as
    narrow as the fundamental and mid-harmonic content is preserved.
    """
    if base <= 0 or base >= sample_rate / 2:
        raise FilterDesignError(f"invalid notch base {base} for fs={sample_rate}")
    bandwidth = base / quality
    rows = []
    freq = base
    while freq < sample_rate / 2:
        b, a = signal.iirnotch(freq, freq / bandwidth, fs=sample_rate)
        rows.append(np.concatenate([b, a]))
        freq += base
    return FilterChain(sample_rate=sample_rate, sos=np.array(rows))


def filter_stream(chain: FilterChain, frame: "EmgFrame") -> "EmgFrame":
    """Run one EMG frame through the chain, advancing its streaming state."""
    return EmgFrame(frame.timestamp, chain.process_sample(frame.channels))


@dataclass(frozen=True)
class EmgFrame:
    """One raw EMG sample: channel 0 flexor, channel 1 extensor."""

    timestamp: float
    channels: np.ndarray

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=float)
        if ch.shape != (2,):
            raise ValueError("EmgFrame carries exactly 2 channels")
        object.__setattr__(self, "channels", ch)


class RmsWindow:
    """Trailing-window RMS over a multichannel stream, emitting on hop boundaries.

    Emits nothing until one full window has been seen (warm-up). Each emit
    recomputes sqrt(mean(x^2)) over the stored buffer directly, so streaming
    output matches the batch formula exactly.
    """

    def __init__(
        self,
        length: float,
        hop: float,
        sample_rate: float,
        n_channels: int = 2,
    ):
        if length <= 0 or hop <= 0:
            raise ValueError("window length and hop must be positive")
        self.length = length
        self.hop = hop
        self.sample_rate = sample_rate
        self.n_samples = max(1, int(round(length * sample_rate)))
        self.hop_samples = max(1, int(round(hop * sample_rate)))
        self.n_channels = n_channels
        self._buf = np.zeros((self.n_samples, n_channels))
        self._pos = 0
        self._seen = 0
        self._since_hop = 0

    @property
    def warmed_up(self) -> bool:
        return self._seen >= self.n_samples

    def update(self, sample: np.ndarray) -> np.ndarray | None:
        """Push one sample; return per-channel RMS on hop boundaries, else None."""
        self._buf[self._pos] = sample
        self._pos = (self._pos + 1) % self.n_samples
        self._seen += 1
        self._since_hop += 1
        if self._since_hop >= self.hop_samples:
            self._since_hop = 0
            if self.warmed_up:
                return np.sqrt(np.mean(self._buf**2, axis=0))
        return None

    def update_block(self, block: np.ndarray) -> list[np.ndarray]:
        """Push a (n, channels) block; return all RMS vectors emitted."""
        out = []
        for row in np.atleast_2d(block):
            rms = self.update(row)
            if rms is not None:
                out.append(rms)
        return out


def batch_rms(x: np.ndarray) -> np.ndarray:
    """sqrt(sum(x^2)/N) per channel over a full (n, channels) window."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.sqrt(np.sum(x**2, axis=0) / x.shape[0])


@dataclass(frozen=True)
class NormalizationScale:
    """Per-channel MVC maxima for RMS features plus the maximum fingertip force."""

    rms_max: np.ndarray
    force_max: float
    clip_high: float = 1.5

    def __post_init__(self):
        rms_max = np.asarray(self.rms_max, dtype=float)
        if np.any(rms_max <= 0) or self.force_max <= 0:
            raise ValueError("normalization maxima must be positive")
        object.__setattr__(self, "rms_max", rms_max)

    def normalize(self, rms: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(rms, dtype=float) / self.rms_max, 0.0, self.clip_high)

    def normalize_force(self, force: float | np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(force, dtype=float) / self.force_max, 0.0, self.clip_high)


def normalize(features: np.ndarray, scale: NormalizationScale) -> np.ndarray:
    return scale.normalize(features)


def load_emg_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a `t,flexor,extensor` CSV into (timestamps, (n, 2) samples)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["t", "flexor", "extensor"]:
            raise ValueError(f"unexpected EMG CSV header: {header}")
        rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader]
    data = np.array(rows, dtype=float).reshape(-1, 3)
    t = data[:, 0]
    if np.any(np.diff(t) <= 0):
        raise ValueError("EMG timestamps must be strictly increasing")
    return t, data[:, 1:3]


def save_emg_csv(path, t: np.ndarray, x: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "flexor", "extensor"])
        for ti, (f, e) in zip(t, x):
            writer.writerow([repr(float(ti)), repr(float(f)), repr(float(e))])


def extract_features(
    x: np.ndarray,
    sample_rate: float,
    window: float,
    hop: float,
    bandpass: FilterChain | None = None,
    notch: FilterChain | None = None,
    t0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Offline pipeline: filter a whole recording, then window RMS features.

    Returns (timestamps of window trailing edges, (m, channels) RMS array).
    Fresh filter state per call; warm-up windows are dropped, matching the
    streaming path.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if bandpass is None:
        bandpass = design_bandpass(sample_rate, 20.0, 200.0, 4)
    if notch is None:
        notch = design_notch_bank(sample_rate, 50.0, 30.0)
    bandpass.reset(x.shape[1])
    notch.reset(x.shape[1])
    y = notch.process_block(bandpass.process_block(x))

    n_win = max(1, int(round(window * sample_rate)))
    n_hop = max(1, int(round(hop * sample_rate)))
    ends = np.arange(n_hop, y.shape[0] + 1, n_hop)
    ends = ends[ends >= n_win]
    feats = np.array([batch_rms(y[e - n_win : e]) for e in ends])
    times = t0 + ends / sample_rate
    return times, feats.reshape(len(ends), x.shape[1])
