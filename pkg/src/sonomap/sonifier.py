"""Binaural sweep rendering of a circular raster.

The circle is grouped into 36 sectors of 10 deg. Each sector becomes one
event in a counter-clockwise sweep starting at the heading: a pitch-cued tap
filtered by the BRIR nearest to the sector's closest return, or a "woosh" when
nothing in the sector is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .brir import GRID_AZIMUTHS, GRID_DISTANCES, signed_azimuth
from .dataio.wav import AudioBuffer
from .errors import SampleRateMismatch
from .raster import N_BINS

MIN_DISTANCE = 0.4
MAX_DISTANCE = 4.0
NEAR_THRESHOLD = 1.5
FAR_THRESHOLD = 2.5
PITCH_STEP = 4
WOOSH_DISTANCE = 4.0
LIMIT_PEAK = 0.99

TAP = "tap"
WOOSH = "woosh"


def default_tap(sample_rate=48000, duration=0.03, freq=1800.0):
    """Short decaying tone burst; a stand-in when no tap recording is supplied."""
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioBuffer(sample_rate, 0.5 * np.sin(2 * np.pi * freq * t) * np.exp(-t / (duration / 5)))


def default_woosh(sample_rate=48000, duration=0.08, seed=0):
    """Band-limited noise swell used for unknown sectors."""
    n = int(round(duration * sample_rate))
    noise = np.random.default_rng(seed).standard_normal(n)
    smooth = np.convolve(noise, np.ones(8) / 8, mode="same")
    return AudioBuffer(sample_rate, 0.2 * smooth * np.hanning(n))


@dataclass
class SweepConfig:
    sector_deg: int = 10
    cadence_s: float = 0.1
    distance_scale: float = 1.0
    tap_sound: AudioBuffer | None = None
    woosh_sound: AudioBuffer | None = None
    direction: str = "ccw"

    def __post_init__(self):
        if self.sector_deg <= 0 or N_BINS % self.sector_deg:
            raise ValueError(f"sector_deg must divide {N_BINS}, got {self.sector_deg}")
        if not self.cadence_s > 0:
            raise ValueError("cadence_s must be positive")
        if not self.distance_scale > 0:
            raise ValueError("distance_scale must be positive")
        if self.direction != "ccw":
            raise ValueError("only counter-clockwise sweeps are supported")

    @property
    def n_sectors(self):
        return N_BINS // self.sector_deg

    def sounds(self, sample_rate):
        tap = self.tap_sound if self.tap_sound is not None else default_tap(sample_rate)
        woosh = self.woosh_sound if self.woosh_sound is not None else default_woosh(sample_rate)
        return tap, woosh


@dataclass(frozen=True)
class SectorSample:
    """Closest known bin of a sector; ``azimuth_deg``/``range_m`` are None if unknown."""

    sector: int
    azimuth_deg: float | None
    range_m: float | None

    @property
    def known(self):
        return self.range_m is not None


@dataclass(frozen=True)
class SonoEvent:
    onset_s: float
    sector: int
    kind: str
    azimuth_deg: float
    distance_m: float | None
    semitones: int
    brir_cell: tuple = field(default=(), compare=False)


def aggregate_sectors(circle, cfg=None):
    cfg = cfg or SweepConfig()
    ranges = np.asarray(getattr(circle, "ranges", circle), dtype=np.float64)
    if ranges.shape != (N_BINS,):
        raise ValueError(f"circle must have {N_BINS} bins, got {ranges.shape}")
    out = []
    w = cfg.sector_deg
    for s in range(cfg.n_sectors):
        chunk = ranges[s * w:(s + 1) * w]
        if np.all(np.isnan(chunk)):
            out.append(SectorSample(s, None, None))
            continue
        k = int(np.nanargmin(chunk))  # first occurrence = lowest angle
        out.append(SectorSample(s, float(s * w + k), float(chunk[k])))
    return out


def map_distance(range_m, cfg=None):
    scale = 1.0 if cfg is None else cfg.distance_scale
    if not range_m > 0:
        raise ValueError(f"range must be positive, got {range_m}")
    return min(max(float(range_m) * scale, MIN_DISTANCE), MAX_DISTANCE)


def pitch_class(distance_m):
    if distance_m < NEAR_THRESHOLD:
        return -PITCH_STEP
    if distance_m > FAR_THRESHOLD:
        return PITCH_STEP
    return 0


def snap_to_grid(azimuth_deg, distance_m):
    """Nearest (grid azimuth, grid distance); ties go to +azimuth and the larger distance.

    Snapping is done in integer milli-units so that exact ties (e.g. 1.5 deg
    from two grid azimuths) are decided by the rule, not by float rounding.
    """
    a = round(signed_azimuth(azimuth_deg) * 1000)
    k = (a + 1500) // 3000
    az = 3 * k
    if az <= -180:
        az += 360
    d = round(float(distance_m) * 1000)
    j = min(max((d + 200) // 400, 1), len(GRID_DISTANCES))
    return int(az), GRID_DISTANCES[j - 1]


def select_brir(store, azimuth_deg, distance_m):
    az, d = snap_to_grid(azimuth_deg, distance_m)
    return store.get(az, d)


def pitch_shift(buf, semitones):
    """Resample by 2**(semitones/12) with linear interpolation (changes duration)."""
    if semitones == 0:
        return buf
    x = buf.samples[:, 0] if buf.samples.ndim == 2 else buf.samples
    n = len(x)
    f = 2.0 ** (semitones / 12.0)
    m = int(math.floor(n / f))
    pos = np.arange(m) * f
    y = np.interp(pos, np.arange(n), x.astype(np.float64))
    return AudioBuffer(buf.sample_rate, y.astype(buf.samples.dtype, copy=False))


def plan_sweep(sectors, cfg=None):
    """Event schedule for one sweep: one event per sector, ``cadence_s`` apart."""
    cfg = cfg or SweepConfig()
    if len(sectors) != cfg.n_sectors:
        raise ValueError(f"expected {cfg.n_sectors} sectors, got {len(sectors)}")
    events = []
    for s, sec in enumerate(sectors):
        onset = s * cfg.cadence_s
        if sec.known:
            d = map_distance(sec.range_m, cfg)
            events.append(SonoEvent(onset, s, TAP, sec.azimuth_deg, d, pitch_class(d),
                                    snap_to_grid(sec.azimuth_deg, d)))
        else:
            center = s * cfg.sector_deg + cfg.sector_deg / 2
            events.append(SonoEvent(onset, s, WOOSH, float(center), None, 0,
                                    snap_to_grid(center, WOOSH_DISTANCE)))
    return events


def _event_audio(event, store, tap, woosh):
    src = pitch_shift(tap, event.semitones) if event.kind == TAP else woosh
    ir = store.get(*event.brir_cell)
    x = src.samples[:, 0].astype(np.float64)
    return np.stack([fftconvolve(x, ir[:, 0]), fftconvolve(x, ir[:, 1])], axis=1)


def mix_events(events, store, cfg=None, limit=True):
    cfg = cfg or SweepConfig()
    sr = store.sample_rate
    tap, woosh = cfg.sounds(sr)
    for name, snd in (("tap", tap), ("woosh", woosh)):
        if snd.sample_rate != sr:
            raise SampleRateMismatch(f"{name} sound is {snd.sample_rate} Hz, BRIR store is {sr} Hz")
    parts = []
    for ev in events:
        start = int(round(ev.onset_s * sr))
        parts.append((start, _event_audio(ev, store, tap, woosh)))
    total = max((s + len(a) for s, a in parts), default=0)
    out = np.zeros((total, 2))
    for start, audio in parts:
        out[start:start + len(audio)] += audio
    if limit:
        peak = float(np.max(np.abs(out), initial=0.0))
        if peak > 1.0:
            out *= LIMIT_PEAK / peak
    return AudioBuffer(sr, out)


def render_sweep(sectors, store, cfg=None, limit=True):
    """Stereo rendering of one counter-clockwise sweep."""
    return mix_events(plan_sweep(sectors, cfg), store, cfg, limit=limit)


def sonify_circle(circle, store, cfg=None):
    """Convenience: aggregate, plan and render; returns (audio, events)."""
    cfg = cfg or SweepConfig()
    events = plan_sweep(aggregate_sectors(circle, cfg), cfg)
    return mix_events(events, store, cfg), events


__all__ = [
    "SweepConfig", "SectorSample", "SonoEvent", "aggregate_sectors", "map_distance",
    "pitch_class", "snap_to_grid", "select_brir", "pitch_shift", "plan_sweep",
    "mix_events", "render_sweep", "sonify_circle", "default_tap", "default_woosh",
    "GRID_AZIMUTHS",
]
