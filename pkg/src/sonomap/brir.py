"""Indexed binaural room impulse responses keyed by (azimuth, distance).

Azimuths follow the package convention: 0 deg straight ahead, positive
counter-clockwise (towards the listener's left), stored in (-180, 180].
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import MissingGridCell, SampleRateMismatch

GRID_AZIMUTHS = tuple(range(-177, 181, 3))
GRID_DISTANCES = tuple(round(0.4 * k, 1) for k in range(1, 11))
AZIMUTH_STEP = 3.0
DISTANCE_STEP = 0.4

SPEED_OF_SOUND = 343.0
HEAD_RADIUS = 0.0875


def signed_azimuth(az):
    """Wrap an azimuth in degrees into (-180, 180]."""
    a = math.fmod(float(az), 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def _key(az, dist):
    return (round(signed_azimuth(az) * 1000), round(float(dist) * 1000))


class BrirStore:
    """Read-only mapping from (azimuth_deg, distance_m) to an (L, 2) stereo IR."""

    def __init__(self, sample_rate):
        self.sample_rate = int(sample_rate)
        self._irs = {}

    def add(self, azimuth_deg, distance_m, ir):
        ir = np.asarray(ir, dtype=np.float64)
        if ir.ndim != 2 or ir.shape[1] != 2:
            raise ValueError(f"BRIR must be (L, 2), got {ir.shape}")
        key = _key(azimuth_deg, distance_m)
        if key in self._irs:
            raise KeyError(key)
        ir.setflags(write=False)
        self._irs[key] = ir

    def __contains__(self, cell):
        return _key(*cell) in self._irs

    def __len__(self):
        return len(self._irs)

    def get(self, azimuth_deg, distance_m):
        try:
            return self._irs[_key(azimuth_deg, distance_m)]
        except KeyError:
            raise MissingGridCell(azimuth_deg, distance_m) from None

    def cells(self):
        """Sorted (azimuth_deg, distance_m) pairs present in the store."""
        return [(a / 1000, d / 1000) for a, d in sorted(self._irs)]

    def first_missing_cell(self):
        for az in GRID_AZIMUTHS:
            for d in GRID_DISTANCES:
                if _key(az, d) not in self._irs:
                    return az, d
        return None

    @property
    def is_full_grid(self):
        return self.first_missing_cell() is None

    def require_full_grid(self):
        missing = self.first_missing_cell()
        if missing is not None:
            az, d = missing
            raise MissingGridCell(az, d, f"BRIR grid incomplete: first missing cell is azimuth {az} deg, distance {d} m")

    def check_sample_rate(self, rate, what="audio"):
        if int(rate) != self.sample_rate:
            raise SampleRateMismatch(f"{what} sample rate {rate} Hz != BRIR store {self.sample_rate} Hz")


def spherical_head_ir(azimuth_deg, distance_m, sample_rate, length=None, ild_db=6.0,
                      head_radius=HEAD_RADIUS, propagation_delay=True):
    """Two-impulse test BRIR: Woodworth interaural delay, 1/d gain and a level difference.

    The ear facing the source gets gain 1/d; the far ear is attenuated by
    ``ild_db * |sin(azimuth)|`` dB and delayed by the spherical-head ITD.
    A test fixture, not a model of any measured head.
    """
    az = math.radians(signed_azimuth(azimuth_deg))
    lateral = math.asin(min(1.0, abs(math.sin(az))))
    itd = head_radius / SPEED_OF_SOUND * (lateral + math.sin(lateral))
    base = distance_m / SPEED_OF_SOUND if propagation_delay else 0.0
    near_idx = int(round(base * sample_rate))
    far_idx = int(round((base + itd) * sample_rate))
    if length is None:
        length = far_idx + 1
    gain = 1.0 / max(distance_m, 1e-6)
    far_gain = gain * 10.0 ** (-ild_db * abs(math.sin(az)) / 20.0)
    ir = np.zeros((max(length, far_idx + 1), 2))
    near, far = (0, 1) if math.sin(az) >= 0 else (1, 0)
    ir[near_idx, near] += gain
    ir[far_idx, far] += far_gain
    return ir


def synthetic_grid_store(sample_rate=48000, ild_db=6.0, identity=False):
    """Full 120 x 10 grid of synthetic BRIRs.

    ``identity=True`` gives a unit impulse at t=0 in both ears for every cell.
    """
    store = BrirStore(sample_rate)
    for az in GRID_AZIMUTHS:
        for d in GRID_DISTANCES:
            if identity:
                ir = np.zeros((1, 2))
                ir[0] = 1.0
            else:
                ir = spherical_head_ir(az, d, sample_rate, length=int(0.02 * sample_rate), ild_db=ild_db)
            store.add(az, d, ir)
    return store


def write_brir_dataset(directory, store):
    """Write every IR as a stereo float32 WAV plus ``manifest.json``; returns the manifest path."""
    from .dataio.wav import AudioBuffer, write_wav

    directory = Path(directory)
    (directory / "wav").mkdir(parents=True, exist_ok=True)
    entries = []
    for az, d in store.cells():
        name = f"wav/brir_az{az:+08.3f}_d{d:.3f}.wav"
        write_wav(directory / name, AudioBuffer(store.sample_rate, store.get(az, d).astype(np.float32)))
        entries.append({"azimuth_deg": az, "distance_m": d, "wav": name})
    manifest = {
        "sample_rate": store.sample_rate,
        "convention": {"azimuth_zero": "front", "positive": "ccw"},
        "entries": entries,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    return path
