from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sonomap.brir import GRID_AZIMUTHS, GRID_DISTANCES, BrirStore, synthetic_grid_store
from sonomap.dataio.wav import AudioBuffer
from sonomap.errors import MissingGridCell, SampleRateMismatch
from sonomap.raster import CircularRaster
from sonomap.sonifier import (
    TAP,
    WOOSH,
    SweepConfig,
    aggregate_sectors,
    map_distance,
    mix_events,
    pitch_class,
    pitch_shift,
    plan_sweep,
    render_sweep,
    select_brir,
    snap_to_grid,
    sonify_circle,
)

SR = 8000


@pytest.fixture(scope="module")
def identity_store():
    return synthetic_grid_store(SR, identity=True)


@pytest.fixture(scope="module")
def head_store():
    return synthetic_grid_store(SR, ild_db=9.0)


def sector_min_oracle(ranges, s):
    """Plain loop: strictly smaller range wins, so the first (lowest angle) minimum is kept."""
    best = None
    for k in range(10 * s, 10 * s + 10):
        r = ranges[k]
        if not math.isnan(r) and (best is None or r < best[1]):
            best = (k, r)
    return best


def test_aggregate_examples():
    r = np.full(360, np.nan)
    r[5], r[7] = 2.0, 1.5
    secs = aggregate_sectors(CircularRaster(r))
    assert (secs[0].azimuth_deg, secs[0].range_m) == (7.0, 1.5)
    assert not secs[1].known
    secs = aggregate_sectors(CircularRaster(np.full(360, 3.0)))
    assert [s.azimuth_deg for s in secs] == [10.0 * i for i in range(36)]
    assert all(s.range_m == 3.0 for s in secs)


@given(st.lists(st.one_of(st.just(float("nan")), st.floats(0.05, 9.0), st.sampled_from([1.0, 2.0])),
                min_size=360, max_size=360))
def test_aggregate_matches_oracle(vals):
    r = np.array(vals)
    for s, sec in enumerate(aggregate_sectors(CircularRaster(r))):
        best = sector_min_oracle(r, s)
        if best is None:
            assert not sec.known
        else:
            assert (sec.azimuth_deg, sec.range_m) == (float(best[0]), best[1])


def test_map_distance_examples():
    assert map_distance(5.0) == 4.0
    assert map_distance(0.2) == 0.4
    assert map_distance(2.0) == 2.0
    assert map_distance(2.0, SweepConfig(distance_scale=0.5)) == 1.0
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            map_distance(bad)


@given(st.floats(1e-3, 50), st.floats(1e-3, 50))
def test_map_distance_monotone_idempotent(a, b):
    lo, hi = sorted((a, b))
    assert map_distance(lo) <= map_distance(hi)
    assert map_distance(map_distance(a)) == map_distance(a)
    assert 0.4 <= map_distance(a) <= 4.0


def test_pitch_class_thresholds():
    assert pitch_class(1.0) == -4
    assert pitch_class(2.0) == 0
    assert pitch_class(3.0) == 4
    assert pitch_class(1.5) == 0 and pitch_class(2.5) == 0
    assert pitch_class(np.nextafter(1.5, 0)) == -4
    assert pitch_class(np.nextafter(2.5, 3)) == 4


def test_snap_examples():
    assert snap_to_grid(44, 1.1) == (45, 1.2)
    assert snap_to_grid(359, 0.4) == (0, 0.4)
    assert snap_to_grid(181.5, 4.0) == (-177, 4.0)
    assert snap_to_grid(1.5, 0.6) == (3, 0.8)  # both ties go up
    assert snap_to_grid(180.0, 4.0) == (180, 4.0)
    assert snap_to_grid(178.6, 2.0) == (180, 2.0)


def snap_oracle(az, d):
    """Brute force: nearest grid member by circular distance, ties to the larger azimuth/distance."""
    def circ(a, g):
        return abs((a - g + 180) % 360 - 180)
    sa = az - 360 if az > 180 else az
    best_a = min(GRID_AZIMUTHS, key=lambda g: (round(circ(sa, g), 9), -((g - sa + 540) % 360)))
    best_d = min(GRID_DISTANCES, key=lambda g: (round(abs(d - g), 9), -g))
    return best_a, best_d


@given(st.integers(0, 3599), st.integers(40, 400))
def test_snap_matches_brute_force(a10, d100):
    az, d = a10 / 10, d100 / 100
    assert snap_to_grid(az, d) == snap_oracle(az, d)


def test_select_brir_total():
    store = synthetic_grid_store(SR, identity=True)
    seen = set()
    az = np.arange(3600) / 10
    ds = np.arange(40, 401) / 100
    for a in az:
        for d in ds[::9]:
            seen.add(snap_to_grid(a, d))
    for d in ds:
        seen.add(snap_to_grid(0.0, d))
    grid = {(a, d) for a in GRID_AZIMUTHS for d in GRID_DISTANCES}
    assert seen == grid
    for cell in grid:
        select_brir(store, *cell)


def test_select_brir_missing_cell():
    store = BrirStore(SR)
    store.add(0, 0.4, np.ones((1, 2)))
    with pytest.raises(MissingGridCell):
        select_brir(store, 44, 1.1)


def test_pitch_shift_zero_is_identical():
    buf = AudioBuffer(SR, np.random.default_rng(0).standard_normal(100))
    assert pitch_shift(buf, 0) is buf


def peak_freq(x, sr):
    n = len(x)
    spec = np.abs(np.fft.rfft(x * np.hanning(n), n=16 * n))
    return np.argmax(spec) * sr / (16 * n)


@pytest.mark.parametrize("semitones", [4, -4])
def test_pitch_shift_spectral_peak(semitones):
    sr = 48000
    t = np.arange(sr) / sr
    out = pitch_shift(AudioBuffer(sr, np.sin(2 * np.pi * 440 * t)), semitones)
    f = 2 ** (semitones / 12)
    assert len(out) == math.floor(sr / f)
    assert abs(peak_freq(out.mono(), sr) - 440 * 2 ** (semitones / 12)) < 2.0


def test_pitch_shift_linear_interp_oracle():
    x = np.array([0.0, 1.0, 4.0, 9.0, 16.0, 25.0])
    out = pitch_shift(AudioBuffer(SR, x), 12).mono()  # factor 2
    assert np.allclose(out, [0.0, 4.0, 16.0])
    out = pitch_shift(AudioBuffer(SR, x), -12).mono()  # factor 0.5
    assert len(out) == 12
    assert np.allclose(out[:3], [0.0, 0.5, 1.0])


def test_all_unknown_sweep(identity_store):
    cfg = SweepConfig(tap_sound=AudioBuffer(SR, np.ones(10)), woosh_sound=AudioBuffer(SR, np.full(50, 0.1)))
    audio, events = sonify_circle(CircularRaster(), identity_store, cfg)
    assert len(events) == 36 and all(e.kind == WOOSH and e.distance_m is None for e in events)
    assert [e.brir_cell[1] for e in events] == [4.0] * 36
    assert len(audio) == int(round(35 * 0.1 * SR)) + 50
    assert np.allclose(np.diff([e.onset_s for e in events]), 0.1)


def test_single_known_sector_identity(identity_store):
    tap = AudioBuffer(SR, np.sin(np.arange(200) / 3.0) * 0.5)
    cfg = SweepConfig(tap_sound=tap, woosh_sound=AudioBuffer(SR, np.zeros(10)))
    r = np.full(360, np.nan)
    r[123] = 1.0
    audio, events = sonify_circle(CircularRaster(r), identity_store, cfg)
    taps = [e for e in events if e.kind == TAP]
    assert len(taps) == 1 and taps[0].sector == 12 and taps[0].semitones == -4
    shifted = pitch_shift(tap, -4).mono()
    expect = np.zeros((len(audio), 2))
    start = int(round(1.2 * SR))
    expect[start:start + len(shifted)] = shifted[:, None]
    assert np.allclose(audio.samples, expect, atol=1e-12)


def test_ild_left_source(head_store):
    tap = AudioBuffer(SR, np.hanning(64))
    cfg = SweepConfig(tap_sound=tap, woosh_sound=AudioBuffer(SR, np.zeros(4)))
    r = np.full(360, np.nan)
    r[90] = 2.0
    sectors = aggregate_sectors(CircularRaster(r))
    events = [e for e in plan_sweep(sectors, cfg) if e.kind == TAP]
    out = mix_events(events, head_store, cfg).samples
    el, er = np.sum(out[:, 0] ** 2), np.sum(out[:, 1] ** 2)
    assert 10 * np.log10(el / er) == pytest.approx(9.0, abs=0.01)
    # mirror: a source on the right favours the right ear
    r = np.full(360, np.nan)
    r[270] = 2.0
    events = [e for e in plan_sweep(aggregate_sectors(CircularRaster(r)), cfg) if e.kind == TAP]
    out = mix_events(events, head_store, cfg).samples
    assert np.sum(out[:, 1] ** 2) > np.sum(out[:, 0] ** 2)


def test_convolution_linearity(head_store):
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(300), rng.standard_normal(300)
    woosh = AudioBuffer(SR, rng.standard_normal(80))
    r = np.where(rng.random(360) < 0.5, rng.uniform(0.3, 5, 360), np.nan)
    sectors = aggregate_sectors(CircularRaster(r))

    def render(x):
        return render_sweep(sectors, head_store, SweepConfig(tap_sound=AudioBuffer(SR, x), woosh_sound=woosh),
                            limit=False).samples

    wsum = render(a + b)
    w_only = render(np.zeros(300))
    assert np.max(np.abs(wsum - (render(a) + render(b) - w_only))) < 1e-6


def test_limiter_only_when_needed(identity_store):
    loud = SweepConfig(tap_sound=AudioBuffer(SR, np.full(20, 0.9)), woosh_sound=AudioBuffer(SR, np.full(20, 0.9)))
    sectors = aggregate_sectors(CircularRaster(np.full(360, 2.0)))
    quiet = render_sweep(sectors, identity_store, loud)
    assert np.max(np.abs(quiet.samples)) == pytest.approx(0.9)
    overlap = SweepConfig(cadence_s=1 / SR, tap_sound=AudioBuffer(SR, np.full(20, 0.9)),
                          woosh_sound=AudioBuffer(SR, np.full(20, 0.9)))
    limited = render_sweep(sectors, identity_store, overlap)
    assert np.max(np.abs(limited.samples)) == pytest.approx(0.99)


def test_sample_rate_mismatch(identity_store):
    cfg = SweepConfig(tap_sound=AudioBuffer(SR * 2, np.ones(10)), woosh_sound=AudioBuffer(SR, np.ones(10)))
    with pytest.raises(SampleRateMismatch):
        sonify_circle(CircularRaster(np.full(360, 2.0)), identity_store, cfg)


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(sector_deg=7)
    with pytest.raises(ValueError):
        SweepConfig(cadence_s=0)
    with pytest.raises(ValueError):
        SweepConfig(direction="cw")


@given(st.lists(st.one_of(st.just(float("nan")), st.floats(0.01, 12.0)), min_size=360, max_size=360))
def test_plan_invariants(vals):
    r = np.array(vals)
    events = plan_sweep(aggregate_sectors(CircularRaster(r)))
    assert len(events) == 36
    assert np.all(np.diff([e.onset_s for e in events]) > 0)
    for s, e in enumerate(events):
        known = not np.all(np.isnan(r[10 * s:10 * s + 10]))
        assert (e.kind == TAP) == known
        if e.kind == TAP:
            assert 0.4 <= e.distance_m <= 4.0 and e.semitones in (-4, 0, 4)
        else:
            assert e.distance_m is None and e.semitones == 0
