"""Command-line entry point: ``sonomap {run,sonify,synth-gen,edf-compare,eval}``."""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .brir import synthetic_grid_store, write_brir_dataset
from .dataio import (
    AudioBuffer,
    parse_brir_manifest,
    parse_trajectory,
    read_circle_csv,
    read_wav,
    write_circle_csv,
    write_cylinder_csv,
    write_events_csv,
    write_metrics_csv,
    write_ply,
    write_trajectory,
    write_wav,
)
from .errors import SonomapError
from .metrics import FrameMetrics, coverage, edf_bearing_compare, rmse
from .pipeline import DatasetSource, RunConfig, SceneSource, circle_path, iter_run, run
from .raster import RasterParams, segment_ground
from .sonifier import SweepConfig, default_tap, default_woosh, sonify_circle
from .synth import CameraModel, SceneSpec, analytic_circle, analytic_cylinder, pan_poses, render_depth_frame


class CliError(SonomapError):
    pass


def _vec3(text):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return np.array([float(p) for p in parts])


def _frames(text):
    """``START:STOP`` (either side optional) or a single index."""
    if ":" not in text:
        i = int(text)
        return i, i + 1
    a, b = text.split(":", 1)
    return (int(a) if a else 0), (int(b) if b else None)


def _add_camera(p):
    g = p.add_argument_group("synthetic camera")
    g.add_argument("--hfov", type=float, default=90.0, help="horizontal FOV in degrees")
    g.add_argument("--vfov", type=float, default=90.0, help="vertical FOV in degrees")
    g.add_argument("--cols", type=int, default=160)
    g.add_argument("--rows", type=int, default=120)
    g.add_argument("--max-depth", type=float, default=10.0)
    g.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian range noise (m)")
    g.add_argument("--seed", type=int, default=0, help="seed for all randomness")


def _add_poses(p):
    g = p.add_argument_group("synthetic trajectory")
    g.add_argument("--pan", type=int, default=72, help="number of poses in an in-place 360 deg pan")
    g.add_argument("--position", type=_vec3, default=None, help="pan position x,y,z (default: room center at 1.2 m)")
    g.add_argument("--start-yaw", type=float, default=0.0)
    g.add_argument("--pitch", type=float, default=0.0)


def _add_raster(p):
    g = p.add_argument_group("raster")
    g.add_argument("--sensor-height", type=float, default=1.2, help="sensor height above the floor (m)")
    g.add_argument("--r-max", type=float, default=10.0)
    g.add_argument("--optical-axis", choices=["+z", "+x"], default="+z")
    g.add_argument("--cylinder-reference", choices=["sensor", "floor"], default="sensor")


def _add_run_inputs(p):
    g = p.add_argument_group("input (a scene, or a trajectory plus cloud directory)")
    g.add_argument("--scene", type=Path, help="scene JSON to render frames from")
    g.add_argument("--trajectory", type=Path, help="TUM trajectory file")
    g.add_argument("--clouds", type=Path, help="directory of {timestamp:.6f}.ply sensor-frame clouds")
    g.add_argument("--gt-scene", type=Path, help="scene JSON used only as ground truth for a dataset run")
    m = p.add_argument_group("mapping")
    m.add_argument("--voxel-size", type=float, default=0.05)
    m.add_argument("--truncation", type=float, default=None, help="truncation band (default 3 x voxel size)")
    m.add_argument("--w-max", type=float, default=100.0)
    m.add_argument("--carve-rate", type=float, default=1.0)
    m.add_argument("--no-footprint", action="store_true", help="bin voxel centers only, without footprint spreading")
    m.add_argument("--strict-surface", action="store_true",
                   help="surface is |sdf| < vs/2 only, without zero-crossing completion")
    m.add_argument("--frames", type=_frames, default=(0, None), help="frame range START:STOP")
    m.add_argument("--stride", type=int, default=1)
    _add_raster(p)
    _add_camera(p)
    _add_poses(p)


def _params(a):
    return RasterParams(r_max=a.r_max, sensor_height=a.sensor_height, optical_axis=a.optical_axis,
                        cylinder_reference=a.cylinder_reference)


def _camera(a):
    return CameraModel(a.hfov, a.vfov, a.cols, a.rows, a.max_depth)


def _scene_poses(scene, a):
    if a.trajectory is not None:
        return [r.pose for r in parse_trajectory(a.trajectory)]
    pos = a.position
    if pos is None:
        pos = scene.room_min + scene.room_size / 2
        pos[2] = scene.room_min[2] + a.sensor_height
    return pan_poses(pos, a.pan, a.start_yaw, a.pitch)


def _source(a):
    if a.scene is not None:
        if a.clouds is not None:
            raise CliError("give either --scene or --clouds, not both")
        scene = SceneSpec.load(a.scene)
        return SceneSource(scene, _scene_poses(scene, a), _camera(a), a.noise_sigma, a.seed)
    if a.trajectory is None or a.clouds is None:
        raise CliError("need --scene, or both --trajectory and --clouds")
    gt = SceneSpec.load(a.gt_scene) if a.gt_scene is not None else None
    return DatasetSource(a.trajectory, a.clouds, gt)


def _run_config(a, record_timing=False):
    start, stop = a.frames
    return RunConfig(
        voxel_size=a.voxel_size, params=_params(a), truncation_band=a.truncation, w_max=a.w_max,
        carve_rate=a.carve_rate, footprint=not a.no_footprint, zero_crossing=not a.strict_surface,
        start=start, stop=stop, stride=a.stride, record_timing=record_timing,
    )


def _fmt(v, spec=".4f"):
    return "-" if v is None else format(v, spec)


def cmd_run(a):
    cfg = _run_config(a, a.record_timing)
    source = _source(a)

    def report(res):
        m = res.metrics
        if not a.quiet:
            print(f"frame {m.frame_index:5d}  rmse {_fmt(m.rmse_m)}  coverage {_fmt(m.coverage, '.3f')}"
                  f"  cyl rmse {_fmt(m.rmse_cyl_m)}  cyl coverage {_fmt(m.coverage_cyl, '.3f')}")

    result = run(source, cfg, a.out, on_frame=report)
    print(f"{len(result.metrics)} frames written to {a.out}")
    return 0


def _frame_circle(a):
    """Circle for ``--frame``: from a stored CSV or by replaying the pipeline up to it."""
    if a.circle is not None:
        return read_circle_csv(a.circle)
    if a.run_dir is not None:
        path = circle_path(a.run_dir, a.frame)
        if not path.is_file():
            raise CliError(f"frame {a.frame} has no stored circle ({path})")
        return read_circle_csv(path)
    result = _replay_to(a)
    return result.circle


def _replay_to(a):
    source = _source(a)
    if not 0 <= a.frame < len(source):
        raise CliError(f"frame {a.frame} does not exist (source has {len(source)} frames)")
    cfg = _run_config(a)
    cfg.stop = a.frame + 1
    last = None
    for res in iter_run(source, cfg):
        last = res
    if last is None or last.frame.index != a.frame:
        raise CliError(f"frame {a.frame} is not selected by --frames/--stride")
    return last


def _load_sound(path, default, rate):
    if path is None:
        return default(rate)
    buf = read_wav(path)
    # stereo source sounds are averaged down to the mono signal the renderer expects
    return AudioBuffer(buf.sample_rate, buf.samples.mean(axis=1))


def cmd_sonify(a):
    store = parse_brir_manifest(a.brir, require_full_grid=a.require_full_grid)
    tap = _load_sound(a.tap, default_tap, store.sample_rate)
    woosh = _load_sound(a.woosh, default_woosh, store.sample_rate)
    cfg = SweepConfig(cadence_s=a.cadence, distance_scale=a.distance_scale, tap_sound=tap, woosh_sound=woosh)
    circle = _frame_circle(a)
    audio, events = sonify_circle(circle, store, cfg)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    write_wav(a.out, audio)
    events_path = a.events or a.out.with_suffix(".events.csv")
    write_events_csv(events_path, events)
    taps = sum(e.kind == "tap" for e in events)
    print(f"{len(events)} events ({taps} taps, {len(events) - taps} wooshes) -> {a.out}, {events_path}")
    return 0


def cmd_synth_gen(a):
    scene = SceneSpec.load(a.scene)
    poses = _scene_poses(scene, a)
    params = _params(a)
    camera = _camera(a)
    out = a.out
    for sub in ("clouds", "gt/circles", "gt/cylinders"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    stamped = []
    for i, pose in enumerate(poses):
        ts = i * a.frame_period
        rng = np.random.default_rng([a.seed, i])
        cloud = render_depth_frame(scene, pose, camera, i, a.noise_sigma, rng)
        write_ply(out / "clouds" / f"{ts:.6f}.ply", cloud.points)
        write_circle_csv(out / "gt" / "circles" / f"circle_{i:05d}.csv", analytic_circle(scene, pose, params, i))
        write_cylinder_csv(out / "gt" / "cylinders" / f"cylinder_{i:05d}.csv",
                           analytic_cylinder(scene, pose, params, i))
        stamped.append((ts, pose))
    write_trajectory(out / "trajectory.txt", stamped)
    (out / "scene.json").write_text(json.dumps(scene.to_dict(), indent=1) + "\n", encoding="utf-8")
    if a.brir_out is not None:
        store = synthetic_grid_store(a.sample_rate)
        write_brir_dataset(a.brir_out, store)
        write_wav(a.brir_out / "tap.wav", default_tap(a.sample_rate))
        write_wav(a.brir_out / "woosh.wav", default_woosh(a.sample_rate, seed=a.seed))
    print(f"{len(poses)} frames written to {out}")
    return 0


def cmd_edf_compare(a):
    res = _replay_to(a)
    surface = segment_ground(res.surface, res.frame.pose.t[2], _params(a))
    comp = edf_bearing_compare(res.circle, surface, res.frame.pose, radius=a.radius)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    rows = list(comp.rows())
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        cols = list(rows[0]) if rows else ["bin"]
        w = csv.DictWriter(fh, cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    print(f"{len(rows)} bins compared -> {a.out}")
    return 0


def cmd_eval(a):
    est = sorted(Path(a.estimate).glob("circle_*.csv"))
    if not est:
        raise CliError(f"no circle_*.csv files in {a.estimate}")
    metrics = []
    for path in est:
        truth_path = Path(a.truth) / path.name
        if not truth_path.is_file():
            raise CliError(f"no ground truth for {path.name} in {a.truth}")
        e, t = read_circle_csv(path), read_circle_csv(truth_path)
        idx = int(path.stem.split("_")[-1])
        try:
            cov = coverage(e, t)
        except ValueError:
            cov = None
        metrics.append(FrameMetrics(idx, rmse_m=rmse(e, t), coverage=cov))
    if a.out is not None:
        write_metrics_csv(a.out, metrics, with_timing=False)
    vals = [m.rmse_m for m in metrics if m.rmse_m is not None]
    covs = [m.coverage for m in metrics if m.coverage is not None]
    print(f"frames {len(metrics)}  mean rmse {_fmt(float(np.mean(vals)) if vals else None)}"
          f"  final coverage {_fmt(covs[-1] if covs else None, '.3f')}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="sonomap", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="replay frames through fusion and rasterization")
    _add_run_inputs(r)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--record-timing", action="store_true",
                   help="fill elapsed_ms columns (makes outputs run-dependent)")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sonify", help="render one binaural sweep for a frame")
    _add_run_inputs(s)
    s.add_argument("--frame", type=int, default=0)
    s.add_argument("--circle", type=Path, help="circle CSV to sonify instead of replaying")
    s.add_argument("--run-dir", type=Path, help="output directory of an earlier `run`")
    s.add_argument("--brir", type=Path, required=True, help="BRIR manifest JSON")
    s.add_argument("--require-full-grid", action="store_true")
    s.add_argument("--tap", type=Path, help="tap sound WAV (default: synthetic click)")
    s.add_argument("--woosh", type=Path, help="woosh sound WAV (default: synthetic noise)")
    s.add_argument("--distance-scale", type=float, default=1.0)
    s.add_argument("--cadence", type=float, default=0.1, help="seconds per sector")
    s.add_argument("--out", type=Path, required=True, help="output WAV")
    s.add_argument("--events", type=Path, help="event log CSV (default: next to the WAV)")
    s.set_defaults(func=cmd_sonify)

    g = sub.add_parser("synth-gen", help="render a synthetic dataset with ground-truth rasters")
    g.add_argument("--scene", type=Path, required=True)
    g.add_argument("--trajectory", type=Path, help="poses to render from (default: in-place pan)")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--frame-period", type=float, default=0.1)
    g.add_argument("--brir-out", type=Path, help="also write a synthetic BRIR grid and sounds here")
    g.add_argument("--sample-rate", type=int, default=48000)
    _add_raster(g)
    _add_camera(g)
    _add_poses(g)
    g.set_defaults(func=cmd_synth_gen)

    e = sub.add_parser("edf-compare", help="compare circle bearings with EDF gradients for a frame")
    _add_run_inputs(e)
    e.add_argument("--frame", type=int, required=True)
    e.add_argument("--radius", type=float, default=1.0)
    e.add_argument("--out", type=Path, required=True)
    e.set_defaults(func=cmd_edf_compare)

    v = sub.add_parser("eval", help="score stored circle CSVs against ground-truth CSVs")
    v.add_argument("--estimate", type=Path, required=True, help="directory of circle_*.csv")
    v.add_argument("--truth", type=Path, required=True, help="directory of matching ground-truth CSVs")
    v.add_argument("--out", type=Path, help="metrics CSV to write")
    v.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SonomapError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
