from __future__ import annotations

import json
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sonomap.dataio import AudioBuffer, parse_brir_manifest, parse_ply, read_wav, write_ply, write_wav
from sonomap.dataio.wav import write_pcm16
from sonomap.errors import ParseError, SampleRateMismatch, has_position

FUZZ = settings(max_examples=300, deadline=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])


def seeds(tmp):
    rng = np.random.default_rng(0)
    out = {}
    write_ply(tmp / "b.ply", rng.normal(size=(6, 3)))
    out["ply_bin"] = (tmp / "b.ply").read_bytes()
    write_ply(tmp / "a.ply", rng.normal(size=(4, 3)), binary=False)
    out["ply_ascii"] = (tmp / "a.ply").read_bytes()
    write_wav(tmp / "f.wav", AudioBuffer(8000, rng.uniform(-1, 1, (16, 2)).astype(np.float32)))
    out["wav_float"] = (tmp / "f.wav").read_bytes()
    write_pcm16(tmp / "p.wav", AudioBuffer(8000, rng.uniform(-1, 1, 20)))
    out["wav_pcm"] = (tmp / "p.wav").read_bytes()
    write_wav(tmp / "ir.wav", AudioBuffer(8000, np.eye(2, dtype=np.float32)))
    doc = {"sample_rate": 8000, "convention": {"azimuth_zero": "front", "positive": "ccw"},
           "entries": [{"azimuth_deg": 0, "distance_m": 0.4, "wav": "ir.wav"},
                       {"azimuth_deg": 3, "distance_m": 0.8, "wav": "ir.wav"}]}
    out["manifest"] = json.dumps(doc, indent=1).encode()
    return out


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("seeds")
    return tmp, seeds(tmp)


mutation = st.lists(
    st.tuples(st.sampled_from(["flip", "set", "insert", "delete", "truncate"]),
              st.integers(0, 10_000), st.integers(0, 255)),
    min_size=1, max_size=6)


def mutate(data, ops):
    b = bytearray(data)
    for op, pos, val in ops:
        if not b:
            break
        i = pos % len(b)
        if op == "flip":
            b[i] ^= 1 << (val % 8)
        elif op == "set":
            b[i] = val
        elif op == "insert":
            b.insert(i, val)
        elif op == "delete":
            del b[i]
        else:
            del b[i:]
    return bytes(b)


def check(fn, path):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fn(path)
    except (ParseError, SampleRateMismatch) as err:
        assert has_position(err), f"{type(err).__name__} without position: {err}"
        assert str(path) in str(err) or getattr(err, "path", None) is not None


@FUZZ
@given(st.sampled_from(["ply_bin", "ply_ascii"]), mutation)
def test_ply_fuzz(corpus, kind, ops):
    tmp, data = corpus
    p = tmp / "fuzz.ply"
    p.write_bytes(mutate(data[kind], ops))
    check(parse_ply, p)


@FUZZ
@given(st.sampled_from(["wav_float", "wav_pcm"]), mutation)
def test_wav_fuzz(corpus, kind, ops):
    tmp, data = corpus
    p = tmp / "fuzz.wav"
    p.write_bytes(mutate(data[kind], ops))
    check(read_wav, p)


@FUZZ
@given(mutation)
def test_manifest_fuzz(corpus, ops):
    tmp, data = corpus
    p = tmp / "fuzz.json"
    p.write_bytes(mutate(data["manifest"], ops))
    check(parse_brir_manifest, p)


@FUZZ
@given(mutation)
def test_manifest_with_fuzzed_wav(corpus, ops):
    tmp, data = corpus
    (tmp / "fz_ir.wav").write_bytes(mutate(data["wav_float"], ops))
    p = tmp / "fuzz2.json"
    p.write_text(data["manifest"].decode().replace("ir.wav", "fz_ir.wav"))
    check(parse_brir_manifest, p)


@FUZZ
@given(st.binary(max_size=400))
def test_random_bytes(corpus, blob):
    tmp, _ = corpus
    for name, fn in (("r.ply", parse_ply), ("r.wav", read_wav), ("r.json", parse_brir_manifest)):
        p = tmp / name
        p.write_bytes(blob)
        check(fn, p)


def test_seeds_parse(corpus):
    tmp, data = corpus
    (tmp / "s.ply").write_bytes(data["ply_bin"])
    assert len(parse_ply(tmp / "s.ply")) == 6
    (tmp / "s.wav").write_bytes(data["wav_float"])
    assert read_wav(tmp / "s.wav").channels == 2
    (tmp / "ok.json").write_bytes(data["manifest"])
    assert len(parse_brir_manifest(tmp / "ok.json")) == 2


@pytest.mark.parametrize("name", ["bad\u0000.wav", "", "missing.wav", "."])
def test_manifest_bad_wav_names(corpus, name):
    tmp, data = corpus
    doc = json.loads(data["manifest"])
    doc["entries"][1]["wav"] = name
    p = tmp / "names.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ParseError) as ei:
        parse_brir_manifest(p)
    assert ei.value.pointer == "/entries/1"
