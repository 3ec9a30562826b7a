import json

import numpy as np
import pytest

from ScopeSync.constants import Modality
from ScopeSync.core.types import Channel, FrameSample
from ScopeSync.exceptions import InvalidArgumentError, LowConfidenceError
from ScopeSync.flow.lucas_kanade import (Keypoint, load_keypoints, lucas_kanade, motion_signal,
                                         select_keypoints, signed_motion_signal)
from ScopeSync.scopesim.config import ScopeConfig
from ScopeSync.scopesim.profiles import sinusoid_profile
from ScopeSync.scopesim.render import render_pixels
from ScopeSync.scopesim.streams import emit_streams

CFG = ScopeConfig(frame_width=120, frame_height=120)
KEYPOINTS = [Keypoint(40, 40), Keypoint(60, 60), Keypoint(80, 40), Keypoint(40, 80), Keypoint(60, 30)]
BASE = render_pixels(0.0, 0.0, 0.0, CFG)
FRAME_NS = 33_333_333


def frame_channel(images):
    return Channel(Modality.FRAME, 30.0, [FrameSample(i * FRAME_NS, image) for i, image in enumerate(images)])


def test_identical_frames_have_no_flow():
    flows = lucas_kanade(FrameSample(0, BASE), FrameSample(1, BASE), KEYPOINTS)
    assert all(f.valid for f in flows)
    assert all((f.dx, f.dy) == (0.0, 0.0) for f in flows)


def test_flat_frames_are_invalid():
    flat = np.full((120, 120), 128, dtype=np.uint8)
    flows = lucas_kanade(FrameSample(0, flat), FrameSample(1, flat), KEYPOINTS)
    assert not any(f.valid for f in flows)
    assert all(np.isnan(f.dx) and np.isnan(f.dy) for f in flows)


@pytest.mark.parametrize('dx, dy', [(1, 0), (0, 1), (2, 0), (-1, 1), (1, -2)])
def test_integer_translation(dx, dy):
    moved = np.roll(BASE, (dy, dx), axis=(0, 1))
    flows = lucas_kanade(FrameSample(0, BASE), FrameSample(1, moved), KEYPOINTS)
    assert all(f.valid for f in flows)
    assert np.mean([f.dx for f in flows]) == pytest.approx(dx, abs=0.25)
    assert np.mean([f.dy for f in flows]) == pytest.approx(dy, abs=0.25)


def test_rendered_bend_moves_right():
    moved = render_pixels(1.0 / CFG.pixels_per_deg, 0.0, 0.0, CFG)
    flows = lucas_kanade(FrameSample(0, BASE), FrameSample(1, moved), KEYPOINTS)
    assert np.mean([f.dx for f in flows]) == pytest.approx(1.0, abs=0.25)


def test_lucas_kanade_rejects():
    small = FrameSample(0, BASE[:100])
    with pytest.raises(InvalidArgumentError):
        lucas_kanade(FrameSample(0, BASE), small, KEYPOINTS)
    with pytest.raises(InvalidArgumentError):
        lucas_kanade(FrameSample(0, BASE), FrameSample(1, BASE), KEYPOINTS, window=14)
    with pytest.raises(InvalidArgumentError):
        lucas_kanade(FrameSample(0, BASE), FrameSample(1, BASE), [Keypoint(3, 60)])


def test_select_keypoints():
    points = select_keypoints(FrameSample(0, BASE), n=5)
    assert len(points) == 5
    assert len(set(points)) == 5
    assert points == select_keypoints(FrameSample(0, BASE), n=5)
    flows = lucas_kanade(FrameSample(0, BASE), FrameSample(1, np.roll(BASE, 1, axis=1)), points)
    assert all(f.valid for f in flows)
    with pytest.raises(InvalidArgumentError):
        select_keypoints(FrameSample(0, BASE[:20, :20]), n=5)


def test_load_keypoints(tmp_path):
    path = tmp_path / 'keypoints.json'
    path.write_text(json.dumps([{'x': 40, 'y': 50}, {'x': 61.5, 'y': 70}]))
    assert load_keypoints(path) == [Keypoint(40.0, 50.0), Keypoint(61.5, 70.0)]
    path.write_text(json.dumps([[40, 50]]))
    with pytest.raises(InvalidArgumentError):
        load_keypoints(path)


def test_static_motion_signal():
    signal = motion_signal(frame_channel([BASE] * 6), KEYPOINTS)
    assert len(signal) == 5
    assert signal.values.tolist() == [0.0] * 5
    assert signal.t.tolist() == [(i * FRAME_NS + (i + 1) * FRAME_NS) // 2 for i in range(5)]


def test_motion_signal_speeds():
    frames = frame_channel([BASE, np.roll(BASE, 1, axis=1), np.roll(BASE, 3, axis=1)])
    signal = motion_signal(frames, KEYPOINTS)
    assert signal.values == pytest.approx([1.0, 2.0], abs=0.25)
    assert not signal.missing.any()


def test_motion_signal_threads_agree():
    frames = frame_channel([np.roll(BASE, k, axis=1) for k in range(8)])
    serial = motion_signal(frames, KEYPOINTS, pool_size=1)
    threaded = motion_signal(frames, KEYPOINTS, pool_size=4)
    assert np.array_equal(serial.values, threaded.values)


def test_motion_signal_low_confidence():
    flat = np.full((120, 120), 128, dtype=np.uint8)
    with pytest.raises(LowConfidenceError):
        motion_signal(frame_channel([BASE, flat, flat, flat]), KEYPOINTS)


def test_motion_signal_fills_gaps():
    flat = np.full((120, 120), 128, dtype=np.uint8)
    images = [np.roll(BASE, k, axis=1) for k in range(6)]
    images[2] = images[3] = flat
    signal = motion_signal(frame_channel(images), KEYPOINTS)
    assert signal.missing.tolist() == [False, False, True, False, False]
    assert signal.values[2] == pytest.approx(0.5 * (signal.values[1] + signal.values[3]))


def test_signed_motion_signal():
    frames = frame_channel([np.roll(BASE, k, axis=1) for k in range(8)])
    signal = signed_motion_signal(frames, KEYPOINTS)
    assert np.abs(signal.values) == pytest.approx([30.0] * 7, rel=0.25)
    assert np.all(np.sign(signal.values) == np.sign(signal.values[0]))


def test_motion_signal_peaks_at_twice_the_excitation():
    bundle = emit_streams(sinusoid_profile(0.2, 0.5), 20.0, scfg=ScopeConfig(frame_width=96, frame_height=96))
    frames = bundle.frame
    signal = motion_signal(frames, select_keypoints(frames.samples[0]))
    spectrum = np.abs(np.fft.rfft(signal.values - signal.values.mean()))
    freqs = np.fft.rfftfreq(len(signal), d=1.0 / 30.0)
    assert freqs[np.argmax(spectrum)] == pytest.approx(0.4, abs=freqs[1])
