import math

import numpy as np
import pytest

from ScopeSync.constants import Modality, ResampleMethod
from ScopeSync.core.quaternion import quat_from_axis_angle
from ScopeSync.core.types import ActionSample, Channel, FrameSample, PoseSample, StateSample
from ScopeSync.exceptions import InvalidArgumentError
from ScopeSync.sync.lag import residual_lag, velocity_norm
from ScopeSync.sync.resample import resample_channel

MS = 1_000_000


def state_channel(stamps, values, rate=50.0):
    return Channel(Modality.STATE, rate, [StateSample(int(t), *map(float, v)) for t, v in zip(stamps, values)])


def test_identity_grid():
    rng = np.random.default_rng(0)
    stamps = np.arange(100) * 20 * MS
    values = rng.normal(size=(100, 3))
    result = resample_channel(state_channel(stamps, values), stamps)
    assert result.method is ResampleMethod.LINEAR
    assert not result.missing.any()
    assert np.array_equal(result.values, values)


def test_linear_matches_interp():
    rng = np.random.default_rng(1)
    stamps = np.arange(500) * 20 * MS
    values = np.cumsum(rng.normal(size=(500, 3)), axis=0)
    grid = np.arange(320) * 33_333_333
    result = resample_channel(state_channel(stamps, values), grid)
    inside = grid <= stamps[-1]
    assert np.array_equal(result.missing, ~inside)
    for column in range(3):
        expected = np.interp(grid[inside].astype(float), stamps.astype(float), values[:, column])
        assert np.allclose(result.values[inside, column], expected, rtol=0, atol=1e-12)
    assert np.all(np.isnan(result.values[~inside]))


def test_hold_action():
    channel = Channel(Modality.ACTION, 10.0, [ActionSample(0, bend_x=0.5), ActionSample(100 * MS, bend_x=-0.2)])
    grid = np.array([33_333_333, 66_666_667, 133_333_333])
    result = resample_channel(channel, grid)
    assert result.method is ResampleMethod.HOLD
    assert result.values[:, 0].tolist() == [0.5, 0.5, -0.2]
    assert result.source_index.tolist() == [0, 0, 1]


def test_hold_stops_after_one_period():
    channel = Channel(Modality.ACTION, 10.0, [ActionSample(0), ActionSample(100 * MS)])
    result = resample_channel(channel, np.array([199 * MS, 200 * MS]))
    assert result.missing.tolist() == [False, True]


def test_hold_sparse_action_at_50_hz():
    channel = Channel(Modality.ACTION, 50.0, [ActionSample(0, bend_x=0.5), ActionSample(100 * MS, bend_x=-0.2)])
    result = resample_channel(channel, np.array([33_333_333, 66_666_667, 133_333_333]))
    assert result.values[:, 0].tolist() == [0.5, 0.5, -0.2]
    assert not result.missing.any()


def test_hold_regular_50_hz_stream():
    channel = Channel(Modality.ACTION, 50.0, [ActionSample(t * 20 * MS, bend_x=0.1 * t) for t in range(5)])
    result = resample_channel(channel, np.array([79 * MS, 99 * MS, 100 * MS]))
    assert result.missing.tolist() == [False, False, True]
    assert result.source_index.tolist() == [3, 4, -1]


def test_nearest_frame():
    frames = Channel(Modality.FRAME, 30.0, [FrameSample(t * MS, np.full((2, 2), t, dtype=np.uint8))
                                             for t in (0, 10, 20)])
    result = resample_channel(frames, np.array([4 * MS, 5 * MS, 6 * MS, 20 * MS, 21 * MS]))
    assert result.method is ResampleMethod.NEAREST
    assert result.source_index.tolist() == [0, 0, 1, 2, -1]
    assert result.missing.tolist() == [False, False, False, False, True]


def test_slerp_pose():
    q0 = quat_from_axis_angle([0, 0, 1], 0.0)
    q1 = quat_from_axis_angle([0, 0, 1], math.pi / 2)
    channel = Channel(Modality.POSE, 40.0, [PoseSample(0, (0.0, 0.0, 0.1), q0),
                                            PoseSample(100 * MS, (0.02, 0.0, 0.1), q1)])
    result = resample_channel(channel, np.array([0, 50 * MS, 100 * MS]))
    assert result.method is ResampleMethod.SLERP
    assert result.values[1, :3] == pytest.approx([0.01, 0.0, 0.1])
    assert result.values[1, 3:] == pytest.approx([math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)])
    assert result.values[2, 3:] == pytest.approx(q1)


@pytest.mark.parametrize('modality, sample, method', [
    (Modality.FRAME, FrameSample(0, np.zeros((2, 2), dtype=np.uint8)), 'linear'),
    (Modality.ACTION, ActionSample(0), 'linear'),
    (Modality.STATE, StateSample(0, 0.0, 0.0, 0.0), 'slerp'),
    (Modality.STATE, StateSample(0, 0.0, 0.0, 0.0), 'cubic'),
])
def test_incompatible_method(modality, sample, method):
    with pytest.raises(InvalidArgumentError):
        resample_channel(Channel(modality, 30.0, [sample]), np.array([0]), method=method)


def test_resample_rejects_bad_grid():
    channel = state_channel([0, 20 * MS], [[0, 0, 0], [1, 1, 1]])
    with pytest.raises(InvalidArgumentError):
        resample_channel(channel, np.array([10 * MS, 5 * MS]))
    with pytest.raises(InvalidArgumentError):
        resample_channel(Channel(Modality.STATE, 50.0, []), np.array([0]))


def test_offset_delays_channel():
    rng = np.random.default_rng(5)
    stamps = np.arange(300) * 25 * MS
    values = np.cumsum(rng.normal(size=(300, 3)), axis=0)
    result = resample_channel(state_channel(stamps, values, rate=40.0), stamps, offset_ms=100.0)
    assert result.missing[:4].all() and not result.missing[4:].any()
    assert np.array_equal(result.values[4:], values[:-4])
    x = velocity_norm(values[4:], 40.0)
    y = velocity_norm(result.values[4:], 40.0)
    assert residual_lag(x, y, tau_max_ms=300.0).tau_star_samples == 4
