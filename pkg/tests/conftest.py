import numpy as np
import pytest

from ScopeSync.scopesim.config import LatencyConfig, ScopeConfig
from ScopeSync.scopesim.profiles import sinusoid_profile
from ScopeSync.scopesim.streams import emit_streams
from ScopeSync.sync.align import AlignedEpisode
from ScopeSync.sync.calibrate import OffsetCalibration

# Full size frames are 383 x 396; the tests render much smaller ones.
SMALL_SCOPE = ScopeConfig(frame_width=128, frame_height=128)
LATENCY_MS = {'action': 0.0, 'state': 102.0, 'pose': 435.0, 'frame': 412.0}


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: seeded repetitions of the latency and lag recoveries')


def random_episode(rng, n, shape=(6, 8)):
    """Aligned episode of random but valid records."""
    t_ns = np.cumsum(rng.integers(30_000_000, 36_000_000, size=n)).astype(np.int64)
    action = rng.uniform(-1.0, 1.0, size=(n, 4))
    action[:, 3] = rng.integers(0, 2, size=n)
    orientation = rng.normal(size=(n, 4))
    orientation /= np.linalg.norm(orientation, axis=1, keepdims=True)
    frames = [rng.integers(0, 256, size=shape, dtype=np.uint8) for _ in range(n)]
    calibration = OffsetCalibration({'action': float(rng.normal(0, 300)),
                                     'state': float(rng.normal(0, 300)),
                                     'pose': float(rng.normal(0, 300))})
    return AlignedEpisode(t_ns=t_ns, action=action, state=rng.normal(0, 50, size=(n, 3)),
                          position=rng.normal(0, 0.1, size=(n, 3)), orientation=orientation,
                          frames=frames, calibration=calibration)


@pytest.fixture(scope='session')
def delayed_bundle():
    """60 s of 0.2 Hz bend_x excitation with the bench latencies."""
    return emit_streams(sinusoid_profile(0.2, 0.5), 60.0, scfg=SMALL_SCOPE,
                        lcfg=LatencyConfig(latency_ms=LATENCY_MS))


@pytest.fixture(scope='session')
def undelayed_bundle():
    return emit_streams(sinusoid_profile(0.2, 0.5), 30.0, scfg=SMALL_SCOPE, lcfg=LatencyConfig())
