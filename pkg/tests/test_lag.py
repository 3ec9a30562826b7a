import math

import numpy as np
import pytest

from ScopeSync.exceptions import InvalidArgumentError, UndefinedCorrelationError
from ScopeSync.sync.lag import (VelocityNormSeries, lag_window, minmax_normalize, pearson, residual_lag,
                                signal_lag, velocity_norm)

RATE = 30.0


def series(values):
    return VelocityNormSeries(values=np.asarray(values, dtype=float), rate=RATE)


def reference_pearson(a, b):
    n = len(a)
    mean_a = math.fsum(a) / n
    mean_b = math.fsum(b) / n
    da = [v - mean_a for v in a]
    db = [v - mean_b for v in b]
    saa = math.fsum(v * v for v in da)
    sbb = math.fsum(v * v for v in db)
    if saa == 0.0 or sbb == 0.0:
        return math.nan
    rho = math.fsum(p * q for p, q in zip(da, db)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, rho))


def test_velocity_norm():
    v = velocity_norm([[0.0, 0.0], [3.0, 4.0], [3.0, 4.0], [0.0, 0.0]])
    assert v.values.tolist() == [5.0, 0.0, 5.0]
    assert velocity_norm([0.0, 3.0, 3.0, -1.0]).values.tolist() == [3.0, 0.0, 4.0]
    assert np.all(velocity_norm(np.ones((10, 3))).values == 0.0)
    with pytest.raises(InvalidArgumentError):
        velocity_norm([1.0])


def test_minmax_normalize():
    normalized = minmax_normalize(series([3.0, 0.0, 4.0]))
    assert normalized.values.tolist() == [0.75, 0.0, 1.0]
    assert normalized.normalized and not normalized.degenerate
    flat = minmax_normalize(series([2.0, 2.0, 2.0]))
    assert flat.degenerate
    assert flat.values.tolist() == [0.0, 0.0, 0.0]


def test_pearson():
    a = np.array([1.0, 2.0, 4.0, 8.0, 3.0])
    assert pearson(a, a) == 1.0
    assert pearson(a, -a) == -1.0
    assert pearson(a, 2 * a + 3) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(UndefinedCorrelationError):
        pearson(a, np.ones(5))
    with pytest.raises(InvalidArgumentError):
        pearson(a, a[:4])


def test_lag_window():
    assert lag_window(1000.0, 30.0) == 30
    assert lag_window(300.0, 30.0) == 9
    assert lag_window(10.0, 30.0) == 0


def test_residual_lag_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = rng.random(int(rng.integers(30, 501)))
        y = rng.random(int(rng.integers(30, 501)))
        estimate = residual_lag(series(x), series(y), tau_max_ms=300.0, min_overlap=10)
        expected = []
        for tau in range(-9, 10):
            lo, hi = max(0, -tau), min(len(x), len(y) - tau)
            expected.append(reference_pearson(x[lo:hi].tolist(), y[lo + tau:hi + tau].tolist()))
        assert estimate.taus.tolist() == list(range(-9, 10))
        assert estimate.rhos.tolist() == expected
        best = max(expected)
        assert estimate.rho_max == best
        assert estimate.tau_star_samples == min((t for t, r in zip(range(-9, 10), expected) if r == best),
                                                key=lambda t: (abs(t), t))


@pytest.mark.parametrize('shift', [-9, -3, -1, 0, 1, 3, 9])
def test_residual_lag_recovers_shift(shift):
    rng = np.random.default_rng(shift + 20)
    base = rng.random(320)
    x = base[9:309]
    y = base[9 - shift:309 - shift]
    estimate = residual_lag(series(x), series(y), tau_max_ms=300.0)
    assert estimate.tau_star_samples == shift
    assert estimate.tau_star_ms == pytest.approx(shift * 1000.0 / RATE)
    assert estimate.rho_max == 1.0


def test_residual_lag_tie_break():
    x = np.tile([0.0, 1.0], 30)
    y = np.roll(x, -1)
    estimate = residual_lag(series(x), series(y), tau_max_ms=100.0)
    assert estimate.rhos[estimate.taus.tolist().index(0)] == -1.0
    assert estimate.tau_star_samples == -1


def test_residual_lag_is_affine_invariant():
    rng = np.random.default_rng(4)
    x = rng.random(200)
    y = np.roll(x, 4) + 0.05 * rng.random(200)
    first = residual_lag(series(x), series(y), tau_max_ms=300.0)
    second = residual_lag(series(3.0 * x + 2.0), series(0.5 * y + 7.0), tau_max_ms=300.0)
    assert first.tau_star_samples == second.tau_star_samples == 4


def test_residual_lag_undefined():
    with pytest.raises(UndefinedCorrelationError):
        residual_lag(series(np.ones(100)), series(np.arange(100.0)), tau_max_ms=300.0)


def test_residual_lag_skips_flat_overlaps():
    y = np.concatenate([np.arange(50.0), np.zeros(20)])
    x = np.concatenate([np.zeros(20), np.arange(50.0)])
    estimate = residual_lag(series(x[:40]), series(y[:40]), tau_max_ms=1000.0, min_overlap=10)
    assert np.isnan(estimate.rhos).any()
    assert not np.isnan(estimate.rho_max)


def test_residual_lag_rejects():
    with pytest.raises(InvalidArgumentError):
        residual_lag(series(np.arange(15.0)), series(np.arange(15.0)), tau_max_ms=300.0, min_overlap=10)
    other_rate = VelocityNormSeries(values=np.arange(100.0), rate=50.0)
    with pytest.raises(InvalidArgumentError):
        residual_lag(series(np.arange(100.0)), other_rate)


def test_lag_curve_frame():
    rng = np.random.default_rng(8)
    estimate = residual_lag(series(rng.random(100)), series(rng.random(100)), tau_max_ms=100.0)
    frame = estimate.to_frame()
    assert frame.columns.tolist() == ['tau_samples', 'tau_ms', 'rho']
    assert frame.tau_samples.tolist() == [-3, -2, -1, 0, 1, 2, 3]
    assert frame.tau_ms.tolist() == pytest.approx([-100.0, -200 / 3, -100 / 3, 0.0, 100 / 3, 200 / 3, 100.0])
    assert len(estimate.curve) == 7


def test_signal_lag_on_positions():
    t = np.arange(600) / RATE
    x = np.column_stack([np.sin(2 * math.pi * 0.2 * t), np.zeros(600)])
    y = np.roll(x, 2, axis=0)
    estimate = signal_lag(x[10:], y[10:], RATE, tau_max_ms=300.0)
    assert estimate.tau_star_samples == 2
