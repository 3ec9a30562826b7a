import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..exceptions import InvalidArgumentError, UndefinedCorrelationError


@dataclass(frozen=True, eq=False)
class VelocityNormSeries:
    """Per-step Euclidean norm of consecutive sample differences.

    ``degenerate`` is set by min-max normalization of a constant series.
    """
    values: np.ndarray
    rate: float
    normalized: bool = False
    degenerate: bool = False

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class LagEstimate:
    """
    Result of :func:`residual_lag`.
    Attributes
    ----------
    tau_star_samples : int
        Positive means ``y`` lags ``x``.
    tau_star_ms : float
    rho_max : float
    taus : numpy.ndarray
        Every integer lag of the window.
    rhos : numpy.ndarray
        Pearson coefficient per lag, NaN where undefined.
    """
    tau_star_samples: int
    tau_star_ms: float
    rho_max: float
    taus: np.ndarray
    rhos: np.ndarray
    rate: float

    @property
    def curve(self):
        return list(zip(self.taus.tolist(), self.rhos.tolist()))

    def to_frame(self):
        return pd.DataFrame({'tau_samples': self.taus,
                             'tau_ms': self.taus * 1000.0 / self.rate,
                             'rho': self.rhos})


def velocity_norm(series, rate=30.0):
    """
    Finite difference Euclidean norm ``v_t = ||x_t - x_(t-1)||``.
    Parameters
    ----------
    series : array-like
        (n,) or (n, d) samples on a uniform grid.
    rate : float
        Grid rate in Hz.
    Returns
    -------
    VelocityNormSeries
        n - 1 values.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    if series.ndim != 2 or len(series) < 2:
        raise InvalidArgumentError(f'velocity_norm needs at least 2 samples, got shape {series.shape}')
    return VelocityNormSeries(values=np.linalg.norm(np.diff(series, axis=0), axis=1), rate=float(rate))


def minmax_normalize(v):
    """
    Rescale onto [0, 1]. A constant series becomes all zeros, flagged degenerate.
    Parameters
    ----------
    v : VelocityNormSeries
    Returns
    -------
    VelocityNormSeries
    """
    values = np.asarray(v.values, dtype=float)
    if len(values) == 0:
        return VelocityNormSeries(values=values.copy(), rate=v.rate, normalized=True, degenerate=True)
    low, high = values.min(), values.max()
    if high == low:
        logging.warning("Constant velocity series, min-max normalization is degenerate")
        return VelocityNormSeries(values=np.zeros_like(values), rate=v.rate,
                                  normalized=True, degenerate=True)
    return VelocityNormSeries(values=(values - low) / (high - low), rate=v.rate, normalized=True)


def pearson(a, b):
    """
    Sample Pearson correlation.
    Sums are correctly rounded (``math.fsum``) so the value does not depend on
    summation order; the result is clipped to [-1, 1].
    Parameters
    ----------
    a, b : array-like
        Equal lengths >= 2.
    Returns
    -------
    float
    Raises
    ------
    UndefinedCorrelationError
        Either input has zero variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise InvalidArgumentError(f'pearson needs two equal 1-D inputs of length >= 2, got {a.shape} {b.shape}')
    n = len(a)
    da = a - math.fsum(a) / n
    db = b - math.fsum(b) / n
    saa = math.fsum(da * da)
    sbb = math.fsum(db * db)
    if saa == 0.0 or sbb == 0.0:
        raise UndefinedCorrelationError('zero variance input')
    rho = math.fsum(da * db) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, rho))


def lag_window(tau_max_ms, rate):
    """Largest integer lag inside ``tau_max_ms`` at ``rate``."""
    return int(math.floor(tau_max_ms * rate / 1000.0 + 1e-9))


def residual_lag(x, y, tau_max_ms=1000.0, min_overlap=10):
    """
    Lag maximizing Pearson correlation of ``x_t`` and ``y_(t+tau)``.
    Parameters
    ----------
    x, y : VelocityNormSeries
        Same rate.
    tau_max_ms : float
        Symmetric window half-width.
    min_overlap : int
        Shortest overlap allowed at any lag of the window.
    Returns
    -------
    LagEstimate
    Notes
    -----
    Each lag uses only the overlapping indices. Lags whose overlap has zero
    variance are left out (NaN on the curve). Among equal maxima the smallest
    |tau| wins, then the negative one.
    """
    if not math.isclose(x.rate, y.rate, rel_tol=1e-9):
        raise InvalidArgumentError(f'series rates differ: {x.rate} and {y.rate} Hz; resample first')
    xv = np.asarray(x.values, dtype=float)
    yv = np.asarray(y.values, dtype=float)
    k = lag_window(tau_max_ms, x.rate)
    taus = np.arange(-k, k + 1)
    rhos = np.full(len(taus), np.nan)
    for index, tau in enumerate(taus):
        lo = max(0, -tau)
        hi = min(len(xv), len(yv) - tau)
        if hi - lo < min_overlap:
            raise InvalidArgumentError(
                f'overlap at lag {tau} is {max(0, hi - lo)} samples, below {min_overlap}')
        try:
            rhos[index] = pearson(xv[lo:hi], yv[lo + tau:hi + tau])
        except UndefinedCorrelationError:
            continue

    defined = ~np.isnan(rhos)
    if not defined.any():
        raise UndefinedCorrelationError('correlation undefined at every lag of the window')
    if not defined.all():
        logging.warning(f"{int((~defined).sum())} of {len(taus)} lags have undefined correlation")
    rho_max = np.nanmax(rhos)
    best = [int(t) for t, r in zip(taus, rhos) if r == rho_max]
    tau_star = min(best, key=lambda t: (abs(t), t))
    return LagEstimate(tau_star_samples=tau_star, tau_star_ms=tau_star * 1000.0 / x.rate,
                       rho_max=float(rho_max), taus=taus, rhos=rhos, rate=x.rate)


def signal_lag(x_series, y_series, rate, tau_max_ms=1000.0, min_overlap=10):
    """Residual lag of two position-like series on one grid, via normalized velocity norms."""
    x = minmax_normalize(velocity_norm(x_series, rate))
    y = minmax_normalize(velocity_norm(y_series, rate))
    return residual_lag(x, y, tau_max_ms=tau_max_ms, min_overlap=min_overlap)
