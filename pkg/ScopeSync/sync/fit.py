import math
from dataclasses import dataclass, replace

import numpy as np

from ..exceptions import DegenerateFitError, InvalidArgumentError, LowConfidenceError

# Below this many amplitudes per residual rms a fit is not trusted for phase.
MIN_SIGNAL_TO_RESIDUAL = 10.0
_MAX_CONDITION = 1e12


def wrap_phase(phase):
    """Map an angle onto (-pi, pi]."""
    return math.pi - ((math.pi - phase) % (2.0 * math.pi))


@dataclass(frozen=True)
class SinusoidFit:
    """``y = a_sin sin(2 pi f t) + b_cos cos(2 pi f t) + c_offset`` at known ``freq``."""
    freq: float
    a_sin: float
    b_cos: float
    c_offset: float
    residual_rms: float
    n_samples: int = 0

    @property
    def amplitude(self):
        return math.hypot(self.a_sin, self.b_cos)

    @property
    def phase(self):
        """phi in (-pi, pi] with ``y = R sin(2 pi f t + phi) + c``."""
        return wrap_phase(math.atan2(self.b_cos, self.a_sin))

    @property
    def omega(self):
        return 2.0 * math.pi * self.freq

    def evaluate(self, t_s):
        arg = self.omega * np.asarray(t_s, dtype=float)
        return self.a_sin * np.sin(arg) + self.b_cos * np.cos(arg) + self.c_offset

    def derivative(self):
        """Fit of dy/dt; shifts the phase by a quarter period and drops the offset."""
        return replace(self, a_sin=-self.omega * self.b_cos, b_cos=self.omega * self.a_sin,
                       c_offset=0.0, residual_rms=self.omega * self.residual_rms)

    def negated(self):
        return replace(self, a_sin=-self.a_sin, b_cos=-self.b_cos, c_offset=-self.c_offset)

    def to_dict(self):
        return {'freq': self.freq, 'a_sin': self.a_sin, 'b_cos': self.b_cos,
                'c_offset': self.c_offset, 'residual_rms': self.residual_rms,
                'amplitude': self.amplitude, 'phase': self.phase, 'n_samples': self.n_samples}


def fit_sinusoid(t_s, y, freq):
    """
    Linear least squares fit of a sinusoid of known frequency.
    Parameters
    ----------
    t_s : array-like
        Sample times in seconds.
    y : array-like
        Samples.
    freq : float
        Hz, > 0.
    Returns
    -------
    SinusoidFit
    Raises
    ------
    InvalidArgumentError
        Fewer than 3 samples, less than one period covered, bad freq.
    DegenerateFitError
        The normal equations are singular.
    """
    t_s = np.asarray(t_s, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (math.isfinite(freq) and freq > 0):
        raise InvalidArgumentError(f'freq must be positive, got {freq}')
    if t_s.shape != y.shape or t_s.ndim != 1:
        raise InvalidArgumentError(f'times and samples must be equal 1-D arrays, got {t_s.shape} and {y.shape}')
    if len(t_s) < 3:
        raise InvalidArgumentError(f'need at least 3 samples, got {len(t_s)}')
    if not (np.all(np.isfinite(t_s)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError('non-finite sample')
    if t_s.max() - t_s.min() < 1.0 / freq:
        raise InvalidArgumentError(
            f'samples span {t_s.max() - t_s.min():.3f} s, less than one {1.0 / freq:.3f} s period')

    arg = 2.0 * math.pi * freq * t_s
    design = np.column_stack([np.sin(arg), np.cos(arg), np.ones_like(arg)])
    normal = design.T @ design
    if np.linalg.matrix_rank(normal) < 3 or np.linalg.cond(normal) > _MAX_CONDITION:
        raise DegenerateFitError(f'rank-deficient sinusoid design at {freq} Hz')
    a_sin, b_cos, c_offset = np.linalg.solve(normal, design.T @ y)
    residual = y - design @ np.array([a_sin, b_cos, c_offset])
    return SinusoidFit(freq=float(freq), a_sin=float(a_sin), b_cos=float(b_cos),
                       c_offset=float(c_offset),
                       residual_rms=float(np.sqrt(np.mean(residual ** 2))),
                       n_samples=len(t_s))


def phase_offset(ref, sig):
    """
    Time by which ``sig`` lags ``ref``, in milliseconds.
    Parameters
    ----------
    ref, sig : SinusoidFit
        Fits at the same frequency, each with amplitude > 10 x residual rms.
    Returns
    -------
    float
        Wrapped to (-T/2, T/2]; positive means ``sig`` lags ``ref``.
    """
    if not math.isclose(ref.freq, sig.freq, rel_tol=1e-12):
        raise InvalidArgumentError(f'fits at different frequencies: {ref.freq} and {sig.freq}')
    for name, fit in (('reference', ref), ('signal', sig)):
        if not fit.amplitude > MIN_SIGNAL_TO_RESIDUAL * fit.residual_rms:
            raise LowConfidenceError(
                f'{name} fit amplitude {fit.amplitude:.6g} is not above '
                f'{MIN_SIGNAL_TO_RESIDUAL:g} x residual {fit.residual_rms:.6g}')
    lag = wrap_phase(ref.phase - sig.phase)
    return 1000.0 * lag / ref.omega
