import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from ..config import config
from ..constants import Constants, Modality
from ..core.types import ActionSample, Channel, FrameSample, PoseSample, StateSample
from ..exceptions import InvalidArgumentError
from .config import LatencyConfig, ScopeConfig, TransmissionConfig
from .kinematics import tip_poses
from .render import render_pixels
from .transmission import integrate, quantize

DEFAULT_RATES = {Modality(name): float(rate) for name, rate in config['rates'].items()}
_CHANNEL_ORDER = (Modality.ACTION, Modality.STATE, Modality.POSE, Modality.FRAME)


@dataclass
class StreamBundle:
    """The four raw channels of one simulation run plus its ground truth."""
    action: Channel
    state: Channel
    pose: Channel
    frame: Channel
    latency_ms: Dict[str, float] = field(default_factory=dict)
    duration_s: float = 0.0
    profile: dict = field(default_factory=dict)
    seed: int = 0

    def channels(self):
        return {Modality.ACTION: self.action, Modality.STATE: self.state,
                Modality.POSE: self.pose, Modality.FRAME: self.frame}

    def __getitem__(self, modality):
        return self.channels()[Modality(modality)]


def _low_pass(values, dt, tau):
    """First-order lag with exact discretization, starting at rest on values[0]."""
    alpha = 1.0 - math.exp(-dt / tau)
    b, a = [alpha], [1.0, alpha - 1.0]
    filtered, _ = lfilter(b, a, values, axis=0, zi=lfilter_zi(b, a)[:, None] * values[:1])
    return filtered


def _sample_times(rate, duration, jitter_std_s, dropout_prob, rng):
    """Nominal times, recorded nanosecond stamps and the keep mask of one channel."""
    count = int(math.ceil(duration * rate - 1e-9))
    nominal = np.arange(count) / rate
    # Draw everything unconditionally so the stream of random numbers is fixed.
    jitter = rng.standard_normal(count) * jitter_std_s
    keep = rng.random(count) >= dropout_prob
    bound = min(3.0 * jitter_std_s, 0.49 / rate)
    jitter = np.clip(jitter, -bound, bound)
    stamps = np.maximum(0, np.rint((nominal + jitter) * Constants.NS_PER_S)).astype(np.int64)
    return nominal, stamps, keep


def emit_streams(profile, duration, tcfg=None, scfg=None, lcfg=None, rates=None):
    """
    Simulate the scope under a command profile and record its four streams.
    Parameters
    ----------
    profile : CommandProfile
    duration : float
        Seconds, > 0.
    tcfg : TransmissionConfig, optional
    scfg : ScopeConfig, optional
    lcfg : LatencyConfig, optional
    rates : dict, optional
        Nominal rate per Modality; defaults to action/state 50 Hz, pose 40 Hz,
        frame 30 Hz.
    Returns
    -------
    StreamBundle
    Notes
    -----
    The true state is integrated on a ``scfg.internal_rate_hz`` grid with the
    command taken at each step's midpoint. A sample with nominal time t reports
    the truth at ``t - latency`` and is stamped ``t + jitter``.
    """
    tcfg = tcfg or TransmissionConfig()
    scfg = scfg or ScopeConfig()
    lcfg = lcfg or LatencyConfig()
    rates = {**DEFAULT_RATES, **{Modality(k): float(v) for k, v in (rates or {}).items()}}
    if not (math.isfinite(duration) and duration > 0):
        raise InvalidArgumentError(f'duration must be positive, got {duration}')
    for name, latency in lcfg.latency_ms.items():
        if latency / 1000.0 >= duration:
            raise InvalidArgumentError(
                f'{name} latency {latency} ms exceeds the {duration} s duration')

    dt = 1.0 / scfg.internal_rate_hz
    n_steps = int(math.ceil(duration / dt))
    grid = np.arange(n_steps + 1) * dt
    truth = integrate(profile.sample(grid[:-1] + 0.5 * dt), dt, tcfg=tcfg, scfg=scfg)
    tip = truth.copy()
    if scfg.compliance_tau_s > 0:
        tip[:, :2] = _low_pass(truth[:, :2], dt, scfg.compliance_tau_s)
    logging.info(f"Integrated {n_steps} steps of {dt * 1000:g} ms, "
                 f"bend range x [{truth[:, 0].min():.3f}, {truth[:, 0].max():.3f}] deg")

    def at(values, times):
        return np.column_stack([np.interp(times, grid, values[:, i]) for i in range(values.shape[1])])

    channels = {}
    jitter_s = lcfg.jitter_std_ms / 1000.0
    for index, modality in enumerate(_CHANNEL_ORDER):
        rng = np.random.default_rng([lcfg.seed, index])
        nominal, stamps, keep = _sample_times(rates[modality], duration, jitter_s,
                                              lcfg.dropout_prob, rng)
        query = nominal - lcfg.latency_ms[modality.value] / 1000.0
        if modality is Modality.ACTION:
            commands = profile.sample(query)
            samples = [ActionSample(int(t), float(c[0]), float(c[1]), float(c[2]), int(c[3]))
                       for t, c in zip(stamps[keep], commands[keep])]
        elif modality is Modality.STATE:
            readings = quantize(at(truth, query), tcfg, scfg)
            samples = [StateSample(int(t), *map(float, r))
                       for t, r in zip(stamps[keep], readings[keep])]
        elif modality is Modality.POSE:
            angles = at(tip, query)
            positions, orientations = tip_poses(angles[:, 0], angles[:, 1], angles[:, 2], scfg)
            positions = positions + rng.standard_normal(positions.shape) * lcfg.noise_std
            samples = [PoseSample(int(t), tuple(p), tuple(q))
                       for t, p, q in zip(stamps[keep], positions[keep], orientations[keep])]
        else:
            angles = at(tip, query)
            samples = [FrameSample(int(t), render_pixels(a[0], a[1], a[2] * scfg.feed_mm_per_deg, scfg))
                       for t, a in zip(stamps[keep], angles[keep])]
        quantization = tcfg.quantization_deg if modality is Modality.STATE else None
        channels[modality] = Channel(modality, rates[modality], samples, quantization)
        logging.info(f"Emitted {len(samples)} {modality.value} samples "
                     f"({int((~keep).sum())} dropped)")

    return StreamBundle(action=channels[Modality.ACTION], state=channels[Modality.STATE],
                        pose=channels[Modality.POSE], frame=channels[Modality.FRAME],
                        latency_ms=dict(lcfg.latency_ms), duration_s=float(duration),
                        profile=profile.to_dict(), seed=lcfg.seed)
