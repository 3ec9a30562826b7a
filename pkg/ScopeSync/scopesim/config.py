import math
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Tuple

import numpy as np

from ..config import config
from ..constants import Modality
from ..exceptions import InvalidArgumentError


def _from_section(cls, section):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise InvalidArgumentError(f'unknown {cls.__name__} keys: {sorted(unknown)}')
    return cls(**section)


@dataclass(frozen=True)
class TransmissionConfig:
    """
    Gear train between the servos and the scope.
    Parameters
    ----------
    bend_gearbox_ratio : float
        Servo gearbox of the bending axes.
    bend_collet_ratio : float
        Extra reduction in the outer collet.
    feed_gear_ratio : float
        Servo gearbox of the feed roller.
    encoder_resolution_deg : float
        One encoder count.
    max_motor_speed_dps : float
        Speed limit at the output shaft for a full-scale action.
    """
    bend_gearbox_ratio: float = 270.0
    bend_collet_ratio: float = 2.0
    feed_gear_ratio: float = 350.0
    encoder_resolution_deg: float = 0.088
    max_motor_speed_dps: float = 60.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f'{f.name} must be strictly positive, got {value}')

    @property
    def bend_gear_ratio(self):
        return self.bend_gearbox_ratio * self.bend_collet_ratio

    @property
    def quantization_deg(self):
        """Output shaft step per (bend_x, bend_y, insertion) axis."""
        bend = self.encoder_resolution_deg / self.bend_gear_ratio
        return bend, bend, self.encoder_resolution_deg / self.feed_gear_ratio

    @classmethod
    def from_dict(cls, section):
        return _from_section(cls, section)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ScopeConfig:
    """Geometry of the distal segment and the synthetic camera.

    ``compliance_tau_s`` > 0 low-passes the bend angles reaching the tip.
    """
    segment_length_m: float = 0.10
    max_bend_deg: float = 180.0
    feed_mm_per_deg: float = 0.25
    lumen_axis: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    compliance_tau_s: float = 0.0
    internal_rate_hz: float = 1000.0
    frame_width: int = 383
    frame_height: int = 396
    pixels_per_deg: float = 1.5
    zoom_per_mm: float = 0.002

    def __post_init__(self):
        axis = np.asarray(self.lumen_axis, dtype=float)
        if axis.shape != (3,) or not np.all(np.isfinite(axis)) or np.linalg.norm(axis) == 0:
            raise InvalidArgumentError(f'lumen_axis must be a non-zero 3-vector, got {self.lumen_axis}')
        object.__setattr__(self, 'lumen_axis', tuple(float(v) for v in axis / np.linalg.norm(axis)))
        if not self.segment_length_m > 0:
            raise InvalidArgumentError('segment_length_m must be positive')
        if not 0 < self.max_bend_deg <= 180:
            raise InvalidArgumentError('max_bend_deg must lie in (0, 180]')
        if self.compliance_tau_s < 0:
            raise InvalidArgumentError('compliance_tau_s must be non-negative')
        if not self.internal_rate_hz > 0:
            raise InvalidArgumentError('internal_rate_hz must be positive')
        if self.frame_width < 1 or self.frame_height < 1:
            raise InvalidArgumentError('frame dimensions must be positive')

    @classmethod
    def from_dict(cls, section):
        section = dict(section)
        if 'lumen_axis' in section:
            section['lumen_axis'] = tuple(section['lumen_axis'])
        return _from_section(cls, section)

    def to_dict(self):
        data = asdict(self)
        data['lumen_axis'] = list(self.lumen_axis)
        return data


@dataclass(frozen=True)
class LatencyConfig:
    """
    Acquisition imperfections injected per channel.
    Parameters
    ----------
    latency_ms : dict
        Delay per modality name (action, state, pose, frame).
    jitter_std_ms : float
        Gaussian timestamp jitter, clamped to 3 sigma.
    noise_std : float
        Gaussian noise on pose position, metres.
    dropout_prob : float
        Probability of losing any one sample.
    seed : int
    """
    latency_ms: Dict[str, float] = field(default_factory=lambda: {m.value: 0.0 for m in Modality})
    jitter_std_ms: float = 0.0
    noise_std: float = 0.0
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        latency = {m.value: 0.0 for m in Modality}
        for name, value in dict(self.latency_ms).items():
            if name not in latency:
                raise InvalidArgumentError(f'unknown channel {name!r} in latency_ms')
            if not (math.isfinite(value) and value >= 0):
                raise InvalidArgumentError(f'latency_ms.{name} must be >= 0, got {value}')
            latency[name] = float(value)
        object.__setattr__(self, 'latency_ms', latency)
        if self.jitter_std_ms < 0 or self.noise_std < 0:
            raise InvalidArgumentError('jitter_std_ms and noise_std must be >= 0')
        if not 0 <= self.dropout_prob < 1:
            raise InvalidArgumentError(f'dropout_prob must lie in [0, 1), got {self.dropout_prob}')

    @classmethod
    def from_dict(cls, section):
        return _from_section(cls, section)

    def to_dict(self):
        return asdict(self)


def configs_from(cfg=None):
    """Build the three simulator configs from a loaded config dictionary."""
    cfg = config if cfg is None else cfg
    return (TransmissionConfig.from_dict(cfg['transmission']),
            ScopeConfig.from_dict(cfg['scope']),
            LatencyConfig.from_dict(cfg['latency']))
