import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..constants import Constants, Modality
from ..exceptions import InvalidArgumentError

# Integer nanoseconds since the stream epoch.
Timestamp = int


def _finite(*values):
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class ActionSample:
    """Normalized operator command. ``home`` is 0 or 1."""
    t: Timestamp
    bend_x: float = 0.0
    bend_y: float = 0.0
    insertion: float = 0.0
    home: int = 0

    def as_array(self):
        return np.array([self.bend_x, self.bend_y, self.insertion, self.home],
                        dtype=float)

    def violations(self):
        problems = []
        if not _finite(self.bend_x, self.bend_y, self.insertion):
            problems.append('non-finite action component')
        for name in ('bend_x', 'bend_y', 'insertion'):
            if abs(getattr(self, name)) > 1.0:
                problems.append(f'{name}={getattr(self, name)} outside [-1, 1]')
        if self.home not in (0, 1):
            problems.append(f'home={self.home} is not 0 or 1')
        return problems


@dataclass(frozen=True)
class StateSample:
    """Encoder readings in output shaft degrees."""
    t: Timestamp
    bend_x_deg: float
    bend_y_deg: float
    insertion_deg: float

    def as_array(self):
        return np.array([self.bend_x_deg, self.bend_y_deg, self.insertion_deg],
                        dtype=float)

    def violations(self, step_deg=None):
        """
        Parameters
        ----------
        step_deg : tuple of 3 float, optional
            Quantization step per axis; skipped when not given.
        """
        values = (self.bend_x_deg, self.bend_y_deg, self.insertion_deg)
        if not _finite(*values):
            return ['non-finite state angle']
        problems = []
        if step_deg is not None:
            for name, value, step in zip(('bend_x_deg', 'bend_y_deg', 'insertion_deg'),
                                         values, step_deg):
                ticks = value / step
                if abs(ticks - round(ticks)) > 1e-6:
                    problems.append(f'{name}={value!r} is not a multiple of {step!r}')
        return problems


@dataclass(frozen=True)
class PoseSample:
    """Tip position in metres and unit quaternion (w, x, y, z).

    The orientation is normalized on construction.
    """
    t: Timestamp
    position: Tuple[float, float, float]
    orientation: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        position = tuple(float(v) for v in self.position)
        orientation = tuple(float(v) for v in self.orientation)
        if len(position) != 3 or len(orientation) != 4:
            raise InvalidArgumentError('pose needs a 3-vector and a 4-quaternion')
        norm = math.sqrt(sum(v * v for v in orientation))
        if norm > 0 and math.isfinite(norm):
            orientation = tuple(v / norm for v in orientation)
        object.__setattr__(self, 'position', position)
        object.__setattr__(self, 'orientation', orientation)

    def as_array(self):
        return np.array(self.position + self.orientation, dtype=float)

    def violations(self):
        problems = []
        if not _finite(*self.position):
            problems.append('non-finite position')
        norm = math.sqrt(sum(v * v for v in self.orientation))
        if not math.isfinite(norm) or abs(norm - 1.0) > Constants.QUAT_TOLERANCE:
            problems.append(f'orientation norm {norm!r} is not unit')
        return problems


@dataclass(frozen=True, eq=False)
class FrameSample:
    """8-bit grayscale frame, ``pixels`` has shape (height, width)."""
    t: Timestamp
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.dtype != np.uint8:
            raise InvalidArgumentError(
                f'frame pixels must be a 2-D uint8 array, got {pixels.dtype} {pixels.shape}')
        object.__setattr__(self, 'pixels', pixels)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FrameSample):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.pixels, other.pixels)

    def violations(self):
        if self.pixels.size != self.width * self.height:
            return ['pixel buffer length differs from width x height']
        return []


SAMPLE_TYPES = {
    Modality.ACTION: ActionSample,
    Modality.STATE: StateSample,
    Modality.POSE: PoseSample,
    Modality.FRAME: FrameSample,
}


@dataclass(frozen=True)
class Channel:
    """One timestamped stream of a single modality.

    Parameters
    ----------
    modality : Modality
    nominal_rate : float
        Expected sampling rate in Hz.
    samples : tuple
        Samples of the type matching ``modality``, ordered by time.
    quantization_deg : tuple of float, optional
        Output shaft quantization step per state axis.
    """
    modality: Modality
    nominal_rate: float
    samples: tuple = ()
    quantization_deg: tuple = None

    def __post_init__(self):
        modality = Modality(self.modality)
        object.__setattr__(self, 'modality', modality)
        object.__setattr__(self, 'samples', tuple(self.samples))
        if not self.nominal_rate > 0:
            raise InvalidArgumentError(f'nominal_rate must be positive, got {self.nominal_rate}')
        expected = SAMPLE_TYPES[modality]
        for index, sample in enumerate(self.samples):
            if not isinstance(sample, expected):
                raise InvalidArgumentError(
                    f'{modality.value} channel sample {index} is a {type(sample).__name__}')

    def __len__(self):
        return len(self.samples)

    @property
    def timestamps(self):
        return np.array([s.t for s in self.samples], dtype=np.int64)

    def values(self):
        """Numeric samples as an (n, d) float array; not defined for frames."""
        if self.modality is Modality.FRAME:
            raise InvalidArgumentError('frame channels have no numeric values')
        width = {Modality.ACTION: 4, Modality.STATE: 3, Modality.POSE: 7}[self.modality]
        if not self.samples:
            return np.empty((0, width))
        return np.vstack([s.as_array() for s in self.samples])


def channel_map(channels):
    """Channels keyed by Modality from a StreamBundle or any mapping."""
    if hasattr(channels, 'channels'):
        channels = channels.channels()
    return {Modality(k): v for k, v in channels.items()}
