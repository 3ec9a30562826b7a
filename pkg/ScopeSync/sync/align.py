import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from ..constants import Constants, Modality
from ..core.quaternion import quat_normalize
from ..core.types import channel_map
from ..exceptions import InvalidArgumentError
from ..scopesim.transmission import commanded_trajectory
from .calibrate import OffsetCalibration
from .resample import resample_channel

FRAME_REF_FORMAT = 'frames/{:06d}.pgm'


def frame_ref(index):
    return FRAME_REF_FORMAT.format(index)


@dataclass(frozen=True)
class AlignedRecord:
    """One complete row of an aligned episode."""
    frame_index: int
    t: int
    action: Tuple[float, float, float, float]
    state: Tuple[float, float, float]
    position: Tuple[float, float, float]
    orientation: Tuple[float, float, float, float]
    frame_ref: str


@dataclass(frozen=True, eq=False)
class AlignedEpisode:
    """
    Records of every modality on the frame timestamp grid.
    Attributes
    ----------
    t_ns : numpy.ndarray
        (n,) int64 grid.
    action : numpy.ndarray
        (n, 4) bend_x, bend_y, insertion, home.
    state : numpy.ndarray
        (n, 3) output shaft degrees.
    position : numpy.ndarray
        (n, 3) metres.
    orientation : numpy.ndarray
        (n, 4) unit quaternions (w, x, y, z).
    frames : tuple of numpy.ndarray
        (height, width) uint8 images, one per record.
    calibration : OffsetCalibration
    """
    t_ns: np.ndarray
    action: np.ndarray
    state: np.ndarray
    position: np.ndarray
    orientation: np.ndarray
    frames: tuple
    calibration: OffsetCalibration

    def __post_init__(self):
        n = len(self.t_ns)
        object.__setattr__(self, 't_ns', np.asarray(self.t_ns, dtype=np.int64))
        object.__setattr__(self, 'frames', tuple(self.frames))
        shapes = {'action': 4, 'state': 3, 'position': 3, 'orientation': 4}
        for name, width in shapes.items():
            values = np.asarray(getattr(self, name), dtype=float).reshape(-1, width) if n else \
                np.empty((0, width))
            if len(values) != n:
                raise InvalidArgumentError(f'{name} has {len(values)} rows for {n} timestamps')
            object.__setattr__(self, name, values)
        if len(self.frames) != n:
            raise InvalidArgumentError(f'{len(self.frames)} frames for {n} timestamps')

    def __len__(self):
        return len(self.t_ns)

    def __eq__(self, other):
        if not isinstance(other, AlignedEpisode):
            return NotImplemented
        return (np.array_equal(self.t_ns, other.t_ns)
                and all(np.array_equal(getattr(self, name), getattr(other, name))
                        for name in ('action', 'state', 'position', 'orientation'))
                and len(self.frames) == len(other.frames)
                and all(np.array_equal(a, b) for a, b in zip(self.frames, other.frames))
                and self.calibration == other.calibration)

    def record(self, index):
        return AlignedRecord(frame_index=index, t=int(self.t_ns[index]),
                             action=tuple(self.action[index]), state=tuple(self.state[index]),
                             position=tuple(self.position[index]),
                             orientation=tuple(self.orientation[index]),
                             frame_ref=frame_ref(index))

    def records(self):
        return [self.record(i) for i in range(len(self))]

    def to_frame(self):
        """Records as a DataFrame in the on-disk column order."""
        columns = Constants.RECORD_COLUMNS
        df = pd.DataFrame({'frame_index': np.arange(len(self), dtype=np.int64), 't_ns': self.t_ns})
        blocks = ((columns[2:6], self.action), (columns[6:9], self.state),
                  (columns[9:12], self.position), (columns[12:16], self.orientation))
        for names, values in blocks:
            for i, name in enumerate(names):
                df[name] = values[:, i]
        df['action_home'] = df['action_home'].astype(np.int64)
        df['frame_ref'] = [frame_ref(i) for i in range(len(self))]
        return df[columns]

    @classmethod
    def from_frame(cls, df, frames, calibration):
        columns = Constants.RECORD_COLUMNS
        return cls(t_ns=df['t_ns'].to_numpy(dtype=np.int64),
                   action=df[columns[2:6]].to_numpy(dtype=float),
                   state=df[columns[6:9]].to_numpy(dtype=float),
                   position=df[columns[9:12]].to_numpy(dtype=float),
                   orientation=df[columns[12:16]].to_numpy(dtype=float),
                   frames=frames, calibration=calibration)

    def signal(self, modality, tcfg=None):
        """
        Position-like series used for lag analysis.
        Actions are rate commands, so they are represented by their commanded
        trajectory; state and pose use angles and positions directly.
        """
        modality = Modality(modality)
        if modality is Modality.ACTION:
            return commanded_trajectory(self.action, self.t_ns / Constants.NS_PER_S, tcfg)
        if modality is Modality.STATE:
            return self.state
        if modality is Modality.POSE:
            return self.position
        raise InvalidArgumentError('frames have no lag signal')

    @property
    def rate_hz(self):
        if len(self) < 2:
            return Constants.ALIGNED_RATE_HZ
        return float(Constants.NS_PER_S / np.mean(np.diff(self.t_ns)))


def align_episode(raw, cal, methods=None):
    """
    Resample action, state and pose onto the frame timestamps.
    Parameters
    ----------
    raw : StreamBundle or dict
        Four raw channels.
    cal : OffsetCalibration
        Channel c is read at ``t + offsets_ms[c]`` for grid time t.
    methods : dict, optional
        Resampling method per Modality, defaults per modality.
    Returns
    -------
    AlignedEpisode
        Grid points where any modality is missing are trimmed from both ends.
    """
    channels = channel_map(raw)
    methods = {Modality(k): v for k, v in (methods or {}).items()}
    for modality in Modality:
        if modality not in channels or len(channels[modality]) == 0:
            raise InvalidArgumentError(f'{modality.value} channel is empty or missing')
    frames = channels[Modality.FRAME]
    grid = frames.timestamps

    resampled = {m: resample_channel(channels[m], grid, offset_ms=-cal.offset(m), method=methods.get(m))
                 for m in (Modality.ACTION, Modality.STATE, Modality.POSE)}
    complete = ~np.logical_or.reduce([r.missing for r in resampled.values()])
    if not complete.any():
        raise InvalidArgumentError('no frame timestamp is covered by every channel after calibration')
    kept = np.flatnonzero(complete)
    first, last = kept[0], kept[-1] + 1
    logging.info(f"Aligned {last - first} of {len(grid)} frames, trimmed {first} leading "
                 f"and {len(grid) - last} trailing")

    pose = resampled[Modality.POSE].values[first:last]
    action = resampled[Modality.ACTION].values[first:last]
    action[:, 3] = np.rint(action[:, 3])
    return AlignedEpisode(t_ns=grid[first:last], action=action,
                          state=resampled[Modality.STATE].values[first:last],
                          position=pose[:, :3],
                          orientation=np.vstack([quat_normalize(q) for q in pose[:, 3:]]),
                          frames=[frames.samples[i].pixels for i in range(first, last)],
                          calibration=cal)
