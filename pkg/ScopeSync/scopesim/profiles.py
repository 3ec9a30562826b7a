import json
import logging

import numpy as np
import pandas as pd

from ..constants import Axis, Constants
from ..exceptions import InvalidArgumentError
from .transmission import as_action

KNOT_COLUMNS = ['t_s', 'bend_x', 'bend_y', 'insertion', 'home']
AXIS_COLUMN = {Axis.BEND_X: 0, Axis.BEND_Y: 1, Axis.INSERTION: 2}


class CommandProfile:
    """Operator command as a function of time."""

    def sample(self, t_s):
        """(n, 4) actions (bend_x, bend_y, insertion, home) at ``t_s`` seconds."""
        raise NotImplementedError

    def actions(self, t_ns):
        """ActionSamples at integer nanosecond timestamps."""
        t_ns = np.asarray(t_ns, dtype=np.int64)
        commands = self.sample(t_ns / Constants.NS_PER_S)
        return [as_action(command, t) for command, t in zip(commands, t_ns)]

    def to_dict(self):
        raise NotImplementedError


class SinusoidProfile(CommandProfile):
    """``amplitude * sin(2 pi freq t)`` on one axis, zeros elsewhere."""

    def __init__(self, freq, amplitude, axis=Axis.BEND_X):
        self.freq = float(freq)
        self.amplitude = float(amplitude)
        self.axis = Axis(axis)

    def sample(self, t_s):
        t_s = np.atleast_1d(np.asarray(t_s, dtype=float))
        commands = np.zeros((len(t_s), 4))
        commands[:, AXIS_COLUMN[self.axis]] = self.amplitude * np.sin(2.0 * np.pi * self.freq * t_s)
        return commands

    def to_dict(self):
        return {'kind': 'sinusoid', 'freq': self.freq, 'amplitude': self.amplitude,
                'axis': self.axis.value}


class KnotProfile(CommandProfile):
    """
    Piecewise command from knots.
    Continuous axes are linearly interpolated between knots, ``home`` is held
    from the last knot at or before t. Outside the knot span the end knots hold.
    Parameters
    ----------
    knots : pandas.DataFrame
        Columns ``t_s, bend_x, bend_y, insertion, home``; ``t_s`` strictly increasing.
    """

    def __init__(self, knots):
        knots = pd.DataFrame(knots)
        missing = set(KNOT_COLUMNS) - set(knots.columns)
        if missing:
            raise InvalidArgumentError(f'profile knots lack columns {sorted(missing)}')
        knots = knots[KNOT_COLUMNS].astype(float)
        if knots.empty:
            raise InvalidArgumentError('profile needs at least one knot')
        if not np.all(np.isfinite(knots.values)):
            raise InvalidArgumentError('profile knots must be finite')
        if (knots.t_s.diff().dropna() <= 0).any():
            raise InvalidArgumentError('profile knot times must be strictly increasing')
        if (knots[['bend_x', 'bend_y', 'insertion']].abs().values > 1).any():
            raise InvalidArgumentError('profile knot values must lie in [-1, 1]')
        if not knots.home.isin([0.0, 1.0]).all():
            raise InvalidArgumentError('profile home flags must be 0 or 1')
        self.knots = knots.reset_index(drop=True)

    def sample(self, t_s):
        t_s = np.atleast_1d(np.asarray(t_s, dtype=float))
        knot_t = self.knots.t_s.values
        commands = np.empty((len(t_s), 4))
        for column, name in enumerate(KNOT_COLUMNS[1:4]):
            commands[:, column] = np.interp(t_s, knot_t, self.knots[name].values)
        held = np.clip(np.searchsorted(knot_t, t_s, side='right') - 1, 0, len(knot_t) - 1)
        commands[:, 3] = self.knots.home.values[held]
        return commands

    def to_dict(self):
        return {'kind': 'knots', 'knots': self.knots.to_dict(orient='records')}

    @classmethod
    def from_json(cls, path):
        with open(path, 'r') as handle:
            try:
                knots = json.load(handle)
            except json.JSONDecodeError as exc:
                raise InvalidArgumentError(f'{path}: not a JSON profile ({exc})') from exc
        if not isinstance(knots, list):
            raise InvalidArgumentError(f'{path}: profile must be a JSON array of knots')
        logging.info(f"Loaded {len(knots)} profile knots from {path}")
        return cls(pd.DataFrame(knots))

    def to_json(self, path):
        with open(path, 'w') as handle:
            json.dump(self.knots.to_dict(orient='records'), handle, indent=2)


def sinusoid_profile(freq, amplitude, axis=Axis.BEND_X):
    """
    Single-axis sinusoidal excitation.
    Parameters
    ----------
    freq : float
        Hz, > 0.
    amplitude : float
        Normalized, |amplitude| <= 1.
    axis : Axis or str
    Returns
    -------
    SinusoidProfile
    """
    if not (np.isfinite(freq) and freq > 0):
        raise InvalidArgumentError(f'freq must be positive, got {freq}')
    if not (np.isfinite(amplitude) and abs(amplitude) <= 1):
        raise InvalidArgumentError(f'amplitude must lie in [-1, 1], got {amplitude}')
    try:
        axis = Axis(axis)
    except ValueError as exc:
        raise InvalidArgumentError(f'unknown axis {axis!r}') from exc
    return SinusoidProfile(freq, amplitude, axis)


def random_profile(duration, seed, knot_interval_s=2.0, amplitude=0.8):
    """Teleoperation-like command with random knots on all three axes.

    The first knot is at rest; ``home`` is never set.
    """
    if not duration > 0 or not knot_interval_s > 0:
        raise InvalidArgumentError('duration and knot_interval_s must be positive')
    if not 0 <= amplitude <= 1:
        raise InvalidArgumentError(f'amplitude must lie in [0, 1], got {amplitude}')
    rng = np.random.default_rng(seed)
    t_s = np.arange(0.0, duration + knot_interval_s, knot_interval_s)
    values = rng.uniform(-amplitude, amplitude, size=(len(t_s), 3))
    values[0] = 0.0
    knots = pd.DataFrame(values, columns=['bend_x', 'bend_y', 'insertion'])
    knots.insert(0, 't_s', t_s)
    knots['home'] = 0.0
    return KnotProfile(knots)


def profile_from_dict(data):
    """Inverse of ``CommandProfile.to_dict``."""
    if data.get('kind') == 'sinusoid':
        return sinusoid_profile(data['freq'], data['amplitude'], data['axis'])
    if data.get('kind') == 'knots':
        return KnotProfile(pd.DataFrame(data['knots']))
    raise InvalidArgumentError(f"unknown profile kind {data.get('kind')!r}")
