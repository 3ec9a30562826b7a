import math
from dataclasses import dataclass

import numpy as np

from ..constants import Constants
from ..core.types import ActionSample, Timestamp
from ..exceptions import InvalidArgumentError
from .config import ScopeConfig, TransmissionConfig


@dataclass(frozen=True)
class ScopeState:
    """True (unquantized) output shaft angles at time ``t``."""
    motor_bend_x_deg: float = 0.0
    motor_bend_y_deg: float = 0.0
    motor_feed_deg: float = 0.0
    t: Timestamp = 0

    def as_array(self):
        return np.array([self.motor_bend_x_deg, self.motor_bend_y_deg, self.motor_feed_deg])


def _toward_zero(value, limit):
    if value > 0:
        return max(0.0, value - limit)
    return min(0.0, value + limit)


def _advance(angles, command, dt, speed, max_bend):
    """One rate-control update on plain floats.

    ``command`` is (bend_x, bend_y, insertion, home).
    """
    x, y, feed = angles
    bend_x, bend_y, insertion, home = command
    if home:
        reach = speed * dt
        return _toward_zero(x, reach), _toward_zero(y, reach), _toward_zero(feed, reach)
    x = min(max_bend, max(-max_bend, x + bend_x * speed * dt))
    y = min(max_bend, max(-max_bend, y + bend_y * speed * dt))
    return x, y, feed + insertion * speed * dt


def step(state, action, dt, tcfg=None, scfg=None):
    """
    Integrate one action over ``dt`` seconds.
    Parameters
    ----------
    state : ScopeState
    action : ActionSample
        Velocity command; a set home flag drives every axis to 0 at full speed.
    dt : float
        Seconds, > 0.
    tcfg : TransmissionConfig, optional
    scfg : ScopeConfig, optional
    Returns
    -------
    ScopeState
    """
    tcfg = tcfg or TransmissionConfig()
    scfg = scfg or ScopeConfig()
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f'dt must be positive, got {dt}')
    command = (action.bend_x, action.bend_y, action.insertion, action.home)
    if not all(math.isfinite(c) for c in command):
        raise InvalidArgumentError(f'non-finite action {action}')
    x, y, feed = _advance((state.motor_bend_x_deg, state.motor_bend_y_deg, state.motor_feed_deg),
                          command, dt, tcfg.max_motor_speed_dps, scfg.max_bend_deg)
    return ScopeState(x, y, feed, state.t + int(round(dt * Constants.NS_PER_S)))


def integrate(commands, dt, initial=None, tcfg=None, scfg=None):
    """
    Run :func:`step` over a uniform grid of commands.
    Parameters
    ----------
    commands : numpy.ndarray
        (n, 4) actions, each held for ``dt``.
    dt : float
    initial : ScopeState, optional
    Returns
    -------
    numpy.ndarray
        (n + 1, 3) angles, row 0 is the initial state.
    """
    tcfg = tcfg or TransmissionConfig()
    scfg = scfg or ScopeConfig()
    commands = np.asarray(commands, dtype=float)
    if not np.all(np.isfinite(commands)):
        raise InvalidArgumentError('non-finite action in command sequence')
    start = (initial or ScopeState()).as_array()
    speed = tcfg.max_motor_speed_dps
    max_bend = scfg.max_bend_deg

    if not np.any(commands[:, 3]):
        angles = np.vstack([start, start + np.cumsum(commands[:, :3] * (speed * dt), axis=0)])
        if np.all(np.abs(angles[:, :2]) <= max_bend):
            return angles

    angles = np.empty((len(commands) + 1, 3))
    angles[0] = start
    current = tuple(start)
    for index, command in enumerate(commands):
        current = _advance(current, command, dt, speed, max_bend)
        angles[index + 1] = current
    return angles


def quantize(angles, tcfg, scfg):
    """Encoder readings: nearest multiple of the per-axis step, bends clamped."""
    steps = np.asarray(tcfg.quantization_deg)
    ticks = np.rint(np.asarray(angles) / steps)
    max_ticks = np.floor(scfg.max_bend_deg / steps[0])
    ticks[..., :2] = np.clip(ticks[..., :2], -max_ticks, max_ticks)
    return ticks * steps


def commanded_trajectory(actions, times_s, tcfg=None):
    """
    Position-like integral of rate commands, output shaft degrees.
    Parameters
    ----------
    actions : numpy.ndarray
        (n, 4) actions on a grid.
    times_s : numpy.ndarray
        (n,) grid times.
    Returns
    -------
    numpy.ndarray
        (n, 3) trapezoidal cumulative integral; home rows contribute nothing.
    """
    tcfg = tcfg or TransmissionConfig()
    actions = np.asarray(actions, dtype=float)
    velocity = np.where(actions[:, 3:4] > 0, 0.0, actions[:, :3]) * tcfg.max_motor_speed_dps
    if len(actions) == 0:
        return np.empty((0, 3))
    increments = 0.5 * (velocity[1:] + velocity[:-1]) * np.diff(times_s)[:, None]
    return np.vstack([np.zeros(3), np.cumsum(increments, axis=0)])


def as_action(command, t):
    return ActionSample(t=int(t), bend_x=float(command[0]), bend_y=float(command[1]),
                        insertion=float(command[2]), home=int(command[3]))
