from dataclasses import dataclass

import numpy as np

from ..constants import Constants, Modality, ResampleMethod
from ..core.quaternion import quat_slerp
from ..exceptions import InvalidArgumentError

COMPATIBLE_METHODS = {
    Modality.ACTION: (ResampleMethod.HOLD, ResampleMethod.NEAREST),
    Modality.STATE: (ResampleMethod.LINEAR, ResampleMethod.HOLD, ResampleMethod.NEAREST),
    Modality.POSE: (ResampleMethod.SLERP, ResampleMethod.HOLD, ResampleMethod.NEAREST),
    Modality.FRAME: (ResampleMethod.NEAREST,),
}
DEFAULT_METHODS = {modality: methods[0] for modality, methods in COMPATIBLE_METHODS.items()}


@dataclass(frozen=True, eq=False)
class ResampledSeries:
    """
    A channel evaluated on a reference grid.
    Attributes
    ----------
    grid : numpy.ndarray
        int64 nanosecond grid.
    values : numpy.ndarray
        (n, d) values, NaN rows where missing. Frames carry no values.
    source_index : numpy.ndarray
        Index of the source sample used by hold/nearest, -1 otherwise or when missing.
    missing : numpy.ndarray
        True where the source time falls outside the channel span.
    """
    modality: Modality
    method: ResampleMethod
    grid: np.ndarray
    values: np.ndarray
    source_index: np.ndarray
    missing: np.ndarray


def _nearest(source, query):
    right = np.clip(np.searchsorted(source, query, side='left'), 0, len(source) - 1)
    left = np.clip(right - 1, 0, len(source) - 1)
    take_left = np.abs(query - source[left]) <= np.abs(source[right] - query)
    return np.where(take_left, left, right)


def resample_channel(channel, grid, offset_ms=0.0, method=None):
    """
    Evaluate a channel at reference grid times.
    Parameters
    ----------
    channel : Channel
    grid : array-like
        Strictly increasing nanosecond timestamps.
    offset_ms : float
        Grid time t is read from the channel at ``t - offset_ms``.
    method : ResampleMethod or str, optional
        linear (state), slerp (pose: linear position, slerp orientation),
        hold (last sample at or before, for at most one sampling period),
        nearest (ties go to the earlier sample). Defaults per modality:
        action hold, state linear, pose slerp, frame nearest.
    Returns
    -------
    ResampledSeries
        Grid points outside the channel span are missing, never extrapolated.
    """
    grid = np.asarray(grid, dtype=np.int64)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError('grid must be a strictly increasing 1-D sequence')
    try:
        method = DEFAULT_METHODS[channel.modality] if method is None else ResampleMethod(method)
    except ValueError as exc:
        raise InvalidArgumentError(f"unknown resampling method {method!r}") from exc
    if method not in COMPATIBLE_METHODS[channel.modality]:
        raise InvalidArgumentError(
            f'{method.value} resampling is not defined for {channel.modality.value} channels')
    if not channel.samples:
        raise InvalidArgumentError(f'cannot resample an empty {channel.modality.value} channel')

    source = channel.timestamps
    query = grid - int(round(offset_ms * Constants.NS_PER_MS))
    end = source[-1]
    if method is ResampleMethod.HOLD:
        # a held sample stays valid for one sampling period: the nominal one, or
        # the median observed interval when the stream is sparser than nominal
        period = Constants.NS_PER_S / channel.nominal_rate
        if len(source) >= 2:
            period = max(period, float(np.median(np.diff(source))))
        end = source[-1] + int(round(period)) - 1
    missing = (query < source[0]) | (query > end)
    inside = ~missing
    source_index = np.full(len(grid), -1, dtype=np.int64)

    if channel.modality is Modality.FRAME:
        source_index[inside] = _nearest(source, query[inside])
        return ResampledSeries(channel.modality, method, grid, np.empty((len(grid), 0)),
                               source_index, missing)

    data = channel.values()
    values = np.full((len(grid), data.shape[1]), np.nan)
    if method is ResampleMethod.HOLD:
        source_index[inside] = np.searchsorted(source, query[inside], side='right') - 1
        values[inside] = data[source_index[inside]]
    elif method is ResampleMethod.NEAREST:
        source_index[inside] = _nearest(source, query[inside])
        values[inside] = data[source_index[inside]]
    else:
        times = source.astype(float)
        q = query[inside].astype(float)
        # state angles or pose position
        for column in range(3):
            values[inside, column] = np.interp(q, times, data[:, column])
        if method is ResampleMethod.SLERP and inside.any():
            values[inside, 3:] = [_slerp_at(source, data[:, 3:], t) for t in query[inside]]
    return ResampledSeries(channel.modality, method, grid, values, source_index, missing)


def _slerp_at(source, quats, t):
    right = int(np.searchsorted(source, t, side='left'))
    if source[right] == t:
        return quats[right]
    left = right - 1
    u = (t - source[left]) / (source[right] - source[left])
    return quat_slerp(quats[left], quats[right], float(u))
