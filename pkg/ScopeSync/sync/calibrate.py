import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from ..constants import Constants, Modality
from ..core.types import channel_map
from ..exceptions import FormatError, InvalidArgumentError
from ..flow.lucas_kanade import DEFAULT_WINDOW, select_keypoints, signed_motion_signal
from .fit import fit_sinusoid, phase_offset

MEASURED = (Modality.ACTION, Modality.STATE, Modality.POSE)


@dataclass(frozen=True)
class OffsetCalibration:
    """
    Constant per-channel time offsets relative to the frame channel.
    Attributes
    ----------
    offsets_ms : dict
        Modality value to milliseconds; positive means the channel reports
        events later than the video does. ``frame`` is always 0.
    reference : str
        Always ``'frame'``.
    fits : dict
        Per-channel fit summaries, informational only.
    """
    offsets_ms: Dict[str, float]
    reference: str = Modality.FRAME.value
    fits: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.reference != Modality.FRAME.value:
            raise InvalidArgumentError(f'calibration reference must be frame, got {self.reference!r}')
        offsets = {}
        for modality in MEASURED:
            if modality.value not in self.offsets_ms:
                raise InvalidArgumentError(f'calibration has no {modality.value} offset')
            value = float(self.offsets_ms[modality.value])
            if not math.isfinite(value):
                raise InvalidArgumentError(f'{modality.value} offset is not finite')
            offsets[modality.value] = value
        unknown = set(self.offsets_ms) - {m.value for m in Modality}
        if unknown:
            raise InvalidArgumentError(f'unknown calibration channels {sorted(unknown)}')
        if float(self.offsets_ms.get(Modality.FRAME.value, 0.0)) != 0.0:
            raise InvalidArgumentError('frame offset must be 0 in a frame-referenced calibration')
        offsets[Modality.FRAME.value] = 0.0
        object.__setattr__(self, 'offsets_ms', offsets)

    def offset(self, modality):
        return self.offsets_ms[Modality(modality).value]

    @classmethod
    def zero(cls):
        return cls({m.value: 0.0 for m in MEASURED})

    @classmethod
    def from_latencies(cls, latency_ms):
        """Ground truth calibration from injected per-channel latencies."""
        latency_ms = getattr(latency_ms, 'latency_ms', latency_ms)
        frame = float(latency_ms.get(Modality.FRAME.value, 0.0))
        return cls({m.value: float(latency_ms.get(m.value, 0.0)) - frame for m in MEASURED})

    def to_dict(self):
        return {'reference': self.reference,
                'offsets_ms': {m.value: self.offsets_ms[m.value] for m in MEASURED}}

    @classmethod
    def from_dict(cls, data, path=None):
        try:
            return cls(offsets_ms=dict(data['offsets_ms']), reference=data.get('reference', 'frame'))
        except (KeyError, TypeError, AttributeError) as exc:
            raise FormatError(f'not a calibration document ({exc})', path=path) from exc

    def to_json(self, path):
        with open(path, 'w') as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write('\n')

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, 'r') as handle:
                data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatError(f'invalid JSON: {exc.msg}', path=path, line=exc.lineno) from exc
        try:
            return cls.from_dict(data, path=path)
        except InvalidArgumentError as exc:
            raise FormatError(str(exc), path=path) from exc


def _seconds(stamps):
    return np.asarray(stamps, dtype=float) / Constants.NS_PER_S


def _fit_window(freq, channels):
    """Whole periods after the first one, inside every channel's span."""
    period = 1.0 / freq
    end = min(_seconds(c.timestamps[-1:])[0] for c in channels.values())
    n_periods = int(math.floor((end - period) / period + 1e-9))
    if n_periods < 1:
        raise InvalidArgumentError(
            f'need at least two {period:g} s periods of data at {freq} Hz, got {end:.3f} s')
    return period, period + n_periods * period


def _fit_in(t_s, y, freq, window):
    inside = (t_s >= window[0]) & (t_s < window[1])
    return fit_sinusoid(t_s[inside], y[inside], freq)


def _principal_projection(values):
    centered = values - values.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return centered @ vt[0]


def _signed_offset(ref, sig, period):
    """Offset of a signal whose sign is arbitrary: flip it into a quarter period."""
    offset = phase_offset(ref, sig)
    if abs(offset) > 250.0 * period:
        sig = sig.negated()
        offset = phase_offset(ref, sig)
    return offset, sig


def characterize_latency(channels, freq, axis=None, keypoints=None, window=DEFAULT_WINDOW,
                         n_keypoints=5, pool_size=1):
    """
    Estimate per-channel offsets from a single-axis sinusoidal excitation.
    Parameters
    ----------
    channels : StreamBundle or dict
        The four raw channels, keyed by Modality.
    freq : float
        Excitation frequency in Hz.
    axis : int, optional
        Excited action column (0 bend_x, 1 bend_y, 2 insertion); the column of
        largest variance when omitted.
    keypoints : list of Keypoint, optional
        Flow keypoints; the best conditioned grid points of the first frame
        when omitted.
    window, n_keypoints, pool_size
        Passed to the flow functions.
    Returns
    -------
    OffsetCalibration
    Notes
    -----
    Every channel is compared in velocity form against the action. Positions
    (state axis, pose principal projection) are fitted then differentiated;
    action and signed optical flow are fitted as they are. Fits use whole
    periods only and skip the first one, where delayed channels still read
    the pre-start rest state.
    """
    channels = channel_map(channels)
    missing = [m.value for m in Modality if m not in channels or len(channels[m]) == 0]
    if missing:
        raise InvalidArgumentError(f'characterization needs non-empty channels, missing {missing}')
    period, end = _fit_window(freq, channels)
    window_s = (period, end)

    actions = channels[Modality.ACTION].values()
    if axis is None:
        axis = int(np.argmax(actions[:, :3].var(axis=0)))
    logging.info(f"Characterizing at {freq} Hz on action column {axis}, "
                 f"fit window [{window_s[0]:g}, {window_s[1]:g}) s")

    reference = _fit_in(_seconds(channels[Modality.ACTION].timestamps), actions[:, axis], freq, window_s)
    state = _fit_in(_seconds(channels[Modality.STATE].timestamps),
                    channels[Modality.STATE].values()[:, axis], freq, window_s).derivative()
    pose_values = channels[Modality.POSE].values()[:, :3]
    pose = _fit_in(_seconds(channels[Modality.POSE].timestamps),
                   _principal_projection(pose_values), freq, window_s).derivative()

    frames = channels[Modality.FRAME]
    if keypoints is None:
        keypoints = select_keypoints(frames.samples[0], n=n_keypoints, window=window)
    flow = signed_motion_signal(frames, keypoints, window=window, pool_size=pool_size)
    video = _fit_in(_seconds(flow.t), flow.values, freq, window_s)

    latency = {Modality.ACTION.value: 0.0}
    fits = {Modality.ACTION.value: reference.to_dict()}
    latency[Modality.STATE.value] = phase_offset(reference, state)
    fits[Modality.STATE.value] = state.to_dict()
    for modality, fit in ((Modality.POSE, pose), (Modality.FRAME, video)):
        latency[modality.value], fit = _signed_offset(reference, fit, period)
        fits[modality.value] = fit.to_dict()
    for name, value in latency.items():
        logging.info(f"{name}: {value:.1f} ms after the action, "
                     f"amplitude {fits[name]['amplitude']:.4g}, residual {fits[name]['residual_rms']:.3g}")

    frame = latency[Modality.FRAME.value]
    return OffsetCalibration({m.value: latency[m.value] - frame for m in MEASURED}, fits=fits)
