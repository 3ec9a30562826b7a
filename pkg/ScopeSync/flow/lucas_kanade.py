import json
import logging
from dataclasses import dataclass
from multiprocessing.pool import ThreadPool

import numpy as np

from ..constants import Constants
from ..exceptions import InvalidArgumentError, LowConfidenceError

DEFAULT_WINDOW = 15
DEFAULT_CONDITIONING = 1e-3


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float


@dataclass(frozen=True)
class FlowVector:
    """Displacement in pixels per frame; NaN when not valid."""
    dx: float
    dy: float
    valid: bool
    conditioning: float


@dataclass(frozen=True, eq=False)
class MotionSignal:
    """Per frame-pair signal stamped at the pair midpoints.

    ``missing`` marks pairs without a valid keypoint; their values are
    linearly interpolated from the neighbours.
    """
    t: np.ndarray
    values: np.ndarray
    missing: np.ndarray

    def __len__(self):
        return len(self.values)


def load_keypoints(path):
    """Keypoints from a JSON list of ``{x, y}`` objects."""
    with open(path, 'r') as handle:
        points = json.load(handle)
    try:
        return [Keypoint(float(p['x']), float(p['y'])) for p in points]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f'{path}: keypoints must be a list of {{x, y}}') from exc


def _check_keypoint(kp, shape, half):
    height, width = shape
    margin = half + 1
    cx, cy = int(round(kp.x)), int(round(kp.y))
    if not (margin <= cx < width - margin and margin <= cy < height - margin):
        raise InvalidArgumentError(
            f'keypoint ({kp.x}, {kp.y}) is closer than {margin} px to the {width}x{height} frame border')
    return cx, cy


def _structure(image_a, image_b, cx, cy, half):
    """Central-difference gradients of the mean image and the temporal difference."""
    rows = slice(cy - half - 1, cy + half + 2)
    cols = slice(cx - half - 1, cx + half + 2)
    a = image_a[rows, cols].astype(float)
    b = image_b[rows, cols].astype(float)
    mean = 0.5 * (a + b)
    ix = 0.5 * (mean[1:-1, 2:] - mean[1:-1, :-2])
    iy = 0.5 * (mean[2:, 1:-1] - mean[:-2, 1:-1])
    it = b[1:-1, 1:-1] - a[1:-1, 1:-1]
    return ix, iy, it


def _tensor(ix, iy, relative):
    tensor = np.array([[np.sum(ix * ix), np.sum(ix * iy)],
                       [np.sum(ix * iy), np.sum(iy * iy)]])
    smallest = float(np.linalg.eigvalsh(tensor)[0])
    threshold = relative * ix.size * float(np.max(ix * ix + iy * iy))
    return tensor, smallest, smallest > 0 and smallest >= threshold


def lucas_kanade(prev, next, kps, window=DEFAULT_WINDOW, conditioning=DEFAULT_CONDITIONING):
    """
    Single-level Lucas-Kanade flow at each keypoint.
    Parameters
    ----------
    prev, next : FrameSample
        Same dimensions.
    kps : list of Keypoint
        Window centres, rounded to the nearest pixel.
    window : int
        Odd window side, >= 5.
    conditioning : float
        A flow is valid when the smaller structure tensor eigenvalue is
        positive and at least ``conditioning * window area * max |grad|^2``.
    Returns
    -------
    list of FlowVector
    """
    if prev.pixels.shape != next.pixels.shape:
        raise InvalidArgumentError(
            f'frame dimensions differ: {prev.pixels.shape} and {next.pixels.shape}')
    if window < 5 or window % 2 == 0:
        raise InvalidArgumentError(f'window must be odd and >= 5, got {window}')
    half = window // 2
    flows = []
    for kp in kps:
        cx, cy = _check_keypoint(kp, prev.pixels.shape, half)
        ix, iy, it = _structure(prev.pixels, next.pixels, cx, cy, half)
        tensor, smallest, valid = _tensor(ix, iy, conditioning)
        if not valid:
            flows.append(FlowVector(np.nan, np.nan, False, smallest))
            continue
        dx, dy = np.linalg.solve(tensor, -np.array([np.sum(ix * it), np.sum(iy * it)]))
        flows.append(FlowVector(float(dx), float(dy), True, smallest))
    return flows


def select_keypoints(frame, n=5, window=DEFAULT_WINDOW, spacing=None):
    """
    The ``n`` best conditioned points of a regular grid.
    Parameters
    ----------
    frame : FrameSample
    n : int
    window : int
    spacing : int, optional
        Grid step in pixels, defaults to ``window``.
    Returns
    -------
    list of Keypoint
        Ordered by decreasing conditioning; ties keep grid order.
    """
    half = window // 2
    spacing = spacing or window
    margin = half + 1
    height, width = frame.pixels.shape
    xs = range(margin, width - margin, spacing)
    ys = range(margin, height - margin, spacing)
    candidates, scores = [], []
    for y in ys:
        for x in xs:
            ix, iy, _ = _structure(frame.pixels, frame.pixels, x, y, half)
            _, smallest, _ = _tensor(ix, iy, 0.0)
            candidates.append(Keypoint(float(x), float(y)))
            scores.append(smallest)
    if len(candidates) < n:
        raise InvalidArgumentError(f'frame too small for {n} keypoints with window {window}')
    order = np.argsort(-np.asarray(scores), kind='stable')[:n]
    return [candidates[i] for i in order]


def _pair_flows(frames, kps, window, pool_size):
    samples = frames.samples
    if len(samples) < 2:
        raise InvalidArgumentError(f'need at least 2 frames, got {len(samples)}')
    if not kps:
        raise InvalidArgumentError('need at least one keypoint')

    def flow_of_pair(index):
        flows = lucas_kanade(samples[index], samples[index + 1], kps, window)
        return [(f.dx, f.dy) for f in flows], [f.valid for f in flows]

    pairs = range(len(samples) - 1)
    if pool_size == 1:
        results = [flow_of_pair(i) for i in pairs]
    else:
        with ThreadPool(pool_size) as executor:
            results = executor.map(flow_of_pair, pairs)
    vectors = np.array([r[0] for r in results], dtype=float)
    valid = np.array([r[1] for r in results], dtype=bool)
    stamps = frames.timestamps
    midpoints = (stamps[:-1] + stamps[1:]) // 2
    return midpoints, np.diff(stamps) / Constants.NS_PER_S, vectors, valid


def _fill_missing(values, missing, max_missing_fraction):
    if missing.mean() > max_missing_fraction:
        raise LowConfidenceError(
            f'{int(missing.sum())} of {len(missing)} frame pairs have no valid keypoint')
    if missing.any():
        logging.warning(f"{int(missing.sum())} frame pairs without valid flow, interpolating")
        index = np.arange(len(values))
        values = values.copy()
        values[missing] = np.interp(index[missing], index[~missing], values[~missing])
    return values


def motion_signal(frames, kps, window=DEFAULT_WINDOW, pool_size=1, max_missing_fraction=0.5):
    """
    Mean flow magnitude over valid keypoints for every consecutive frame pair.
    Parameters
    ----------
    frames : Channel
        Frame channel with at least 2 frames.
    kps : list of Keypoint
    window : int
    pool_size : int
        Threads evaluating frame pairs; output order is unaffected.
    max_missing_fraction : float
    Returns
    -------
    MotionSignal
        Pixels per frame, length ``len(frames) - 1``.
    """
    midpoints, _, vectors, valid = _pair_flows(frames, kps, window, pool_size)
    magnitude = np.where(valid, np.hypot(vectors[..., 0], vectors[..., 1]), 0.0)
    counts = valid.sum(axis=1)
    missing = counts == 0
    values = np.zeros(len(counts))
    values[~missing] = magnitude[~missing].sum(axis=1) / counts[~missing]
    return MotionSignal(midpoints, _fill_missing(values, missing, max_missing_fraction), missing)


def signed_motion_signal(frames, kps, window=DEFAULT_WINDOW, pool_size=1, max_missing_fraction=0.5):
    """
    Velocity-like video signal: mean keypoint flow per second projected on
    its principal direction.
    Returns
    -------
    MotionSignal
        Pixels per second; the sign of the principal direction is arbitrary.
    """
    midpoints, intervals, vectors, valid = _pair_flows(frames, kps, window, pool_size)
    counts = valid.sum(axis=1)
    missing = counts == 0
    mean = np.zeros((len(counts), 2))
    summed = np.where(valid[..., None], vectors, 0.0).sum(axis=1)
    mean[~missing] = summed[~missing] / counts[~missing, None]
    velocity = mean / intervals[:, None]
    present = velocity[~missing]
    if len(present) == 0:
        raise LowConfidenceError('no frame pair has a valid keypoint')
    _, _, vt = np.linalg.svd(present, full_matrices=False)
    projected = velocity @ vt[0]
    return MotionSignal(midpoints, _fill_missing(projected, missing, max_missing_fraction), missing)
