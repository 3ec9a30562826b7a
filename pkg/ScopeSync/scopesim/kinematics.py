"""Constant-curvature model of the bendable distal segment.

The two bend angles set the bending plane ``phi = atan2(theta_y, theta_x)`` and
the total bend ``theta = hypot(theta_x, theta_y)``. The segment is a circular
arc of length ``segment_length_m`` mounted on a base that advances along the
lumen axis with insertion.
"""
import numpy as np

from ..core.quaternion import quat_from_two_vectors, quat_to_matrix
from ..core.types import PoseSample
from .config import ScopeConfig


def _compose(q, r):
    """Hamilton product of one quaternion with each row of ``r``."""
    w0, x0, y0, z0 = q
    w1, x1, y1, z1 = r.T
    return np.column_stack([
        w0 * w1 - x0 * x1 - y0 * y1 - z0 * z1,
        w0 * x1 + x0 * w1 + y0 * z1 - z0 * y1,
        w0 * y1 - x0 * z1 + y0 * w1 + z0 * x1,
        w0 * z1 + x0 * y1 - y0 * x1 + z0 * w1,
    ])


def tip_poses(bend_x_deg, bend_y_deg, feed_deg, cfg=None):
    """
    Vectorized constant-curvature forward kinematics.
    Parameters
    ----------
    bend_x_deg, bend_y_deg, feed_deg : array-like
        Output shaft degrees, equal lengths.
    cfg : ScopeConfig, optional
    Returns
    -------
    tuple of numpy.ndarray
        (n, 3) positions in metres and (n, 4) unit quaternions (w, x, y, z).
    """
    cfg = cfg or ScopeConfig()
    theta_x = np.radians(np.atleast_1d(np.asarray(bend_x_deg, dtype=float)))
    theta_y = np.radians(np.atleast_1d(np.asarray(bend_y_deg, dtype=float)))
    feed = np.atleast_1d(np.asarray(feed_deg, dtype=float))

    theta = np.hypot(theta_x, theta_y)
    theta = np.minimum(theta, np.radians(cfg.max_bend_deg))
    phi = np.arctan2(theta_y, theta_x)
    length = cfg.segment_length_m

    # (1 - cos t) / t and sin t / t written with sinc so t = 0 is exact
    radial = length * (theta / 2.0) * np.sinc(theta / (2.0 * np.pi)) ** 2
    axial = length * np.sinc(theta / np.pi)
    insertion_m = feed * cfg.feed_mm_per_deg / 1000.0

    local = np.column_stack([radial * np.cos(phi), radial * np.sin(phi), axial + insertion_m])
    half = theta / 2.0
    local_q = np.column_stack([np.cos(half), -np.sin(phi) * np.sin(half),
                               np.cos(phi) * np.sin(half), np.zeros_like(half)])

    base_q = quat_from_two_vectors([0.0, 0.0, 1.0], cfg.lumen_axis)
    positions = local @ quat_to_matrix(base_q).T
    orientations = _compose(base_q, local_q)
    orientations /= np.linalg.norm(orientations, axis=1, keepdims=True)
    return positions, orientations


def tip_pose(state, cfg=None):
    """
    Tip pose of one simulator state.
    Parameters
    ----------
    state : ScopeState
    cfg : ScopeConfig, optional
    Returns
    -------
    PoseSample
    """
    positions, orientations = tip_poses([state.motor_bend_x_deg], [state.motor_bend_y_deg],
                                        [state.motor_feed_deg], cfg)
    return PoseSample(t=state.t, position=tuple(positions[0]), orientation=tuple(orientations[0]))
